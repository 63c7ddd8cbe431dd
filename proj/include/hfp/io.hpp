#pragma once

// JSON design files, result files and agent checkpoints.

#include <cmath>
#include <cstdint>
#include <cstdio>
#include <fstream>
#include <map>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "hfp/dense_net.hpp"
#include "hfp/error.hpp"
#include "hfp/model.hpp"
#include "hfp/orchestrator.hpp"
#include "hfp/ppo.hpp"

namespace hfp {

using json = nlohmann::json;

namespace detail {

inline std::string key_path(const std::string& base, const std::string& key) { return base + "/" + key; }
inline std::string index_path(const std::string& base, std::size_t i) { return base + "/" + std::to_string(i); }

[[noreturn]] inline void schema_error(const std::string& path, const std::string& why) {
  throw DesignFileError("schema", path, why);
}

inline const json& require(const json& obj, const std::string& key, const std::string& path) {
  if (!obj.is_object()) schema_error(path, "expected an object");
  auto it = obj.find(key);
  if (it == obj.end()) schema_error(key_path(path, key), "missing required field");
  return *it;
}

inline double number(const json& v, const std::string& path) {
  if (!v.is_number()) schema_error(path, "expected a number");
  const double x = v.get<double>();
  if (!std::isfinite(x)) schema_error(path, "expected a finite number");
  return x;
}

inline double positive(const json& v, const std::string& path) {
  const double x = number(v, path);
  if (!(x > 0.0)) schema_error(path, "must be > 0");
  return x;
}

inline double non_negative(const json& v, const std::string& path) {
  const double x = number(v, path);
  if (x < 0.0) schema_error(path, "must be >= 0");
  return x;
}

inline std::string string(const json& v, const std::string& path) {
  if (!v.is_string()) schema_error(path, "expected a string");
  std::string s = v.get<std::string>();
  if (s.empty()) schema_error(path, "must not be empty");
  return s;
}

inline const json& array(const json& v, const std::string& path) {
  if (!v.is_array()) schema_error(path, "expected an array");
  return v;
}

}  // namespace detail

/// Build a Design from a parsed document, validating schema and references.
inline Design design_from_json(const json& doc) {
  using namespace detail;
  if (!doc.is_object()) schema_error("", "top level must be an object");
  Design d;
  std::map<std::string, std::size_t> tech_index, block_index;

  const json& techs = array(require(doc, "technologies", ""), "/technologies");
  if (techs.empty()) schema_error("/technologies", "at least one technology is required");
  std::size_t unit_scale = 0;
  for (std::size_t i = 0; i < techs.size(); ++i) {
    const std::string p = index_path("/technologies", i);
    Technology t;
    t.id = string(require(techs[i], "id", p), key_path(p, "id"));
    t.scale_to_oldest = positive(require(techs[i], "scale_to_oldest", p), key_path(p, "scale_to_oldest"));
    t.defect_density = non_negative(require(techs[i], "defect_density", p), key_path(p, "defect_density"));
    t.alpha = positive(require(techs[i], "alpha", p), key_path(p, "alpha"));
    t.cost_per_area = positive(require(techs[i], "cost_per_area", p), key_path(p, "cost_per_area"));
    if (t.scale_to_oldest < 1.0) schema_error(key_path(p, "scale_to_oldest"), "must be >= 1 (relative to the oldest node)");
    if (t.scale_to_oldest == 1.0) ++unit_scale;
    if (!tech_index.emplace(t.id, i).second) schema_error(key_path(p, "id"), "duplicate technology id '" + t.id + "'");
    d.technologies.push_back(t);
  }
  if (unit_scale != 1) {
    schema_error("/technologies", "exactly one technology must have scale_to_oldest = 1, found " +
                                      std::to_string(unit_scale));
  }
  auto tech_ref = [&](const json& v, const std::string& path) {
    const std::string id = string(v, path);
    auto it = tech_index.find(id);
    if (it == tech_index.end()) throw DesignFileError("integrity", path, "unknown technology '" + id + "'");
    return it->second;
  };

  const json& blocks = array(require(doc, "blocks", ""), "/blocks");
  if (blocks.empty()) schema_error("/blocks", "at least one block is required");
  for (std::size_t i = 0; i < blocks.size(); ++i) {
    const std::string p = index_path("/blocks", i);
    const json& jb = blocks[i];
    Block b;
    b.id = string(require(jb, "id", p), key_path(p, "id"));
    if (!block_index.emplace(b.id, i).second) schema_error(key_path(p, "id"), "duplicate block id '" + b.id + "'");
    b.ppa.resize(d.technologies.size());
    const json& ppa = require(jb, "ppa", p);
    const std::string pp = key_path(p, "ppa");
    if (!ppa.is_object() || ppa.empty()) schema_error(pp, "expected a non-empty object keyed by technology");
    for (const auto& [tid, entry] : ppa.items()) {
      const std::string ep = key_path(pp, tid);
      auto it = tech_index.find(tid);
      if (it == tech_index.end()) throw DesignFileError("integrity", ep, "unknown technology '" + tid + "'");
      BasePpa base;
      base.area = positive(require(entry, "area", ep), key_path(ep, "area"));
      base.power = non_negative(require(entry, "power", ep), key_path(ep, "power"));
      base.tns = non_negative(require(entry, "tns", ep), key_path(ep, "tns"));
      base.kappa = entry.contains("kappa") ? non_negative(entry["kappa"], key_path(ep, "kappa")) : 0.0;
      b.ppa[it->second] = base;
    }
    const json& ratios = array(require(jb, "ratios", p), key_path(p, "ratios"));
    if (ratios.empty()) schema_error(key_path(p, "ratios"), "at least one aspect ratio is required");
    for (std::size_t k = 0; k < ratios.size(); ++k) {
      b.ratios.push_back(positive(ratios[k], index_path(key_path(p, "ratios"), k)));
    }
    if (jb.contains("hard_ip") && !jb["hard_ip"].is_null()) {
      const std::string hp = key_path(p, "hard_ip");
      HardIpLock lock;
      lock.tech = tech_ref(require(jb["hard_ip"], "tech", hp), key_path(hp, "tech"));
      lock.ratio = positive(require(jb["hard_ip"], "ratio", hp), key_path(hp, "ratio"));
      if (!b.has_tech(lock.tech)) schema_error(key_path(hp, "tech"), "hard IP technology has no PPA entry");
      if (!has_ratio_option(b, lock.ratio)) schema_error(key_path(hp, "ratio"), "hard IP ratio is not among the ratios");
      b.hard_ip = lock;
    }
    if (jb.contains("tech")) {
      b.tech = tech_ref(jb["tech"], key_path(p, "tech"));
    } else {
      b.tech = b.locked() ? b.hard_ip->tech : d.technologies.size();
      for (std::size_t t = 0; t < d.technologies.size() && b.tech == d.technologies.size(); ++t) {
        if (b.has_tech(t)) b.tech = t;
      }
    }
    if (!b.has_tech(b.tech)) schema_error(key_path(p, "tech"), "initial technology has no PPA entry");
    b.ratio = jb.contains("ratio") ? positive(jb["ratio"], key_path(p, "ratio"))
                                   : (b.locked() ? b.hard_ip->ratio
                                                 : (has_ratio_option(b, 1.0) ? 1.0 : b.ratios.front()));
    if (!has_ratio_option(b, b.ratio)) schema_error(key_path(p, "ratio"), "initial ratio is not among the ratios");
    if (b.locked() && (b.tech != b.hard_ip->tech || !same_ratio(b.ratio, b.hard_ip->ratio))) {
      schema_error(p, "hard IP initial technology/ratio must match its lock");
    }
    d.blocks.push_back(std::move(b));
  }

  if (doc.contains("nets")) {
    const json& nets = array(doc["nets"], "/nets");
    std::set<std::string> net_ids;
    for (std::size_t i = 0; i < nets.size(); ++i) {
      const std::string p = index_path("/nets", i);
      Net n;
      n.id = string(require(nets[i], "id", p), key_path(p, "id"));
      if (!net_ids.insert(n.id).second) schema_error(key_path(p, "id"), "duplicate net id '" + n.id + "'");
      const json& pins = array(require(nets[i], "pins", p), key_path(p, "pins"));
      if (pins.empty()) schema_error(key_path(p, "pins"), "a net needs at least one pin");
      std::set<std::size_t> seen;
      for (std::size_t k = 0; k < pins.size(); ++k) {
        const std::string pinp = index_path(key_path(p, "pins"), k);
        const std::string bid = string(pins[k], pinp);
        auto it = block_index.find(bid);
        if (it == block_index.end()) {
          throw DesignFileError("integrity", pinp, "net '" + n.id + "' pins unknown block '" + bid + "'");
        }
        if (!seen.insert(it->second).second) schema_error(pinp, "duplicate pin '" + bid + "'");
        n.pins.push_back(it->second);
      }
      n.weight = nets[i].contains("weight") ? non_negative(nets[i]["weight"], key_path(p, "weight")) : 1.0;
      d.nets.push_back(std::move(n));
    }
  }

  const json& dies = array(require(doc, "dies", ""), "/dies");
  if (dies.empty()) schema_error("/dies", "at least one die is required");
  std::set<std::string> die_ids;
  for (std::size_t i = 0; i < dies.size(); ++i) {
    const std::string p = index_path("/dies", i);
    Die die;
    die.id = string(require(dies[i], "id", p), key_path(p, "id"));
    if (!die_ids.insert(die.id).second) schema_error(key_path(p, "id"), "duplicate die id '" + die.id + "'");
    die.tech = tech_ref(require(dies[i], "tech", p), key_path(p, "tech"));
    d.dies.push_back(die);
  }
  return d;
}

inline Design parse_design(const std::string& text, const std::string& source = "<string>") {
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::parse_error& e) {
    throw DesignFileError("parse", source, e.what());
  }
  return design_from_json(doc);
}

inline std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open '" + path + "' for reading");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

inline void write_file(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot open '" + path + "' for writing");
  out << text;
  if (!out) throw Error("failed writing '" + path + "'");
}

inline Design load_design(const std::string& path) { return parse_design(read_file(path), path); }

inline json design_to_json(const Design& d) {
  json doc;
  doc["technologies"] = json::array();
  for (const Technology& t : d.technologies) {
    doc["technologies"].push_back({{"id", t.id},
                                   {"scale_to_oldest", t.scale_to_oldest},
                                   {"defect_density", t.defect_density},
                                   {"alpha", t.alpha},
                                   {"cost_per_area", t.cost_per_area}});
  }
  doc["blocks"] = json::array();
  for (const Block& b : d.blocks) {
    json jb{{"id", b.id}, {"ratios", b.ratios}, {"tech", d.technologies[b.tech].id}, {"ratio", b.ratio}};
    jb["ppa"] = json::object();
    for (std::size_t t = 0; t < b.ppa.size(); ++t) {
      if (!b.ppa[t]) continue;
      jb["ppa"][d.technologies[t].id] = {
          {"area", b.ppa[t]->area}, {"power", b.ppa[t]->power}, {"tns", b.ppa[t]->tns}, {"kappa", b.ppa[t]->kappa}};
    }
    if (b.hard_ip) jb["hard_ip"] = {{"tech", d.technologies[b.hard_ip->tech].id}, {"ratio", b.hard_ip->ratio}};
    doc["blocks"].push_back(std::move(jb));
  }
  doc["nets"] = json::array();
  for (const Net& n : d.nets) {
    json pins = json::array();
    for (std::size_t p : n.pins) pins.push_back(d.blocks[p].id);
    doc["nets"].push_back({{"id", n.id}, {"pins", pins}, {"weight", n.weight}});
  }
  doc["dies"] = json::array();
  for (const Die& die : d.dies) doc["dies"].push_back({{"id", die.id}, {"tech", d.technologies[die.tech].id}});
  return doc;
}

/// Canonical text form: sorted keys, two-space indent, trailing newline.
inline std::string save_design_string(const Design& d) { return design_to_json(d).dump(2) + "\n"; }

inline void save_design(const Design& d, const std::string& path) { write_file(path, save_design_string(d)); }

inline std::uint64_t fnv1a(const std::string& s) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : s) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

inline std::string hex64(std::uint64_t v) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
  return buf;
}

inline std::string design_hash(const Design& d) { return hex64(fnv1a(save_design_string(d))); }

// ---------------------------------------------------------------- configs

inline json weights_to_json(const ObjectiveWeights& w) {
  return {{"omega", w.omega}, {"beta", w.beta}, {"gamma", w.gamma}, {"tau", w.tau},
          {"n_max", w.n_max}, {"a_min_factor", w.a_min_factor}, {"a_max_factor", w.a_max_factor},
          {"die_margin", w.die_margin}, {"cost_scale_by_area", w.cost_scale_by_area}};
}

inline ObjectiveWeights weights_from_json(const json& j) {
  ObjectiveWeights w;
  w.omega = j.at("omega").get<double>();
  w.beta = j.at("beta").get<double>();
  w.gamma = j.at("gamma").get<double>();
  w.tau = j.at("tau").get<double>();
  w.n_max = j.at("n_max").get<int>();
  w.a_min_factor = j.at("a_min_factor").get<double>();
  w.a_max_factor = j.at("a_max_factor").get<double>();
  w.die_margin = j.at("die_margin").get<double>();
  w.cost_scale_by_area = j.at("cost_scale_by_area").get<bool>();
  return w;
}

inline json config_to_json(const MmfpConfig& c) {
  return {{"weights", weights_to_json(c.weights)},
          {"k_interval", c.refine.k_interval},
          {"refine_accept_any", c.refine.accept_any},
          {"min_die_spacing", c.layout.min_die_spacing},
          {"spacing_per_net", c.layout.spacing_per_net},
          {"area_penalty", c.layout.area_penalty},
          {"max_total_steps", c.max_total_steps},
          {"budget_per_die", c.budget_per_die},
          {"stop_epsilon", c.stop_epsilon},
          {"window", c.window},
          {"die_window", c.die_window},
          {"restart_stalled", c.restart_stalled},
          {"sa", {{"t_initial", c.sa.t_initial}, {"cooling", c.sa.cooling},
                  {"moves_per_temperature", c.sa.moves_per_temperature}}},
          {"ppo", {{"clip", c.ppo.clip}, {"discount", c.ppo.discount}, {"feature_height", c.ppo.feature_height},
                   {"policy_lr", c.ppo.policy_lr}, {"value_lr", c.ppo.value_lr}, {"momentum", c.ppo.momentum},
                   {"epochs", c.ppo.epochs}, {"minibatch", c.ppo.minibatch},
                   {"steps_per_trajectory", c.ppo.steps_per_trajectory},
                   {"episode_length", c.ppo.episode_length}, {"entropy_coef", c.ppo.entropy_coef},
                   {"normalize_advantages", c.ppo.normalize_advantages},
                   {"max_grad_norm", c.ppo.max_grad_norm}}}};
}

// ---------------------------------------------------------------- results

inline json breakdown_to_json(const Design& d, const ObjectiveBreakdown& bd) {
  json nets = json::array();
  for (const auto& [pair, count] : bd.inter_die_net_counts) {
    nets.push_back({{"die_a", d.dies[pair.first].id}, {"die_b", d.dies[pair.second].id}, {"count", count}});
  }
  return {{"hpwl", bd.total_hpwl}, {"power", bd.total_power}, {"cost", bd.total_cost}, {"tns", bd.total_tns},
          {"f", bd.f}, {"feasible", bd.feasible}, {"area_violation", bd.area_violation},
          {"net_violation", bd.net_violation}, {"die_areas", bd.die_areas}, {"inter_die_nets", nets}};
}

inline json solution_to_json(const Design& d, const MmfpSolution& sol, std::uint64_t seed, const MmfpConfig& cfg) {
  const Floorplan& fp = sol.floorplan;
  json blocks = json::array();
  std::vector<Rect> global(fp.block_count());
  for (std::size_t die = 0; die < fp.die_count(); ++die) {
    const DieLayout& layout = fp.die(die);
    for (std::size_t i = 0; i < layout.tree.size(); ++i) {
      const Rect& r = layout.packing.rects[i];
      global[layout.tree.node(static_cast<int>(i)).block] = {sol.die_origins[die].x + r.x,
                                                             sol.die_origins[die].y + r.y, r.w, r.h};
    }
  }
  for (std::size_t b = 0; b < fp.block_count(); ++b) {
    const Rect& r = global[b];
    blocks.push_back({{"id", d.blocks[b].id}, {"die", d.dies[fp.die_of(b)].id},
                      {"tech", d.technologies[fp.tech_of(b)].id}, {"ratio", fp.ratio_of(b)},
                      {"x", r.x}, {"y", r.y}, {"w", r.w}, {"h", r.h}});
  }
  json origins = json::array();
  for (std::size_t die = 0; die < fp.die_count(); ++die) {
    origins.push_back({{"die", d.dies[die].id}, {"x", sol.die_origins[die].x}, {"y", sol.die_origins[die].y}});
  }
  json log = json::array();
  for (const auto& rec : sol.log) log.push_back({rec.step, rec.f});
  return {{"method", to_string(sol.method)},
          {"seed", seed},
          {"design_hash", design_hash(d)},
          {"config", config_to_json(cfg)},
          {"z", fp.z()},
          {"objective", breakdown_to_json(d, sol.breakdown)},
          {"blocks", blocks},
          {"die_origins", origins},
          {"steps", sol.steps},
          {"refinements", {{"tried", sol.refinements_tried}, {"applied", sol.refinements_applied}}},
          {"iteration_log", log}};
}

inline std::string solution_to_string(const Design& d, const MmfpSolution& sol, std::uint64_t seed,
                                      const MmfpConfig& cfg) {
  return solution_to_json(d, sol, seed, cfg).dump(2) + "\n";
}

/// Re-evaluate a result document against its design. Returns the breakdown
/// computed from the recorded placement.
inline ObjectiveBreakdown reevaluate_result(const Design& d, const json& result) {
  const ObjectiveWeights w = weights_from_json(result.at("config").at("weights"));
  const double z = result.at("z").get<double>();
  std::map<std::string, std::size_t> die_index, tech_index;
  for (std::size_t i = 0; i < d.dies.size(); ++i) die_index[d.dies[i].id] = i;
  for (std::size_t i = 0; i < d.technologies.size(); ++i) tech_index[d.technologies[i].id] = i;
  std::vector<Point> origin(d.dies.size());
  for (const json& o : result.at("die_origins")) {
    origin[die_index.at(o.at("die").get<std::string>())] = {o.at("x").get<double>(), o.at("y").get<double>()};
  }
  const json& blocks = result.at("blocks");
  if (blocks.size() != d.blocks.size()) throw StateError("result block count does not match the design");
  std::vector<PlacedBlock> placed(d.blocks.size());
  std::vector<double> wmax(d.dies.size(), 0.0), hmax(d.dies.size(), 0.0);
  for (std::size_t b = 0; b < blocks.size(); ++b) {
    const json& jb = blocks[b];
    if (jb.at("id").get<std::string>() != d.blocks[b].id) throw StateError("result block order mismatch");
    PlacedBlock& p = placed[b];
    p.die = die_index.at(jb.at("die").get<std::string>());
    p.tech = tech_index.at(jb.at("tech").get<std::string>());
    p.ratio = jb.at("ratio").get<double>();
    const double x = jb.at("x").get<double>(), y = jb.at("y").get<double>();
    const double bw = jb.at("w").get<double>(), bh = jb.at("h").get<double>();
    p.center = {x + 0.5 * bw, y + 0.5 * bh};
    wmax[p.die] = std::max(wmax[p.die], x + bw - origin[p.die].x);
    hmax[p.die] = std::max(hmax[p.die], y + bh - origin[p.die].y);
  }
  std::vector<double> areas(d.dies.size());
  for (std::size_t i = 0; i < d.dies.size(); ++i) areas[i] = die_area(wmax[i], hmax[i], w.die_margin);
  return evaluate(d, placed, areas, z, w);
}

// ---------------------------------------------------------------- agents

inline json net_to_json(const DenseNet& net) {
  json layers = json::array();
  for (const DenseLayer& l : net.layers()) {
    layers.push_back({{"in", l.in}, {"out", l.out}, {"activation", to_string(l.activation)},
                      {"weights", l.weights}, {"bias", l.bias}});
  }
  return {{"layers", layers}};
}

inline DenseNet net_from_json(const json& j) {
  std::vector<DenseLayer> layers;
  for (const json& jl : j.at("layers")) {
    DenseLayer l;
    l.in = jl.at("in").get<std::size_t>();
    l.out = jl.at("out").get<std::size_t>();
    l.activation = activation_from_string(jl.at("activation").get<std::string>());
    l.weights = jl.at("weights").get<std::vector<double>>();
    l.bias = jl.at("bias").get<std::vector<double>>();
    layers.push_back(std::move(l));
  }
  return DenseNet(std::move(layers));
}

inline constexpr int kAgentFormatVersion = 1;

inline std::string agent_to_string(const PpoAgent& a) {
  json j{{"format", "hfp-ppo-agent"}, {"version", kAgentFormatVersion},
         {"policy", net_to_json(a.policy)}, {"value", net_to_json(a.value)}};
  return j.dump() + "\n";
}

inline PpoAgent agent_from_string(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
    if (j.at("format") != "hfp-ppo-agent") throw ConfigError("not an agent checkpoint");
    if (j.at("version").get<int>() != kAgentFormatVersion) throw ConfigError("unsupported agent checkpoint version");
    PpoAgent a;
    a.policy = net_from_json(j.at("policy"));
    a.value = net_from_json(j.at("value"));
    a.reset_velocity();
    return a;
  } catch (const json::exception& e) {
    throw ConfigError(std::string("malformed agent checkpoint: ") + e.what());
  }
}

inline void save_agent(const PpoAgent& a, const std::string& path) { write_file(path, agent_to_string(a)); }
inline PpoAgent load_agent(const std::string& path) { return agent_from_string(read_file(path)); }

}  // namespace hfp
