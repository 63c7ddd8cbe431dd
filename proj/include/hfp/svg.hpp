#pragma once

// SVG rendering of a multi-die floorplan.

#include <algorithm>
#include <cstdio>
#include <string>
#include <vector>

#include "hfp/io.hpp"
#include "hfp/orchestrator.hpp"

namespace hfp {

namespace detail {

inline std::string fmt(const char* f, double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, f, v);
  return buf;
}

inline std::string num(double v) { return fmt("%.3f", v); }

inline std::string escape_xml(const std::string& s) {
  std::string out;
  for (char c : s) {
    switch (c) {
      case '&': out += "&amp;"; break;
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '"': out += "&quot;"; break;
      default: out += c;
    }
  }
  return out;
}

inline const char* tech_color(std::size_t t) {
  static const char* palette[] = {"#8fb3d9", "#f2b279", "#9fd39a", "#d9a0c8", "#e6d47a", "#a8a8e0"};
  return palette[t % (sizeof palette / sizeof palette[0])];
}

}  // namespace detail

/// Die outlines, blocks colored by technology and labeled by id, and
/// inter-die nets as center-to-center polylines. y grows upwards.
inline std::string render_svg(const MmfpSolution& sol) {
  using detail::num;
  const Floorplan& fp = sol.floorplan;
  const Design& d = fp.design();
  const double margin = fp.weights().die_margin;
  const std::vector<Dims> outlines = fp.outlines();

  double width = 0.0, height = 0.0;
  for (std::size_t die = 0; die < fp.die_count(); ++die) {
    width = std::max(width, sol.die_origins[die].x - margin + outlines[die].width);
    height = std::max(height, sol.die_origins[die].y - margin + outlines[die].height);
  }
  const double pad = 10.0;
  const double W = width + 2 * pad, H = height + 2 * pad;
  auto X = [&](double x) { return num(x + pad); };
  auto Y = [&](double y) { return num(H - pad - y); };

  std::string s;
  s += "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n";
  s += "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" + num(W) + "\" height=\"" + num(H) +
       "\" viewBox=\"0 0 " + num(W) + " " + num(H) + "\">\n";
  s += "<rect x=\"0\" y=\"0\" width=\"" + num(W) + "\" height=\"" + num(H) + "\" fill=\"white\"/>\n";

  for (std::size_t die = 0; die < fp.die_count(); ++die) {
    const double x = sol.die_origins[die].x - margin, y = sol.die_origins[die].y - margin;
    s += "<rect class=\"die\" x=\"" + X(x) + "\" y=\"" + Y(y + outlines[die].height) + "\" width=\"" +
         num(outlines[die].width) + "\" height=\"" + num(outlines[die].height) +
         "\" fill=\"none\" stroke=\"black\" stroke-width=\"1\"><title>" + detail::escape_xml(d.dies[die].id) +
         " (" + detail::escape_xml(d.technologies[d.dies[die].tech].id) + ")</title></rect>\n";
  }

  std::vector<Point> centers(fp.block_count());
  for (std::size_t die = 0; die < fp.die_count(); ++die) {
    const DieLayout& layout = fp.die(die);
    for (std::size_t i = 0; i < layout.tree.size(); ++i) {
      const std::size_t b = layout.tree.node(static_cast<int>(i)).block;
      const Rect& r = layout.packing.rects[i];
      const double x = sol.die_origins[die].x + r.x, y = sol.die_origins[die].y + r.y;
      centers[b] = {x + 0.5 * r.w, y + 0.5 * r.h};
      s += "<rect class=\"block\" x=\"" + X(x) + "\" y=\"" + Y(y + r.h) + "\" width=\"" + num(r.w) +
           "\" height=\"" + num(r.h) + "\" fill=\"" + detail::tech_color(fp.tech_of(b)) +
           "\" stroke=\"#333\" stroke-width=\"0.5\"/>\n";
      const double fs = std::max(2.0, std::min(r.w, r.h) / 4.0);
      s += "<text x=\"" + X(centers[b].x) + "\" y=\"" + Y(centers[b].y) + "\" font-size=\"" + num(fs) +
           "\" text-anchor=\"middle\" dominant-baseline=\"middle\">" + detail::escape_xml(d.blocks[b].id) +
           "</text>\n";
    }
  }

  for (const Net& net : d.nets) {
    bool crosses = false;
    for (std::size_t p : net.pins) crosses = crosses || fp.die_of(p) != fp.die_of(net.pins.front());
    if (!crosses) continue;
    s += "<polyline class=\"net\" fill=\"none\" stroke=\"#c03030\" stroke-width=\"0.5\" stroke-opacity=\"0.6\" points=\"";
    for (std::size_t k = 0; k < net.pins.size(); ++k) {
      if (k) s += " ";
      s += X(centers[net.pins[k]].x) + "," + Y(centers[net.pins[k]].y);
    }
    s += "\"><title>" + detail::escape_xml(net.id) + "</title></polyline>\n";
  }
  s += "</svg>\n";
  return s;
}

inline void emit_svg(const MmfpSolution& sol, const std::string& path) { write_file(path, render_svg(sol)); }

}  // namespace hfp
