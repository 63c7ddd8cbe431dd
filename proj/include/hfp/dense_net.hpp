#pragma once

// Minimal fully-connected network with hand-written backpropagation.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "hfp/error.hpp"
#include "hfp/random.hpp"

namespace hfp {

enum class Activation { relu, softmax, identity };

inline const char* to_string(Activation a) {
  switch (a) {
    case Activation::relu: return "relu";
    case Activation::softmax: return "softmax";
    case Activation::identity: return "identity";
  }
  return "?";
}

inline Activation activation_from_string(const std::string& s) {
  if (s == "relu") return Activation::relu;
  if (s == "softmax") return Activation::softmax;
  if (s == "identity") return Activation::identity;
  throw ConfigError("unknown activation '" + s + "'");
}

struct DenseLayer {
  std::size_t in = 0;
  std::size_t out = 0;
  std::vector<double> weights;  // out x in, row-major
  std::vector<double> bias;     // out
  Activation activation = Activation::identity;
};

/// Gradient with the same shape as a DenseNet's parameters.
struct NetGradient {
  std::vector<std::vector<double>> weights;
  std::vector<std::vector<double>> bias;

  double squared_norm() const {
    double s = 0.0;
    for (const auto& v : weights) for (double g : v) s += g * g;
    for (const auto& v : bias) for (double g : v) s += g * g;
    return s;
  }

  bool finite() const {
    for (const auto& v : weights) for (double g : v) if (!std::isfinite(g)) return false;
    for (const auto& v : bias) for (double g : v) if (!std::isfinite(g)) return false;
    return true;
  }

  void scale(double k) {
    for (auto& v : weights) for (double& g : v) g *= k;
    for (auto& v : bias) for (double& g : v) g *= k;
  }

  std::vector<double> flat() const {
    std::vector<double> out;
    for (std::size_t l = 0; l < weights.size(); ++l) {
      out.insert(out.end(), weights[l].begin(), weights[l].end());
      out.insert(out.end(), bias[l].begin(), bias[l].end());
    }
    return out;
  }
};

class DenseNet {
 public:
  /// Activations of every layer for one forward pass; values[0] is the input.
  struct Tape {
    std::vector<std::vector<double>> values;
  };

  DenseNet() = default;
  explicit DenseNet(std::vector<DenseLayer> layers) : layers_(std::move(layers)) { validate(); }

  /// Layers sized `sizes[0] -> sizes[1] -> ...`, Glorot-uniform weights, zero bias.
  static DenseNet glorot(std::span<const std::size_t> sizes, Activation hidden, Activation last,
                         Rng& rng) {
    if (sizes.size() < 2) throw ConfigError("network needs at least one layer");
    std::vector<DenseLayer> layers;
    for (std::size_t l = 0; l + 1 < sizes.size(); ++l) {
      DenseLayer layer;
      layer.in = sizes[l];
      layer.out = sizes[l + 1];
      layer.activation = l + 2 == sizes.size() ? last : hidden;
      const double limit = std::sqrt(6.0 / static_cast<double>(layer.in + layer.out));
      layer.weights.resize(layer.in * layer.out);
      for (double& w : layer.weights) w = rng.uniform(-limit, limit);
      layer.bias.assign(layer.out, 0.0);
      layers.push_back(std::move(layer));
    }
    return DenseNet(std::move(layers));
  }

  const std::vector<DenseLayer>& layers() const { return layers_; }
  std::vector<DenseLayer>& layers() { return layers_; }
  std::size_t input_size() const { return layers_.empty() ? 0 : layers_.front().in; }
  std::size_t output_size() const { return layers_.empty() ? 0 : layers_.back().out; }

  std::size_t parameter_count() const {
    std::size_t n = 0;
    for (const auto& l : layers_) n += l.weights.size() + l.bias.size();
    return n;
  }

  void validate() const {
    if (layers_.empty()) throw ConfigError("network has no layers");
    for (std::size_t l = 0; l < layers_.size(); ++l) {
      const DenseLayer& layer = layers_[l];
      if (layer.in == 0 || layer.out == 0) throw ConfigError("layer with zero width");
      if (layer.weights.size() != layer.in * layer.out || layer.bias.size() != layer.out) {
        throw ConfigError("layer " + std::to_string(l) + " parameter shape mismatch");
      }
      if (l > 0 && layers_[l - 1].out != layer.in) {
        throw ConfigError("layer " + std::to_string(l) + " input does not match previous output");
      }
      if (layer.activation == Activation::softmax && l + 1 != layers_.size()) {
        throw ConfigError("softmax is only allowed on the final layer");
      }
    }
  }

  std::vector<double> forward(std::span<const double> x) const {
    Tape tape;
    return forward(x, tape);
  }

  const std::vector<double>& forward(std::span<const double> x, Tape& tape) const {
    if (x.size() != input_size()) {
      throw ConfigError("network input has " + std::to_string(x.size()) + " values, expected " +
                        std::to_string(input_size()));
    }
    tape.values.resize(layers_.size() + 1);
    tape.values[0].assign(x.begin(), x.end());
    for (std::size_t l = 0; l < layers_.size(); ++l) {
      const DenseLayer& layer = layers_[l];
      const std::vector<double>& in = tape.values[l];
      std::vector<double>& out = tape.values[l + 1];
      out.assign(layer.bias.begin(), layer.bias.end());
      for (std::size_t o = 0; o < layer.out; ++o) {
        const double* row = &layer.weights[o * layer.in];
        double acc = 0.0;
        for (std::size_t i = 0; i < layer.in; ++i) acc += row[i] * in[i];
        out[o] += acc;
      }
      activate(layer.activation, out);
    }
    return tape.values.back();
  }

  NetGradient zero_gradient() const {
    NetGradient g;
    for (const auto& l : layers_) {
      g.weights.emplace_back(l.weights.size(), 0.0);
      g.bias.emplace_back(l.bias.size(), 0.0);
    }
    return g;
  }

  /// Accumulate into `g` the gradient of a scalar whose derivative with
  /// respect to the network output (post-activation) is `grad_out`.
  void backward(const Tape& tape, std::span<const double> grad_out, NetGradient& g) const {
    std::vector<double> delta(grad_out.begin(), grad_out.end());
    for (std::size_t l = layers_.size(); l-- > 0;) {
      const DenseLayer& layer = layers_[l];
      const std::vector<double>& out = tape.values[l + 1];
      const std::vector<double>& in = tape.values[l];
      switch (layer.activation) {
        case Activation::relu:
          for (std::size_t o = 0; o < layer.out; ++o) {
            if (out[o] <= 0.0) delta[o] = 0.0;
          }
          break;
        case Activation::softmax: {
          double dot = 0.0;
          for (std::size_t o = 0; o < layer.out; ++o) dot += delta[o] * out[o];
          for (std::size_t o = 0; o < layer.out; ++o) delta[o] = out[o] * (delta[o] - dot);
          break;
        }
        case Activation::identity:
          break;
      }
      std::vector<double> prev(layer.in, 0.0);
      for (std::size_t o = 0; o < layer.out; ++o) {
        const double d = delta[o];
        g.bias[l][o] += d;
        if (d == 0.0) continue;
        double* grow = &g.weights[l][o * layer.in];
        const double* wrow = &layer.weights[o * layer.in];
        for (std::size_t i = 0; i < layer.in; ++i) {
          grow[i] += d * in[i];
          prev[i] += d * wrow[i];
        }
      }
      delta = std::move(prev);
    }
  }

  std::vector<double> parameters() const {
    std::vector<double> out;
    out.reserve(parameter_count());
    for (const auto& l : layers_) {
      out.insert(out.end(), l.weights.begin(), l.weights.end());
      out.insert(out.end(), l.bias.begin(), l.bias.end());
    }
    return out;
  }

  void set_parameters(std::span<const double> p) {
    if (p.size() != parameter_count()) throw ConfigError("parameter vector size mismatch");
    std::size_t k = 0;
    for (auto& l : layers_) {
      for (double& w : l.weights) w = p[k++];
      for (double& b : l.bias) b = p[k++];
    }
  }

  /// params += step * direction
  void add_scaled(const NetGradient& direction, double step) {
    for (std::size_t l = 0; l < layers_.size(); ++l) {
      for (std::size_t i = 0; i < layers_[l].weights.size(); ++i) {
        layers_[l].weights[i] += step * direction.weights[l][i];
      }
      for (std::size_t i = 0; i < layers_[l].bias.size(); ++i) {
        layers_[l].bias[i] += step * direction.bias[l][i];
      }
    }
  }

  bool operator==(const DenseNet& other) const {
    if (layers_.size() != other.layers_.size()) return false;
    for (std::size_t l = 0; l < layers_.size(); ++l) {
      const DenseLayer& a = layers_[l];
      const DenseLayer& b = other.layers_[l];
      if (a.in != b.in || a.out != b.out || a.activation != b.activation || a.weights != b.weights ||
          a.bias != b.bias) {
        return false;
      }
    }
    return true;
  }

 private:
  static void activate(Activation act, std::vector<double>& v) {
    switch (act) {
      case Activation::relu:
        for (double& x : v) x = x > 0.0 ? x : 0.0;
        break;
      case Activation::softmax: {
        const double mx = *std::max_element(v.begin(), v.end());
        double sum = 0.0;
        for (double& x : v) sum += (x = std::exp(x - mx));
        for (double& x : v) x /= sum;
        break;
      }
      case Activation::identity:
        break;
    }
  }

  std::vector<DenseLayer> layers_;
};

}  // namespace hfp
