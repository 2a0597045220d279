#pragma once

#include "kgan/graph.hpp"
#include "kgan/ops.hpp"

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

namespace kgan {

enum class LayerKind {
  kConv2d,
  kDeconv2d,
  kDense,
  kRelu,
  kLeakyRelu,
  kSigmoid,
  kTanh,
  kSoftmaxT,
};

struct LayerSpec {
  LayerKind kind = LayerKind::kRelu;
  std::string name;                       // parameter prefix, parametric layers only
  int in_ch = 0, out_ch = 0;              // conv/deconv
  int kernel = 1, stride = 1, pad = 0;    // conv/deconv
  int in_features = 0, out_features = 0;  // dense
  double slope = 0.2;                     // leaky_relu
  double temperature = 1.0;               // softmax_t
};

LayerSpec conv_layer(std::string name, int in_ch, int out_ch, int kernel, int stride,
                     int pad);
LayerSpec deconv_layer(std::string name, int in_ch, int out_ch, int kernel, int stride,
                       int pad);
LayerSpec dense_layer(std::string name, int in_features, int out_features);
LayerSpec relu_layer();
LayerSpec leaky_relu_layer(double slope);
LayerSpec sigmoid_layer();
LayerSpec tanh_layer();
LayerSpec softmax_layer(double temperature);

void validate_specs(const std::vector<LayerSpec>& specs);

/// Scalar count of every weight and bias a spec list owns.
long param_count(const std::vector<LayerSpec>& specs);

/// Ordered name -> tensor map. Order is the creation order, which fixes both
/// the serialization layout and the optimizer update order.
struct ParameterSet {
  std::vector<std::pair<std::string, Tensor>> items;

  void add(std::string name, Tensor t);
  bool has(const std::string& name) const;
  const Tensor& at(const std::string& name) const;
  Tensor& at(const std::string& name);
  long count() const;

  /// Tracked copy: every tensor registered as a gradient leaf on g.
  ParameterSet bind(Graph& g) const;
};

/// He-style scaled uniform init, weights ~ U(-sqrt(6/fan_in), +sqrt(6/fan_in))
/// drawn from the toolkit Rng (see rng.hpp); biases zero. Bit-deterministic
/// in the seed.
ParameterSet init_params(const std::vector<LayerSpec>& specs, std::uint64_t seed);

/// Run x through the stack. Recording follows the inputs: pass tensors bound
/// to a Graph to trace, plain tensors for inference. Dense layers flatten
/// rank-4 inputs to [N, features] automatically.
Tensor forward_stack(const std::vector<LayerSpec>& specs, const ParameterSet& params,
                     Tensor x);

/// -sum(target * log(pred)) over probability vectors that each sum to 1
/// within 1e-6; pred is clamped to [kLogFloor, 1] before the log.
Tensor cross_entropy(const Tensor& pred, const Tensor& target);

// Flat binary parameter container: "KGANP1", u32 tensor count, then per
// tensor u32 name length, name bytes, u32 rank, u32 dims, little-endian f64
// payload. Round trips are bit-exact.
std::string serialize_params(const ParameterSet& ps);
ParameterSet deserialize_params(const std::string& bytes);
void save_params(const ParameterSet& ps, const std::string& path);
ParameterSet load_params(const std::string& path);

}  // namespace kgan
