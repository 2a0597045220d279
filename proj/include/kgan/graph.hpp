#pragma once

#include "kgan/tensor.hpp"

#include <cstdint>
#include <map>

namespace kgan {

enum class Op : std::uint8_t {
  kConst,       // untracked operand materialized into the tape
  kParam,       // tracked leaf, receives gradients
  kAdd,
  kSub,
  kMul,
  kNeg,
  kLog,         // log(max(x, kLogFloor)); see ops.hpp
  kExp,
  kRelu,
  kLeakyRelu,   // s0 = negative slope
  kSigmoid,
  kTanh,
  kClamp,       // s0 = lo, s1 = hi
  kAddScalar,   // s0 = addend
  kMulScalar,   // s0 = factor
  kRsubScalar,  // s0 - x
  kMatmul,
  kSum,
  kMean,
  kReshape,
  kSoftmaxT,    // softmax over last axis, s0 = temperature
  kConv2d,      // in: x, w, b
  kDeconv2d,    // in: x, w, b
};

const char* op_name(Op op);

struct ConvDims {
  int n = 0, cin = 0, h = 0, w = 0;
  int cout = 0, kh = 0, kw = 0;
  int stride = 1, pad = 0;
  int oh = 0, ow = 0;
};

struct Node {
  Op op = Op::kConst;
  int in[3] = {-1, -1, -1};
  double s0 = 0.0, s1 = 0.0;
  ConvDims conv;
  Shape shape;
  Array value;
  Array saved;        // op-specific forward context (conv keeps its im2col matrix)
  bool needs_grad = false;
};

/// Gradients keyed by graph node id; each entry has the shape of its node.
using GradientMap = std::map<int, Tensor>;

/// Recorded computation tape. Node ids are assigned in creation order, so
/// every input id precedes its consumers. One Graph serves one
/// forward/backward episode on one logical thread; independent graphs are
/// fully isolated.
class Graph {
 public:
  /// Register a tracked leaf. The returned tensor participates in gradient
  /// computation.
  Tensor param(const Tensor& t);

  /// Materialize an untracked value as a constant node (no gradient).
  Tensor constant(const Tensor& t);

  const Node& at(int id) const;
  int size() const { return static_cast<int>(nodes_.size()); }

  /// Reverse-mode sweep from a scalar loss node. Returns gradients for every
  /// kParam leaf; leaves unreachable from the loss get zeros. Accumulation
  /// over fan-out follows node order, so results are bit-deterministic.
  GradientMap backward(const Tensor& loss) const;

  /// Recompute every non-leaf node from its inputs and compare bit-exactly
  /// with the recorded value.
  bool replay_bitexact() const;

  // Recording hook used by the op layer; computes the node value.
  Tensor emit(Node&& n);
  // Node id for an operand: its own id when tracked here, else a fresh
  // constant. Tracked tensors from another graph are rejected.
  int input_id(const Tensor& t);

 private:
  std::vector<Node> nodes_;
};

}  // namespace kgan
