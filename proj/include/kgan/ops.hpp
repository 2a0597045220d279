#pragma once

#include "kgan/graph.hpp"
#include "kgan/tensor.hpp"

namespace kgan {

/// Floor applied inside log() so saturated discriminator outputs cannot
/// produce -inf. Loss code additionally clamps probabilities to
/// [kLogFloor, 1] before taking logs.
inline constexpr double kLogFloor = 1e-7;

// Elementwise ops. Binary forms require equal shapes or a scalar second
// operand; results are recorded on the operands' graph when tracking.
Tensor add(const Tensor& a, const Tensor& b);
Tensor add(const Tensor& a, Scalar c);
Tensor sub(const Tensor& a, const Tensor& b);
Tensor sub(Scalar c, const Tensor& a);
Tensor mul(const Tensor& a, const Tensor& b);
Tensor mul(const Tensor& a, Scalar c);
Tensor neg(const Tensor& a);
Tensor log_safe(const Tensor& a);   // log(max(x, kLogFloor))
Tensor exp_(const Tensor& a);
Tensor relu(const Tensor& a);
Tensor leaky_relu(const Tensor& a, Scalar slope);
Tensor sigmoid(const Tensor& a);
Tensor tanh_(const Tensor& a);
Tensor clamp(const Tensor& a, Scalar lo, Scalar hi);

/// Row-major matrix product of two rank-2 tensors.
Tensor matmul(const Tensor& a, const Tensor& b);

// Full reductions to a [1] tensor.
Tensor sum(const Tensor& a);
Tensor mean(const Tensor& a);

Tensor reshape(const Tensor& a, Shape shape);

/// Temperature softmax over the last axis: q_i = exp(z_i/T) / sum_j exp(z_j/T),
/// computed with max subtraction. Accepts rank-1 [K] or rank-2 [m,K] input.
Tensor softmax_t(const Tensor& logits, Scalar temperature);

/// Cross-correlation with zero padding (no kernel flip).
/// x [N,C,H,W], w [F,C,kH,kW], b [F] -> [N,F,H',W'].
Tensor conv2d(const Tensor& x, const Tensor& w, const Tensor& b, int stride, int pad);

/// Transposed convolution, the adjoint of conv2d with the same weights:
/// x [N,F,H,W], w [F,C,kH,kW], b [C] -> [N,C,(H-1)*stride-2*pad+kH, ...].
Tensor deconv2d(const Tensor& x, const Tensor& w, const Tensor& b, int stride, int pad);

/// mean(|a - b|), composed from recorded ops so it stays differentiable.
Tensor mean_abs_diff(const Tensor& a, const Tensor& b);

// Forward evaluation of a recorded node from its inputs (replay path).
Array eval_node(const Graph& g, const Node& n, Array* saved);

}  // namespace kgan
