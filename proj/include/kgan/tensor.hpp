#pragma once

#include <Eigen/Core>

#include <string>
#include <vector>

namespace kgan {

using Scalar = double;
using Array = Eigen::ArrayXd;          // flat row-major storage
using Shape = std::vector<int>;

class Graph;

long shape_numel(const Shape& shape);
std::string shape_str(const Shape& shape);

/// Throws std::invalid_argument unless every dimension is >= 1.
void validate_shape(const Shape& shape);

/// Dense n-dimensional value, row-major, 64-bit floats throughout.
/// When produced while recording on a Graph, `graph`/`node` tie the value to
/// its graph node; plain values have graph == nullptr.
struct Tensor {
  Shape shape;
  Array data;
  Graph* graph = nullptr;
  int node = -1;

  Tensor() = default;
  Tensor(Shape s, Array d) : shape(std::move(s)), data(std::move(d)) {}

  bool tracked() const { return graph != nullptr; }
  long size() const { return static_cast<long>(data.size()); }
  int rank() const { return static_cast<int>(shape.size()); }

  /// Value of a one-element tensor.
  Scalar scalar() const;

  Scalar operator()(long i) const { return data[i]; }
  Scalar& operator()(long i) { return data[i]; }
};

/// Checked constructors. Both throw on shape/value-length mismatch and
/// reject non-finite input values.
Tensor tensor_of(Shape shape, const std::vector<Scalar>& values);
Tensor tensor_of(Shape shape, Array values);

Tensor zeros(Shape shape);
Tensor full(Shape shape, Scalar v);

bool same_shape(const Tensor& a, const Tensor& b);

}  // namespace kgan
