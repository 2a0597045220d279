#include "kgan/tensor.hpp"

#include <sstream>
#include <stdexcept>

namespace kgan {

long shape_numel(const Shape& shape) {
  long n = 1;
  for (int d : shape) n *= d;
  return n;
}

std::string shape_str(const Shape& shape) {
  std::ostringstream os;
  os << '[';
  for (std::size_t i = 0; i < shape.size(); ++i) {
    if (i) os << ',';
    os << shape[i];
  }
  os << ']';
  return os.str();
}

void validate_shape(const Shape& shape) {
  if (shape.empty())
    throw std::invalid_argument("tensor shape must have at least one dimension");
  for (int d : shape)
    if (d < 1)
      throw std::invalid_argument("tensor dimensions must be positive, got " +
                                  shape_str(shape));
}

Scalar Tensor::scalar() const {
  if (data.size() != 1)
    throw std::invalid_argument("scalar() on tensor of shape " + shape_str(shape));
  return data[0];
}

Tensor tensor_of(Shape shape, Array values) {
  validate_shape(shape);
  if (shape_numel(shape) != values.size())
    throw std::invalid_argument("value count " + std::to_string(values.size()) +
                                " does not match shape " + shape_str(shape));
  if (!values.allFinite())
    throw std::domain_error("tensor values must be finite");
  return Tensor(std::move(shape), std::move(values));
}

Tensor tensor_of(Shape shape, const std::vector<Scalar>& values) {
  Array a(static_cast<Eigen::Index>(values.size()));
  for (std::size_t i = 0; i < values.size(); ++i) a[i] = values[i];
  return tensor_of(std::move(shape), std::move(a));
}

Tensor zeros(Shape shape) {
  validate_shape(shape);
  long n = shape_numel(shape);
  return Tensor(std::move(shape), Array::Zero(n));
}

Tensor full(Shape shape, Scalar v) {
  validate_shape(shape);
  long n = shape_numel(shape);
  return Tensor(std::move(shape), Array::Constant(n, v));
}

bool same_shape(const Tensor& a, const Tensor& b) { return a.shape == b.shape; }

}  // namespace kgan
