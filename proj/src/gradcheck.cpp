#include "kgan/gradcheck.hpp"

#include <cmath>
#include <stdexcept>

namespace kgan {

double grad_check_components(const TensorFn& f, const Tensor& x, double h,
                             const std::vector<long>& components,
                             double analytic_scale) {
  if (!(h > 0.0)) throw std::invalid_argument("grad_check: step size must be positive");

  Graph g;
  Tensor xt = g.param(x);
  Tensor loss = f(xt);
  if (loss.size() != 1)
    throw std::invalid_argument("grad_check: function must be scalar-valued");
  GradientMap grads = g.backward(loss);
  const Array analytic = grads.at(xt.node).data * analytic_scale;

  double worst = 0.0;
  Tensor probe;
  probe.shape = x.shape;
  for (long i : components) {
    probe.data = x.data;
    probe.data[i] = x.data[i] + h;
    const double up = f(probe).scalar();
    probe.data[i] = x.data[i] - h;
    const double down = f(probe).scalar();
    if (!std::isfinite(up) || !std::isfinite(down))
      throw std::domain_error("grad_check: non-finite intermediate value");
    const double fd = (up - down) / (2.0 * h);
    const double err = std::abs(analytic[i] - fd) / std::max(1.0, std::abs(fd));
    worst = std::max(worst, err);
  }
  return worst;
}

double grad_check(const TensorFn& f, const Tensor& x, double h) {
  std::vector<long> all(static_cast<std::size_t>(x.size()));
  for (long i = 0; i < x.size(); ++i) all[static_cast<std::size_t>(i)] = i;
  return grad_check_components(f, x, h, all);
}

}  // namespace kgan
