#pragma once

#include "kgan/graph.hpp"

#include <functional>
#include <vector>

namespace kgan {

/// Scalar-valued function of one tensor, built from recorded ops. The same
/// callable is used for the analytic pass (tracked input) and the
/// finite-difference probes (untracked inputs).
using TensorFn = std::function<Tensor(const Tensor&)>;

/// Max over the given components of
///   |analytic - central difference| / max(1, |central difference|)
/// with step h. `analytic_scale` deliberately perturbs the analytic gradient
/// and exists only for fault-injection fixtures that prove the check can fail.
double grad_check_components(const TensorFn& f, const Tensor& x, double h,
                             const std::vector<long>& components,
                             double analytic_scale = 1.0);

/// grad_check over every component of x.
double grad_check(const TensorFn& f, const Tensor& x, double h = 1e-5);

}  // namespace kgan
