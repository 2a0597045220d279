#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace kgan {

struct GradcheckRow {
  std::string name;
  double max_err = 0.0;
  bool pass = false;
};

struct GradcheckReport {
  std::vector<GradcheckRow> rows;
  bool all_pass = false;
  double tolerance = 1e-4;
};

/// Finite-difference verification of every differentiable op, the composed
/// losses, and the full teacher networks at image size 16 (sampled
/// parameter components). `corrupt_conv_backward` is a fault-injection
/// fixture: it scales the analytic conv2d gradients so the suite must fail.
GradcheckReport run_gradcheck_suite(bool corrupt_conv_backward = false);

void print_gradcheck_report(const GradcheckReport& report, std::ostream& out);

}  // namespace kgan
