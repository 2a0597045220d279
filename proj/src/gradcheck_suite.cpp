#include "kgan/verify.hpp"

#include "kgan/distill.hpp"
#include "kgan/gan.hpp"
#include "kgan/gradcheck.hpp"
#include "kgan/ops.hpp"
#include "kgan/rng.hpp"

#include <iomanip>
#include <ostream>

namespace kgan {

namespace {

constexpr double kTol = 1e-4;
constexpr double kStep = 1e-5;

Tensor random_tensor(Rng& rng, Shape shape, double lo, double hi) {
  Array a(shape_numel(shape));
  for (long i = 0; i < a.size(); ++i) a[i] = rng.uniform(lo, hi);
  return Tensor(std::move(shape), std::move(a));
}

// Signed values kept away from the relu/leaky kink at 0.
Tensor random_signed_tensor(Rng& rng, Shape shape, double lo_mag, double hi_mag) {
  Array a(shape_numel(shape));
  for (long i = 0; i < a.size(); ++i) {
    const double mag = rng.uniform(lo_mag, hi_mag);
    a[i] = rng.coin() ? mag : -mag;
  }
  return Tensor(std::move(shape), std::move(a));
}

// Values in [0,1] at least `margin` away from both clamp corners.
Tensor random_clamp_tensor(Rng& rng, Shape shape, double lo, double hi, double margin) {
  Array a(shape_numel(shape));
  for (long i = 0; i < a.size(); ++i) {
    double v = rng.uniform(0.0, 1.0);
    while (std::abs(v - lo) < margin || std::abs(v - hi) < margin)
      v = rng.uniform(0.0, 1.0);
    a[i] = v;
  }
  return Tensor(std::move(shape), std::move(a));
}

struct Suite {
  GradcheckReport report;

  void row(const std::string& name, double err) {
    report.rows.push_back({name, err, err <= kTol});
  }

  void check(const std::string& name, const TensorFn& f, const Tensor& x,
             double analytic_scale = 1.0) {
    row(name, grad_check_components(f, x, kStep, all_components(x), analytic_scale));
  }

  static std::vector<long> all_components(const Tensor& x) {
    std::vector<long> c(static_cast<std::size_t>(x.size()));
    for (long i = 0; i < x.size(); ++i) c[static_cast<std::size_t>(i)] = i;
    return c;
  }
};

}  // namespace

GradcheckReport run_gradcheck_suite(bool corrupt_conv_backward) {
  Suite s;
  s.report.tolerance = kTol;
  const double conv_scale = corrupt_conv_backward ? 1.5 : 1.0;

  Rng rng(20240601);
  const Shape vec{12};

  // Fixed random weighting makes per-component gradients distinct.
  const Tensor w_vec = random_signed_tensor(rng, vec, 0.3, 1.0);
  auto weighted = [&w_vec](const Tensor& t) { return sum(mul(t, w_vec)); };

  {
    const Tensor c = random_tensor(rng, vec, -1.0, 1.0);
    s.check("add", [&](const Tensor& x) { return weighted(add(x, c)); },
            random_tensor(rng, vec, -1.5, 1.5));
    s.check("sub", [&](const Tensor& x) { return weighted(sub(x, c)); },
            random_tensor(rng, vec, -1.5, 1.5));
    s.check("mul", [&](const Tensor& x) { return weighted(mul(x, c)); },
            random_tensor(rng, vec, -1.5, 1.5));
    s.check("mul(x,x)", [&](const Tensor& x) { return weighted(mul(x, x)); },
            random_tensor(rng, vec, -1.5, 1.5));
  }
  s.check("neg", [&](const Tensor& x) { return weighted(neg(x)); },
          random_tensor(rng, vec, -1.5, 1.5));
  s.check("add_scalar", [&](const Tensor& x) { return weighted(add(x, 0.7)); },
          random_tensor(rng, vec, -1.5, 1.5));
  s.check("mul_scalar", [&](const Tensor& x) { return weighted(mul(x, -1.3)); },
          random_tensor(rng, vec, -1.5, 1.5));
  s.check("rsub_scalar", [&](const Tensor& x) { return weighted(sub(2.0, x)); },
          random_tensor(rng, vec, -1.5, 1.5));
  s.check("log", [&](const Tensor& x) { return weighted(log_safe(x)); },
          random_tensor(rng, vec, 0.2, 1.5));
  s.check("exp", [&](const Tensor& x) { return weighted(exp_(x)); },
          random_tensor(rng, vec, -1.5, 1.5));
  s.check("relu", [&](const Tensor& x) { return weighted(relu(x)); },
          random_signed_tensor(rng, vec, 0.2, 1.2));
  s.check("leaky_relu",
          [&](const Tensor& x) { return weighted(leaky_relu(x, 0.2)); },
          random_signed_tensor(rng, vec, 0.2, 1.2));
  s.check("sigmoid", [&](const Tensor& x) { return weighted(sigmoid(x)); },
          random_tensor(rng, vec, -2.0, 2.0));
  s.check("tanh", [&](const Tensor& x) { return weighted(tanh_(x)); },
          random_tensor(rng, vec, -2.0, 2.0));
  s.check("clamp",
          [&](const Tensor& x) { return weighted(clamp(x, 0.2, 0.8)); },
          random_clamp_tensor(rng, vec, 0.2, 0.8, 0.03));
  {
    const Tensor rhs = random_tensor(rng, {4, 2}, -1.0, 1.0);
    const Tensor lhs = random_tensor(rng, {3, 4}, -1.0, 1.0);
    const Tensor w_out = random_tensor(rng, {3, 2}, -1.0, 1.0);
    s.check("matmul(lhs)",
            [&](const Tensor& x) { return sum(mul(matmul(x, rhs), w_out)); },
            random_tensor(rng, {3, 4}, -1.0, 1.0));
    s.check("matmul(rhs)",
            [&](const Tensor& x) { return sum(mul(matmul(lhs, x), w_out)); },
            random_tensor(rng, {4, 2}, -1.0, 1.0));
  }
  s.check("sum", [](const Tensor& x) { return sum(x); },
          random_tensor(rng, vec, -1.5, 1.5));
  s.check("mean", [](const Tensor& x) { return mean(x); },
          random_tensor(rng, vec, -1.5, 1.5));
  s.check("reshape",
          [&](const Tensor& x) { return weighted(reshape(reshape(x, {3, 4}), vec)); },
          random_tensor(rng, vec, -1.5, 1.5));
  {
    const Tensor w_sm = random_tensor(rng, {3, 4}, -1.0, 1.0);
    s.check("softmax_t",
            [&](const Tensor& x) { return sum(mul(softmax_t(x, 2.5), w_sm)); },
            random_tensor(rng, {3, 4}, -2.0, 2.0));
  }

  {
    // conv2d through every slot.
    const Tensor x0 = random_tensor(rng, {2, 2, 5, 5}, -1.0, 1.0);
    const Tensor w0 = random_tensor(rng, {3, 2, 3, 3}, -0.7, 0.7);
    const Tensor b0 = random_tensor(rng, {3}, -0.3, 0.3);
    const Tensor r0 = random_tensor(rng, {2, 3, 3, 3}, -1.0, 1.0);
    auto head = [&r0](const Tensor& y) { return sum(mul(y, r0)); };
    s.check("conv2d(input)",
            [&](const Tensor& x) { return head(conv2d(x, w0, b0, 2, 1)); }, x0,
            conv_scale);
    s.check("conv2d(weights)",
            [&](const Tensor& w) { return head(conv2d(x0, w, b0, 2, 1)); }, w0,
            conv_scale);
    s.check("conv2d(bias)",
            [&](const Tensor& b) { return head(conv2d(x0, w0, b, 2, 1)); }, b0,
            conv_scale);
  }
  {
    const Tensor x0 = random_tensor(rng, {2, 3, 3, 3}, -1.0, 1.0);
    const Tensor w0 = random_tensor(rng, {3, 2, 2, 2}, -0.7, 0.7);
    const Tensor b0 = random_tensor(rng, {2}, -0.3, 0.3);
    const Tensor r0 = random_tensor(rng, {2, 2, 6, 6}, -1.0, 1.0);
    auto head = [&r0](const Tensor& y) { return sum(mul(y, r0)); };
    s.check("deconv2d(input)",
            [&](const Tensor& x) { return head(deconv2d(x, w0, b0, 2, 0)); }, x0);
    s.check("deconv2d(weights)",
            [&](const Tensor& w) { return head(deconv2d(x0, w, b0, 2, 0)); }, w0);
    s.check("deconv2d(bias)",
            [&](const Tensor& b) { return head(deconv2d(x0, w0, b, 2, 0)); }, b0);
  }

  {
    // Losses. cross_entropy is probed through softmax so probes stay
    // normalized; probabilities stay clear of the clamp corners.
    const Tensor target = softmax_t(random_tensor(rng, {6}, -1.0, 1.0), 1.0);
    s.check("cross_entropy",
            [&](const Tensor& z) { return cross_entropy(softmax_t(z, 1.0), target); },
            random_tensor(rng, {6}, -1.5, 1.5));
    s.check("generator_loss",
            [](const Tensor& p) { return generator_loss(p); },
            random_tensor(rng, {6}, 0.1, 0.9));
    const Tensor p_fake = random_tensor(rng, {6}, 0.1, 0.9);
    const Tensor p_real = random_tensor(rng, {6}, 0.1, 0.9);
    s.check("discriminator_loss(real)",
            [&](const Tensor& p) { return discriminator_loss(p, p_fake); },
            random_tensor(rng, {6}, 0.1, 0.9));
    s.check("discriminator_loss(fake)",
            [&](const Tensor& p) { return discriminator_loss(p_real, p); },
            random_tensor(rng, {6}, 0.1, 0.9));
    const Tensor t_logits = random_tensor(rng, {4, 2}, -1.5, 1.5);
    s.check("soft_label_loss",
            [&](const Tensor& z) { return soft_label_loss(z, t_logits, 3.0); },
            random_tensor(rng, {4, 2}, -1.5, 1.5));
    const Tensor labels = tensor_of({6}, std::vector<Scalar>{1, 0, 1, 1, 0, 0});
    s.check("hard_label_loss",
            [&](const Tensor& p) { return hard_label_loss(p, labels); },
            random_tensor(rng, {6}, 0.1, 0.9));
    const Tensor g_out = random_tensor(rng, {2, 1, 4, 4}, 0.0, 1.0);
    s.check("mean_abs_diff",
            [&](const Tensor& x) { return mean_abs_diff(x, g_out); },
            random_tensor(rng, {2, 1, 4, 4}, -1.0, 2.0));
  }

  {
    // Full teacher networks at size 16, sampled parameter components.
    GanModel teacher = build_teacher(16, 99);
    const Tensor input = random_tensor(rng, {2, 1, 16, 16}, 0.0, 1.0);
    const Tensor head_g = random_tensor(rng, {2, 1, 16, 16}, -1.0, 1.0);
    const Tensor head_d = random_tensor(rng, {2, 2}, -1.0, 1.0);

    auto net_row = [&](const std::string& label,
                       const std::vector<LayerSpec>& spec,
                       const ParameterSet& params, const Tensor& head) {
      double worst = 0.0;
      for (std::size_t pi = 0; pi < params.items.size(); ++pi) {
        const Tensor& p0 = params.items[pi].second;
        auto f = [&](const Tensor& probe) {
          ParameterSet ps = params;
          ps.items[pi].second = probe;
          return sum(mul(forward_stack(spec, ps, input), head));
        };
        std::vector<long> comps;
        const int n_samples = static_cast<int>(std::min<long>(6, p0.size()));
        for (int k = 0; k < n_samples; ++k)
          comps.push_back(static_cast<long>(
              rng.below(static_cast<std::uint64_t>(p0.size()))));
        worst = std::max(worst, grad_check_components(f, p0, kStep, comps));
      }
      s.row(label, worst);
    };
    net_row("teacher_generator(size16)", teacher.gen_spec, teacher.gen_params, head_g);
    net_row("teacher_discriminator(size16)", teacher.disc_spec, teacher.disc_params,
            head_d);
  }

  s.report.all_pass = true;
  for (const GradcheckRow& r : s.report.rows)
    if (!r.pass) s.report.all_pass = false;
  return s.report;
}

void print_gradcheck_report(const GradcheckReport& report, std::ostream& out) {
  out << "finite-difference gradient check, tolerance " << report.tolerance << "\n";
  for (const GradcheckRow& r : report.rows) {
    out << "  " << std::left << std::setw(32) << r.name << std::scientific
        << std::setprecision(3) << r.max_err << (r.pass ? "  pass" : "  FAIL")
        << "\n";
  }
  out << (report.all_pass ? "all " : "FAILURES among ") << report.rows.size()
      << " checks" << (report.all_pass ? " passed" : "") << "\n";
  out.unsetf(std::ios::scientific);
}

}  // namespace kgan
