#include "kgan/metrics.hpp"

#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace kgan {

double spatial_frequency(const ImageGray& img) {
  validate_image(img);
  if (img.height < 2 || img.width < 2)
    throw std::invalid_argument("spatial_frequency needs at least 2x2 pixels");
  const double scale = 255.0;
  const long n = static_cast<long>(img.height) * img.width;
  double rf2 = 0.0, cf2 = 0.0;
  for (int r = 0; r < img.height; ++r)
    for (int c = 1; c < img.width; ++c) {
      const double d = scale * (img(r, c) - img(r, c - 1));
      rf2 += d * d;
    }
  for (int r = 1; r < img.height; ++r)
    for (int c = 0; c < img.width; ++c) {
      const double d = scale * (img(r, c) - img(r - 1, c));
      cf2 += d * d;
    }
  rf2 /= static_cast<double>(n);
  cf2 /= static_cast<double>(n);
  return std::sqrt(rf2 + cf2);
}

double ssim(const ImageGray& a, const ImageGray& b) {
  validate_image(a);
  validate_image(b);
  if (a.height != b.height || a.width != b.width)
    throw std::invalid_argument("ssim: image dimensions differ");
  constexpr int kWin = 8;
  if (a.height < kWin || a.width < kWin)
    throw std::invalid_argument("ssim needs at least 8x8 pixels");
  constexpr double kC1 = 0.01 * 0.01;  // (0.01 * L)^2, L = 1
  constexpr double kC2 = 0.03 * 0.03;
  constexpr double kInvN = 1.0 / (kWin * kWin);

  double total = 0.0;
  long windows = 0;
  for (int r = 0; r + kWin <= a.height; ++r) {
    for (int c = 0; c + kWin <= a.width; ++c) {
      double sa = 0, sb = 0, saa = 0, sbb = 0, sab = 0;
      for (int i = 0; i < kWin; ++i)
        for (int j = 0; j < kWin; ++j) {
          const double va = a(r + i, c + j);
          const double vb = b(r + i, c + j);
          sa += va;
          sb += vb;
          saa += va * va;
          sbb += vb * vb;
          sab += va * vb;
        }
      const double mu_a = sa * kInvN;
      const double mu_b = sb * kInvN;
      const double var_a = saa * kInvN - mu_a * mu_a;
      const double var_b = sbb * kInvN - mu_b * mu_b;
      const double cov = sab * kInvN - mu_a * mu_b;
      const double num = (2.0 * mu_a * mu_b + kC1) * (2.0 * cov + kC2);
      const double den = (mu_a * mu_a + mu_b * mu_b + kC1) * (var_a + var_b + kC2);
      total += num / den;
      ++windows;
    }
  }
  return total / static_cast<double>(windows);
}

namespace {

double pearson(const Array& x, const Array& y) {
  const double mx = x.mean();
  const double my = y.mean();
  const Array cx = x - mx;
  const Array cy = y - my;
  const double sxx = (cx * cx).sum();
  const double syy = (cy * cy).sum();
  if (sxx == 0.0 || syy == 0.0) return 0.0;  // zero-variance convention
  return (cx * cy).sum() / (std::sqrt(sxx) * std::sqrt(syy));
}

}  // namespace

double scd(const ImageGray& fused, const ImageGray& src_a, const ImageGray& src_b) {
  validate_image(fused);
  validate_image(src_a);
  validate_image(src_b);
  if (fused.height != src_a.height || fused.width != src_a.width ||
      fused.height != src_b.height || fused.width != src_b.width)
    throw std::invalid_argument("scd: image dimensions differ");
  const Array diff_b = fused.pixels - src_b.pixels;
  const Array diff_a = fused.pixels - src_a.pixels;
  return pearson(diff_b, src_a.pixels) + pearson(diff_a, src_b.pixels);
}

MetricsReport aggregate(std::vector<MetricsRow> rows) {
  MetricsReport rep;
  rep.rows = std::move(rows);
  const double n = static_cast<double>(rep.rows.size());
  if (rep.rows.empty()) return rep;
  for (const MetricsRow& r : rep.rows) {
    rep.mean_sf += r.sf;
    rep.mean_ssim += r.ssim;
    rep.mean_scd += r.scd;
  }
  rep.mean_sf /= n;
  rep.mean_ssim /= n;
  rep.mean_scd /= n;
  for (const MetricsRow& r : rep.rows) {
    rep.std_sf += (r.sf - rep.mean_sf) * (r.sf - rep.mean_sf);
    rep.std_ssim += (r.ssim - rep.mean_ssim) * (r.ssim - rep.mean_ssim);
    rep.std_scd += (r.scd - rep.mean_scd) * (r.scd - rep.mean_scd);
  }
  rep.std_sf = std::sqrt(rep.std_sf / n);
  rep.std_ssim = std::sqrt(rep.std_ssim / n);
  rep.std_scd = std::sqrt(rep.std_scd / n);
  return rep;
}

MetricsReport evaluate(const GeneratorFn& gen, const std::vector<ImagePair>& test) {
  if (test.empty()) throw std::invalid_argument("evaluate: empty test set");
  std::vector<MetricsRow> rows;
  rows.reserve(test.size());
  for (const ImagePair& p : test) {
    const ImageGray out = gen(p.a);
    MetricsRow row;
    row.id = std::to_string(p.pair_id);
    row.sf = spatial_frequency(out);
    row.ssim = ssim(out, p.b);
    row.scd = scd(out, p.a, p.b);
    rows.push_back(std::move(row));
  }
  return aggregate(std::move(rows));
}

MetricsReport evaluate(const GanModel& model, const std::vector<ImagePair>& test) {
  if (model.conditioning != Conditioning::kImage)
    throw std::invalid_argument("evaluate requires an image-conditioned model");
  GeneratorFn gen = [&model](const ImageGray& a) {
    if (a.height != model.image_size || a.width != model.image_size)
      throw std::invalid_argument("evaluate: image size does not match model");
    std::vector<const ImageGray*> one{&a};
    Tensor out = generator_forward(model, model.gen_params, batch_to_tensor(one));
    return tensor_to_image(out, 0);
  };
  return evaluate(gen, test);
}

std::string format_shortest(double v) {
  char buf[64];
  for (int prec = 6; prec <= 17; ++prec) {
    std::snprintf(buf, sizeof(buf), "%.*g", prec, v);
    if (std::strtod(buf, nullptr) == v) return buf;
  }
  return buf;
}

std::string metrics_csv(const MetricsReport& report) {
  std::ostringstream out;
  out << "id,sf,ssim,scd\n";
  for (const MetricsRow& r : report.rows)
    out << r.id << ',' << format_shortest(r.sf) << ',' << format_shortest(r.ssim)
        << ',' << format_shortest(r.scd) << '\n';
  out << "mean," << format_shortest(report.mean_sf) << ','
      << format_shortest(report.mean_ssim) << ',' << format_shortest(report.mean_scd)
      << '\n';
  out << "std," << format_shortest(report.std_sf) << ','
      << format_shortest(report.std_ssim) << ',' << format_shortest(report.std_scd)
      << '\n';
  return out.str();
}

void write_metrics_csv(const MetricsReport& report, const std::string& path) {
  std::ofstream out(path, std::ios::trunc | std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path);
  out << metrics_csv(report);
}

}  // namespace kgan
