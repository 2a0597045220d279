#pragma once

#include "kgan/gan.hpp"
#include "kgan/image.hpp"
#include "kgan/phantom.hpp"

#include <functional>
#include <string>
#include <vector>

namespace kgan {

/// Spatial frequency on a [0,255] pixel scale:
/// SF = sqrt(RF^2 + CF^2) with RF^2 = (1/(H*W)) sum of squared horizontal
/// first differences and CF^2 the vertical analogue.
double spatial_frequency(const ImageGray& img);

/// Mean local SSIM over 8x8 uniform windows, stride 1, C1 = (0.01)^2,
/// C2 = (0.03)^2 on the unit pixel range.
double ssim(const ImageGray& a, const ImageGray& b);

/// Sum of correlation of differences:
/// SCD = r(fused - src_b, src_a) + r(fused - src_a, src_b), Pearson r over
/// all pixels; a zero-variance operand contributes 0.
double scd(const ImageGray& fused, const ImageGray& src_a, const ImageGray& src_b);

struct MetricsRow {
  std::string id;
  double sf = 0.0;
  double ssim = 0.0;
  double scd = 0.0;
};

/// Per-image rows plus aggregate mean and population standard deviation.
struct MetricsReport {
  std::vector<MetricsRow> rows;
  double mean_sf = 0.0, mean_ssim = 0.0, mean_scd = 0.0;
  double std_sf = 0.0, std_ssim = 0.0, std_scd = 0.0;
};

MetricsReport aggregate(std::vector<MetricsRow> rows);

using GeneratorFn = std::function<ImageGray(const ImageGray&)>;

/// For each pair: output = gen(modality A), then SF(output),
/// SSIM(output, modality B), SCD(output, A, B).
MetricsReport evaluate(const GeneratorFn& gen, const std::vector<ImagePair>& test);
/// Model flavour; requires image conditioning.
MetricsReport evaluate(const GanModel& model, const std::vector<ImagePair>& test);

/// Shortest decimal form (starting at 6 significant digits) that parses back
/// to the identical double.
std::string format_shortest(double v);

/// CSV: header id,sf,ssim,scd, one row per image in dataset order, then
/// mean and std rows.
std::string metrics_csv(const MetricsReport& report);
void write_metrics_csv(const MetricsReport& report, const std::string& path);

}  // namespace kgan
