#include "kgan/phantom.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace fs = std::filesystem;

namespace kgan {

namespace {

constexpr std::uint64_t kSplitShuffleStream = (1ull << 32) + 1;
constexpr double kPi = 3.14159265358979323846;

struct Ellipse {
  double cx, cy, ax, ay, cos_t, sin_t, intensity;
};

// Smooth low-frequency noise: bilinear interpolation of a seeded
// (grid+1)^2 lattice of uniforms in [-1, 1].
double lattice_noise(const std::vector<double>& lattice, int grid, double u, double v) {
  const double x = u * grid;
  const double y = v * grid;
  const int x0 = std::min(static_cast<int>(x), grid - 1);
  const int y0 = std::min(static_cast<int>(y), grid - 1);
  const double fx = x - x0;
  const double fy = y - y0;
  const int s = grid + 1;
  const double n00 = lattice[static_cast<std::size_t>(y0 * s + x0)];
  const double n01 = lattice[static_cast<std::size_t>(y0 * s + x0 + 1)];
  const double n10 = lattice[static_cast<std::size_t>((y0 + 1) * s + x0)];
  const double n11 = lattice[static_cast<std::size_t>((y0 + 1) * s + x0 + 1)];
  return (1 - fy) * ((1 - fx) * n00 + fx * n01) + fy * ((1 - fx) * n10 + fx * n11);
}

}  // namespace

bool phantom_size_supported(int size) {
  return size == 8 || size == 16 || size == 32 || size == 64 || size == 128 ||
         size == 256;
}

ImageGray smooth_noise_image(Rng& rng, int size, int grid) {
  if (size < 2 || grid < 1)
    throw std::invalid_argument("smooth_noise_image: bad size or grid");
  std::vector<double> lattice(static_cast<std::size_t>((grid + 1) * (grid + 1)));
  for (double& v : lattice) v = rng.uniform();
  ImageGray img(size, size);
  for (int r = 0; r < size; ++r)
    for (int c = 0; c < size; ++c)
      img(r, c) = lattice_noise(lattice, grid, (c + 0.5) / size, (r + 0.5) / size);
  return img;
}

ImagePair generate_phantom_pair(std::uint64_t seed, int size) {
  if (!phantom_size_supported(size))
    throw std::invalid_argument("phantom size " + std::to_string(size) +
                                " unsupported (use 8/16/32/64/128/256)");
  Rng rng(seed);

  const int n_ellipses = 3 + static_cast<int>(rng.below(5));  // 3..7
  std::vector<Ellipse> ellipses;
  ellipses.reserve(static_cast<std::size_t>(n_ellipses));
  for (int i = 0; i < n_ellipses; ++i) {
    Ellipse e;
    e.cx = rng.uniform(0.22, 0.78) * size;
    e.cy = rng.uniform(0.22, 0.78) * size;
    e.ax = rng.uniform(0.10, 0.34) * size;
    e.ay = rng.uniform(0.10, 0.34) * size;
    const double theta = rng.uniform(0.0, kPi);
    e.cos_t = std::cos(theta);
    e.sin_t = std::sin(theta);
    e.intensity = rng.uniform(0.30, 0.95);
    ellipses.push_back(e);
  }

  constexpr int kNoiseGrid = 4;
  std::vector<double> lattice(static_cast<std::size_t>((kNoiseGrid + 1) *
                                                       (kNoiseGrid + 1)));
  for (double& v : lattice) v = rng.uniform(-1.0, 1.0);

  // Geometry field: later ellipses paint over earlier ones.
  ImageGray field(size, size);
  for (int r = 0; r < size; ++r) {
    for (int c = 0; c < size; ++c) {
      const double y = r + 0.5;
      const double x = c + 0.5;
      double v = 0.0;
      for (const Ellipse& e : ellipses) {
        const double dx = x - e.cx;
        const double dy = y - e.cy;
        const double u = (dx * e.cos_t + dy * e.sin_t) / e.ax;
        const double w = (-dx * e.sin_t + dy * e.cos_t) / e.ay;
        if (u * u + w * w <= 1.0) v = e.intensity;
      }
      field(r, c) = v;
    }
  }

  // Edge magnitude of the geometry, central differences.
  ImageGray edge(size, size);
  for (int r = 0; r < size; ++r) {
    for (int c = 0; c < size; ++c) {
      const int rm = std::max(r - 1, 0), rp = std::min(r + 1, size - 1);
      const int cm = std::max(c - 1, 0), cp = std::min(c + 1, size - 1);
      const double gy = (field(rp, c) - field(rm, c)) / 2.0;
      const double gx = (field(r, cp) - field(r, cm)) / 2.0;
      edge(r, c) = std::hypot(gx, gy);
    }
  }

  ImagePair pair;
  pair.seed = seed;
  pair.a = ImageGray(size, size);
  pair.b = ImageGray(size, size);
  for (int r = 0; r < size; ++r) {
    for (int c = 0; c < size; ++c) {
      const double v = field(r, c);
      const double n =
          lattice_noise(lattice, kNoiseGrid, (c + 0.5) / size, (r + 0.5) / size);
      // Soft-tissue curve: compresses the bright end, keeps mid tones apart.
      double a = (v > 0.0) ? 0.22 + 0.62 * std::pow(v, 0.8) : 0.04;
      a += 0.03 * n;
      // Bone/edge curve: thresholded brightness jump plus boundary accent.
      double b;
      if (v > 0.0) {
        b = (v >= 0.62) ? 0.68 + 0.30 * v : 0.16 + 0.22 * v;
        b += 0.50 * std::min(1.0, 2.0 * edge(r, c));
      } else {
        b = 0.03;
      }
      pair.a(r, c) = std::clamp(a, 0.0, 1.0);
      pair.b(r, c) = std::clamp(b, 0.0, 1.0);
    }
  }
  return pair;
}

DatasetSplit make_split(int n_pairs, int size, std::uint64_t master_seed,
                        double train_fraction) {
  if (n_pairs < 3) throw std::invalid_argument("make_split: need at least 3 pairs");
  if (!(train_fraction > 0.0) || !(train_fraction < 1.0))
    throw std::invalid_argument("make_split: train_fraction must lie in (0, 1)");
  const long n_train_raw = std::llround(n_pairs * train_fraction);
  const int n_train =
      static_cast<int>(std::clamp(n_train_raw, 1l, static_cast<long>(n_pairs - 1)));

  std::vector<int> ids(static_cast<std::size_t>(n_pairs));
  for (int i = 0; i < n_pairs; ++i) ids[static_cast<std::size_t>(i)] = i;
  Rng shuffle_rng(derive_seed(master_seed, kSplitShuffleStream));
  shuffle_rng.shuffle(ids);

  std::vector<int> train_ids(ids.begin(), ids.begin() + n_train);
  std::vector<int> test_ids(ids.begin() + n_train, ids.end());
  std::sort(train_ids.begin(), train_ids.end());
  std::sort(test_ids.begin(), test_ids.end());

  DatasetSplit split;
  auto emit = [&](const std::vector<int>& members, std::vector<ImagePair>& out) {
    out.reserve(members.size());
    for (int id : members) {
      ImagePair p = generate_phantom_pair(
          derive_seed(master_seed, static_cast<std::uint64_t>(id)), size);
      p.pair_id = id;
      out.push_back(std::move(p));
    }
  };
  emit(train_ids, split.train);
  emit(test_ids, split.test);
  return split;
}

ImageGray flip_horizontal(const ImageGray& img) {
  ImageGray out(img.height, img.width);
  for (int r = 0; r < img.height; ++r)
    for (int c = 0; c < img.width; ++c) out(r, c) = img(r, img.width - 1 - c);
  return out;
}

ImageGray flip_vertical(const ImageGray& img) {
  ImageGray out(img.height, img.width);
  for (int r = 0; r < img.height; ++r)
    for (int c = 0; c < img.width; ++c) out(r, c) = img(img.height - 1 - r, c);
  return out;
}

ImagePair augment_flip(const ImagePair& pair, Rng& rng) {
  const bool h = rng.coin();
  const bool v = rng.coin();
  ImagePair out = pair;
  if (h) {
    out.a = flip_horizontal(out.a);
    out.b = flip_horizontal(out.b);
  }
  if (v) {
    out.a = flip_vertical(out.a);
    out.b = flip_vertical(out.b);
  }
  return out;
}

// ---------------------------------------------------------------------------
// On-disk dataset

std::string manifest_path(const std::string& dir) {
  return (fs::path(dir) / "manifest.csv").string();
}

namespace {

std::string pair_file(int pair_id, char modality) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "pair_%05d_%c.pgm", pair_id, modality);
  return buf;
}

}  // namespace

void write_dataset(const DatasetSplit& split, const std::string& dir) {
  fs::create_directories(dir);
  std::ostringstream manifest;
  manifest << "pair_id,seed,split,path_a,path_b\n";
  auto emit = [&](const std::vector<ImagePair>& pairs, const char* tag) {
    for (const ImagePair& p : pairs) {
      const std::string fa = pair_file(p.pair_id, 'a');
      const std::string fb = pair_file(p.pair_id, 'b');
      save_pgm(p.a, (fs::path(dir) / fa).string());
      save_pgm(p.b, (fs::path(dir) / fb).string());
      manifest << p.pair_id << ',' << p.seed << ',' << tag << ',' << fa << ',' << fb
               << '\n';
    }
  };
  emit(split.train, "train");
  emit(split.test, "test");
  std::ofstream out(manifest_path(dir), std::ios::trunc);
  if (!out) throw std::runtime_error("cannot write " + manifest_path(dir));
  out << manifest.str();
}

DatasetSplit load_dataset(const std::string& dir) {
  std::ifstream in(manifest_path(dir));
  if (!in) throw std::runtime_error("missing dataset manifest: " + manifest_path(dir));
  std::string line;
  if (!std::getline(in, line) || line != "pair_id,seed,split,path_a,path_b")
    throw std::runtime_error(manifest_path(dir) + ": unexpected manifest header");
  DatasetSplit split;
  int lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    std::istringstream row(line);
    std::string id_s, seed_s, tag, fa, fb;
    if (!std::getline(row, id_s, ',') || !std::getline(row, seed_s, ',') ||
        !std::getline(row, tag, ',') || !std::getline(row, fa, ',') ||
        !std::getline(row, fb))
      throw std::runtime_error(manifest_path(dir) + ": malformed row at line " +
                               std::to_string(lineno));
    ImagePair p;
    p.pair_id = std::stoi(id_s);
    p.seed = std::stoull(seed_s);
    p.a = load_pgm((fs::path(dir) / fa).string());
    p.b = load_pgm((fs::path(dir) / fb).string());
    if (tag == "train")
      split.train.push_back(std::move(p));
    else if (tag == "test")
      split.test.push_back(std::move(p));
    else
      throw std::runtime_error(manifest_path(dir) + ": unknown split tag '" + tag +
                               "' at line " + std::to_string(lineno));
  }
  return split;
}

}  // namespace kgan
