#pragma once

#include "kgan/image.hpp"
#include "kgan/rng.hpp"

#include <cstdint>
#include <string>
#include <vector>

namespace kgan {

/// Co-registered two-modality pair: same geometry, different contrast.
/// Modality A is the soft-tissue (MR-like) rendering, modality B the
/// bone/edge (CT-like) rendering.
struct ImagePair {
  ImageGray a;
  ImageGray b;
  int pair_id = 0;
  std::uint64_t seed = 0;
};

struct DatasetSplit {
  std::vector<ImagePair> train;
  std::vector<ImagePair> test;
};

bool phantom_size_supported(int size);

/// Seeded ellipse phantom rendered through two contrast curves. Bit-identical
/// for the same (seed, size); all pixels in [0, 1].
ImagePair generate_phantom_pair(std::uint64_t seed, int size);

/// Low-frequency random field: bilinear upsample of a (grid+1)^2 lattice of
/// uniforms in [0,1]. Consumes exactly (grid+1)^2 draws. This is the noise
/// fed to noise-conditioned generators; per-pixel iid noise carries no
/// spatial structure a conv stack could turn into phantom-like geometry.
ImageGray smooth_noise_image(Rng& rng, int size, int grid = 4);

/// Pair seeds derive from (master_seed, index); membership comes from a
/// seeded shuffle. Train gets round(n_pairs * train_fraction) pairs.
DatasetSplit make_split(int n_pairs, int size, std::uint64_t master_seed,
                        double train_fraction);

ImageGray flip_horizontal(const ImageGray& img);
ImageGray flip_vertical(const ImageGray& img);

/// With probability 1/2 each, flip horizontally and/or vertically — always
/// both modalities together. Consumes exactly two draws from rng.
ImagePair augment_flip(const ImagePair& pair, Rng& rng);

// On-disk dataset layout: <dir>/pair_NNNNN_{a,b}.pgm plus manifest.csv with
// columns pair_id,seed,split,path_a,path_b (paths relative to the manifest).
void write_dataset(const DatasetSplit& split, const std::string& dir);
DatasetSplit load_dataset(const std::string& dir);
std::string manifest_path(const std::string& dir);

}  // namespace kgan
