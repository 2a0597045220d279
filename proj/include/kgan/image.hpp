#pragma once

#include "kgan/tensor.hpp"

#include <string>

namespace kgan {

/// Grayscale image, row-major, pixel values in [0, 1].
struct ImageGray {
  int height = 0;
  int width = 0;
  Array pixels;

  ImageGray() = default;
  ImageGray(int h, int w) : height(h), width(w), pixels(Array::Zero(long(h) * w)) {}

  double operator()(int r, int c) const { return pixels[long(r) * width + c]; }
  double& operator()(int r, int c) { return pixels[long(r) * width + c]; }
  long size() const { return static_cast<long>(pixels.size()); }
};

/// Throws unless dimensions are positive, the pixel buffer matches them and
/// every value lies in [0, 1].
void validate_image(const ImageGray& img);

/// Binary PGM ("P5", maxval 255). Stored byte = round(v * 255); loaded value
/// = byte / 255. Parse failures report the byte offset.
ImageGray load_pgm(const std::string& path);
void save_pgm(const ImageGray& img, const std::string& path);

// In-memory codec used by the file functions and by tests.
std::string encode_pgm(const ImageGray& img);
ImageGray decode_pgm(const std::string& bytes);

/// Nearest-neighbour resampling; source index = floor((i + 0.5) * H / H').
ImageGray resize_nearest(const ImageGray& img, int new_height, int new_width);

}  // namespace kgan
