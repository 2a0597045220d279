#include "kgan/image.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace kgan {

void validate_image(const ImageGray& img) {
  if (img.height < 1 || img.width < 1)
    throw std::invalid_argument("image dimensions must be positive");
  if (img.pixels.size() != long(img.height) * img.width)
    throw std::invalid_argument("image pixel count does not match dimensions");
  if (img.pixels.size() > 0 &&
      (!(img.pixels.minCoeff() >= 0.0) || !(img.pixels.maxCoeff() <= 1.0)))
    throw std::domain_error("image pixels must lie in [0, 1]");
}

std::string encode_pgm(const ImageGray& img) {
  validate_image(img);
  std::string out = "P5\n" + std::to_string(img.width) + " " +
                    std::to_string(img.height) + "\n255\n";
  out.reserve(out.size() + static_cast<std::size_t>(img.size()));
  for (long i = 0; i < img.size(); ++i)
    out.push_back(static_cast<char>(
        static_cast<unsigned char>(std::lround(img.pixels[i] * 255.0))));
  return out;
}

namespace {

[[noreturn]] void parse_fail(const std::string& what, std::size_t offset) {
  throw std::runtime_error("PGM parse error at byte " + std::to_string(offset) +
                           ": " + what);
}

// PNM whitespace plus '#' comments running to end of line.
void skip_space(const std::string& s, std::size_t& pos) {
  while (pos < s.size()) {
    const char c = s[pos];
    if (c == '#') {
      while (pos < s.size() && s[pos] != '\n') ++pos;
    } else if (c == ' ' || c == '\t' || c == '\r' || c == '\n' || c == '\v' ||
               c == '\f') {
      ++pos;
    } else {
      break;
    }
  }
}

long read_number(const std::string& s, std::size_t& pos, const char* field) {
  skip_space(s, pos);
  if (pos >= s.size() || s[pos] < '0' || s[pos] > '9')
    parse_fail(std::string("expected ") + field, pos);
  long v = 0;
  while (pos < s.size() && s[pos] >= '0' && s[pos] <= '9') {
    v = v * 10 + (s[pos] - '0');
    if (v > 1'000'000) parse_fail(std::string(field) + " out of range", pos);
    ++pos;
  }
  return v;
}

}  // namespace

ImageGray decode_pgm(const std::string& bytes) {
  std::size_t pos = 0;
  if (bytes.size() < 2) parse_fail("truncated header", bytes.size());
  if (bytes[0] != 'P' || bytes[1] != '5') {
    if (bytes[0] == 'P')
      parse_fail(std::string("unsupported PNM variant P") + bytes[1] +
                     " (only binary P5 is accepted)",
                 0);
    parse_fail("missing P5 magic", 0);
  }
  pos = 2;
  const long w = read_number(bytes, pos, "width");
  const long h = read_number(bytes, pos, "height");
  const long maxval = read_number(bytes, pos, "maxval");
  if (w < 1 || h < 1) parse_fail("dimensions must be positive", pos);
  if (maxval != 255) parse_fail("maxval must be 255", pos);
  if (pos >= bytes.size()) parse_fail("missing payload separator", pos);
  const char sep = bytes[pos];
  if (sep != ' ' && sep != '\t' && sep != '\r' && sep != '\n')
    parse_fail("expected single whitespace before payload", pos);
  ++pos;
  const std::size_t need = static_cast<std::size_t>(w) * static_cast<std::size_t>(h);
  if (bytes.size() - pos < need)
    parse_fail("payload truncated (" + std::to_string(bytes.size() - pos) + " of " +
                   std::to_string(need) + " bytes)",
               bytes.size());
  ImageGray img(static_cast<int>(h), static_cast<int>(w));
  for (std::size_t i = 0; i < need; ++i)
    img.pixels[static_cast<long>(i)] =
        static_cast<double>(static_cast<unsigned char>(bytes[pos + i])) / 255.0;
  return img;
}

ImageGray load_pgm(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open " + path);
  std::ostringstream buf;
  buf << in.rdbuf();
  try {
    return decode_pgm(buf.str());
  } catch (const std::runtime_error& e) {
    throw std::runtime_error(path + ": " + e.what());
  }
}

void save_pgm(const ImageGray& img, const std::string& path) {
  const std::string bytes = encode_pgm(img);
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error("cannot open " + path + " for writing");
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw std::runtime_error("write failed: " + path);
}

ImageGray resize_nearest(const ImageGray& img, int new_height, int new_width) {
  validate_image(img);
  if (new_height < 2 || new_width < 2)
    throw std::invalid_argument("resize_nearest: target size must be >= 2");
  ImageGray out(new_height, new_width);
  for (int r = 0; r < new_height; ++r) {
    const int sr = static_cast<int>(
        std::floor((r + 0.5) * static_cast<double>(img.height) / new_height));
    for (int c = 0; c < new_width; ++c) {
      const int sc = static_cast<int>(
          std::floor((c + 0.5) * static_cast<double>(img.width) / new_width));
      out(r, c) = img(std::min(sr, img.height - 1), std::min(sc, img.width - 1));
    }
  }
  return out;
}

}  // namespace kgan
