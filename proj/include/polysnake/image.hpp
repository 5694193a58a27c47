#pragma once

#include <algorithm>
#include <array>
#include <cctype>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <istream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

namespace polysnake {

struct Color {
  double r = 0.0;
  double g = 0.0;
  double b = 0.0;
};

inline Color operator+(Color a, Color b) { return {a.r + b.r, a.g + b.g, a.b + b.b}; }
inline Color operator-(Color a, Color b) { return {a.r - b.r, a.g - b.g, a.b - b.b}; }
inline Color operator*(double s, Color a) { return {s * a.r, s * a.g, s * a.b}; }

inline double dot(Color a, Color b) {
  return a.r * b.r + a.g * b.g + a.b * b.b;
}
inline double norm(Color a) { return std::sqrt(dot(a, a)); }

/// Dense H x W color grid, channels normalized to [0,1]. Row-major, pixel
/// (x, y) covers the unit square [x, x+1) x [y, y+1); its center is at
/// (x + 0.5, y + 0.5).
class ImagePatch {
 public:
  ImagePatch() = default;
  ImagePatch(std::size_t width, std::size_t height, Color fill = {})
      : w_(width), h_(height), px_(width * height, fill) {
    if (width == 0 || height == 0)
      throw std::invalid_argument("image dimensions must be positive");
  }

  std::size_t width() const { return w_; }
  std::size_t height() const { return h_; }

  Color& at(std::size_t x, std::size_t y) { return px_[y * w_ + x]; }
  const Color& at(std::size_t x, std::size_t y) const { return px_[y * w_ + x]; }

 private:
  std::size_t w_ = 0;
  std::size_t h_ = 0;
  std::vector<Color> px_;
};

/// Single-channel binary mask, nonzero = foreground.
class Mask {
 public:
  Mask() = default;
  Mask(std::size_t width, std::size_t height, std::uint8_t fill = 0)
      : w_(width), h_(height), px_(width * height, fill) {
    if (width == 0 || height == 0)
      throw std::invalid_argument("mask dimensions must be positive");
  }

  std::size_t width() const { return w_; }
  std::size_t height() const { return h_; }

  std::uint8_t& at(std::size_t x, std::size_t y) { return px_[y * w_ + x]; }
  std::uint8_t at(std::size_t x, std::size_t y) const { return px_[y * w_ + x]; }

 private:
  std::size_t w_ = 0;
  std::size_t h_ = 0;
  std::vector<std::uint8_t> px_;
};

namespace detail {

// Next whitespace-separated token, skipping '#' comments (netpbm headers).
inline std::string pnm_token(std::istream& in) {
  std::string tok;
  int c;
  while ((c = in.get()) != EOF) {
    if (c == '#') {
      while ((c = in.get()) != EOF && c != '\n') {}
      continue;
    }
    if (!std::isspace(c)) {
      tok.push_back(static_cast<char>(c));
      while ((c = in.get()) != EOF && !std::isspace(c) && c != '#')
        tok.push_back(static_cast<char>(c));
      if (c == '#')
        while ((c = in.get()) != EOF && c != '\n') {}
      return tok;
    }
  }
  throw std::runtime_error("truncated PNM header");
}

inline std::size_t pnm_size(std::istream& in, const char* what) {
  const std::string tok = pnm_token(in);
  std::size_t v = 0;
  try {
    v = std::stoull(tok);
  } catch (const std::exception&) {
    throw std::runtime_error(std::string("bad PNM ") + what + ": " + tok);
  }
  if (v == 0) throw std::runtime_error(std::string("zero PNM ") + what);
  return v;
}

}  // namespace detail

/// Read a netpbm image: P2/P5 (grayscale, replicated to three channels) or
/// P3/P6 (color). Samples are divided by maxval so channels land in [0,1].
inline ImagePatch load_pnm(std::istream& in) {
  const std::string magic = detail::pnm_token(in);
  if (magic != "P2" && magic != "P3" && magic != "P5" && magic != "P6")
    throw std::runtime_error("unsupported PNM magic: " + magic);
  const bool color = magic == "P3" || magic == "P6";
  const bool binary = magic == "P5" || magic == "P6";

  const std::size_t w = detail::pnm_size(in, "width");
  const std::size_t h = detail::pnm_size(in, "height");
  const std::size_t maxval = detail::pnm_size(in, "maxval");
  if (maxval > 65535) throw std::runtime_error("PNM maxval out of range");

  const std::size_t samples = w * h * (color ? 3 : 1);
  std::vector<double> raw(samples);
  if (binary) {
    // Header ends with the single whitespace byte already consumed by the
    // maxval token read. Two-byte samples are big-endian.
    const std::size_t bytes_per = maxval > 255 ? 2 : 1;
    std::vector<unsigned char> buf(samples * bytes_per);
    in.read(reinterpret_cast<char*>(buf.data()),
            static_cast<std::streamsize>(buf.size()));
    if (static_cast<std::size_t>(in.gcount()) != buf.size())
      throw std::runtime_error("truncated PNM pixel data");
    for (std::size_t i = 0; i < samples; ++i) {
      raw[i] = bytes_per == 1
                   ? buf[i]
                   : static_cast<double>(buf[2 * i] << 8 | buf[2 * i + 1]);
    }
  } else {
    for (std::size_t i = 0; i < samples; ++i) {
      const std::string tok = detail::pnm_token(in);
      try {
        raw[i] = std::stod(tok);
      } catch (const std::exception&) {
        throw std::runtime_error("bad PNM sample: " + tok);
      }
    }
  }

  for (const double v : raw)
    if (v < 0.0 || v > static_cast<double>(maxval))
      throw std::runtime_error("PNM sample exceeds maxval");

  ImagePatch img(w, h);
  const double scale = 1.0 / static_cast<double>(maxval);
  for (std::size_t y = 0; y < h; ++y)
    for (std::size_t x = 0; x < w; ++x) {
      const std::size_t i = y * w + x;
      if (color)
        img.at(x, y) = {raw[3 * i] * scale, raw[3 * i + 1] * scale,
                        raw[3 * i + 2] * scale};
      else
        img.at(x, y) = {raw[i] * scale, raw[i] * scale, raw[i] * scale};
    }
  return img;
}

inline ImagePatch load_pnm(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open image: " + path);
  return load_pnm(in);
}

/// Grayscale view of a PNM file, thresholded at > 0 (mask convention).
inline Mask load_mask(const std::string& path) {
  const ImagePatch img = load_pnm(path);
  Mask m(img.width(), img.height());
  for (std::size_t y = 0; y < img.height(); ++y)
    for (std::size_t x = 0; x < img.width(); ++x) {
      const Color& c = img.at(x, y);
      m.at(x, y) = (c.r > 0.0 || c.g > 0.0 || c.b > 0.0) ? 1 : 0;
    }
  return m;
}

inline void save_ppm(const ImagePatch& img, std::ostream& out) {
  out << "P6\n" << img.width() << " " << img.height() << "\n255\n";
  for (std::size_t y = 0; y < img.height(); ++y)
    for (std::size_t x = 0; x < img.width(); ++x) {
      const Color& c = img.at(x, y);
      const auto q = [](double v) {
        return static_cast<unsigned char>(
            std::lround(std::clamp(v, 0.0, 1.0) * 255.0));
      };
      const unsigned char rgb[3] = {q(c.r), q(c.g), q(c.b)};
      out.write(reinterpret_cast<const char*>(rgb), 3);
    }
}

inline void save_ppm(const ImagePatch& img, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write image: " + path);
  save_ppm(img, out);
}

inline void save_pgm(const Mask& mask, std::ostream& out) {
  out << "P5\n" << mask.width() << " " << mask.height() << "\n255\n";
  for (std::size_t y = 0; y < mask.height(); ++y)
    for (std::size_t x = 0; x < mask.width(); ++x) {
      const unsigned char v = mask.at(x, y) ? 255 : 0;
      out.write(reinterpret_cast<const char*>(&v), 1);
    }
}

inline void save_pgm(const Mask& mask, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write mask: " + path);
  save_pgm(mask, out);
}

}  // namespace polysnake
