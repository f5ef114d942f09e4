#include "pas/render/raster.hpp"

#include "pas/core/errors.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <cstring>
#include <fstream>

namespace pas {

namespace {

constexpr std::array<char, 8> kMagic = {'P', 'A', 'S', 'R', 'G', 'B', 'A', '1'};

void putU32(std::ostream& out, uint32_t v) {
  const std::array<char, 4> b = {
      static_cast<char>(v & 0xff), static_cast<char>((v >> 8) & 0xff), static_cast<char>((v >> 16) & 0xff),
      static_cast<char>((v >> 24) & 0xff)};
  out.write(b.data(), 4);
}

uint32_t getU32(std::istream& in) {
  std::array<unsigned char, 4> b{};
  in.read(reinterpret_cast<char*>(b.data()), 4);
  if (!in) {
    throwInput("PASRGBA1: truncated header");
  }
  return uint32_t(b[0]) | (uint32_t(b[1]) << 8) | (uint32_t(b[2]) << 16) | (uint32_t(b[3]) << 24);
}

uint8_t toByte(double v) {
  return static_cast<uint8_t>(std::lround(std::clamp(v, 0.0, 1.0) * 255.0));
}

} // namespace

Raster::Raster(int width, int height) : width_(width), height_(height) {
  if (width < 1 || height < 1) {
    throwInput("raster dimensions must be positive");
  }
  data_.assign(static_cast<size_t>(width) * static_cast<size_t>(height) * 4, 0.0);
}

Eigen::MatrixXd Raster::channel(int c) const {
  Eigen::MatrixXd m(height_, width_);
  for (int y = 0; y < height_; ++y) {
    for (int x = 0; x < width_; ++x) {
      m(y, x) = at(x, y, c);
    }
  }
  return m;
}

void Raster::setChannel(int c, const Eigen::MatrixXd& values) {
  if (values.rows() != height_ || values.cols() != width_) {
    throwInput("raster channel has the wrong size");
  }
  for (int y = 0; y < height_; ++y) {
    for (int x = 0; x < width_; ++x) {
      at(x, y, c) = values(y, x);
    }
  }
}

void writeRgba(std::ostream& out, const Raster& raster) {
  out.write(kMagic.data(), kMagic.size());
  putU32(out, static_cast<uint32_t>(raster.width()));
  putU32(out, static_cast<uint32_t>(raster.height()));
  std::vector<char> bytes(raster.data().size());
  std::transform(raster.data().begin(), raster.data().end(), bytes.begin(), [](double v) {
    return static_cast<char>(toByte(v));
  });
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
}

void writeRgba(const std::filesystem::path& path, const Raster& raster) {
  std::ofstream out(path, std::ios::binary);
  if (!out) {
    throwInput("cannot write image: " + path.string());
  }
  writeRgba(out, raster);
}

Raster readRgba(std::istream& in) {
  std::array<char, 8> magic{};
  in.read(magic.data(), magic.size());
  if (!in || magic != kMagic) {
    throwInput("not a PASRGBA1 image");
  }
  const uint32_t w = getU32(in);
  const uint32_t h = getU32(in);
  if (w == 0 || h == 0 || w > 16384 || h > 16384) {
    throwInput("PASRGBA1: implausible dimensions");
  }
  Raster r(static_cast<int>(w), static_cast<int>(h));
  std::vector<unsigned char> bytes(r.data().size());
  in.read(reinterpret_cast<char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!in) {
    throwInput("PASRGBA1: truncated pixel data");
  }
  for (size_t i = 0; i < bytes.size(); ++i) {
    r.data()[i] = bytes[i] / 255.0;
  }
  return r;
}

Raster readRgba(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) {
    throwInput("cannot open image: " + path.string());
  }
  return readRgba(in);
}

Raster quantized(const Raster& raster) {
  Raster out = raster;
  for (auto& v : out.data()) {
    v = toByte(v) / 255.0;
  }
  return out;
}

} // namespace pas
