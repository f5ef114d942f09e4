#pragma once

#include <Eigen/Core>

#include <filesystem>
#include <iosfwd>
#include <vector>

namespace pas {

/// W×H RGBA image, values in [0, 1], stored row-major with interleaved channels.
class Raster {
 public:
  Raster() = default;
  Raster(int width, int height);

  [[nodiscard]] int width() const {
    return width_;
  }
  [[nodiscard]] int height() const {
    return height_;
  }
  double& at(int x, int y, int c) {
    return data_[index(x, y, c)];
  }
  [[nodiscard]] double at(int x, int y, int c) const {
    return data_[index(x, y, c)];
  }
  [[nodiscard]] const std::vector<double>& data() const {
    return data_;
  }
  std::vector<double>& data() {
    return data_;
  }

  /// One channel as an H×W matrix (row = y).
  [[nodiscard]] Eigen::MatrixXd channel(int c) const;
  void setChannel(int c, const Eigen::MatrixXd& values);

  bool operator==(const Raster&) const = default;

 private:
  [[nodiscard]] size_t index(int x, int y, int c) const {
    return (static_cast<size_t>(y) * static_cast<size_t>(width_) + static_cast<size_t>(x)) * 4 + static_cast<size_t>(c);
  }

  int width_ = 0;
  int height_ = 0;
  std::vector<double> data_;
};

/// PASRGBA1 container: 8-byte magic, u32 width, u32 height (little-endian), then W·H·4 bytes.
void writeRgba(std::ostream& out, const Raster& raster);
void writeRgba(const std::filesystem::path& path, const Raster& raster);
Raster readRgba(std::istream& in);
Raster readRgba(const std::filesystem::path& path);

/// Values quantized to the 8-bit grid of the file format.
Raster quantized(const Raster& raster);

} // namespace pas
