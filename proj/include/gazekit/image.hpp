#pragma once

#include <cstddef>
#include <filesystem>
#include <vector>

namespace gazekit {

/// Square single-channel image, row-major doubles in [0, 1].
class Image {
  public:
    Image() = default;
    explicit Image(int side, double fill = 0.0);
    Image(int side, std::vector<double> data);  // clamps to [0, 1]

    int side() const { return side_; }
    double& at(int row, int col) { return data_[static_cast<std::size_t>(row) * side_ + col]; }
    double at(int row, int col) const { return data_[static_cast<std::size_t>(row) * side_ + col]; }
    const std::vector<double>& data() const { return data_; }
    std::vector<double>& data() { return data_; }

    void clamp01();

  private:
    int side_ = 0;
    std::vector<double> data_;
};

/// 8-bit binary PGM (P5). Pixel byte b maps to b/255; writing rounds v*255.
Image read_pgm(const std::filesystem::path& path);
void write_pgm(const Image& img, const std::filesystem::path& path);

}  // namespace gazekit
