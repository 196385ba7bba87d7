#include "gazekit/image.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <stdexcept>
#include <string>

namespace gazekit {

Image::Image(int side, double fill) : side_(side) {
    if (side <= 0) {
        throw std::invalid_argument("Image: side must be positive");
    }
    data_.assign(static_cast<std::size_t>(side) * side, std::clamp(fill, 0.0, 1.0));
}

Image::Image(int side, std::vector<double> data) : side_(side), data_(std::move(data)) {
    if (side <= 0 || data_.size() != static_cast<std::size_t>(side) * side) {
        throw std::invalid_argument("Image: data size does not match side*side");
    }
    clamp01();
}

void Image::clamp01() {
    for (double& v : data_) {
        v = std::clamp(v, 0.0, 1.0);
    }
}

namespace {

// Reads one whitespace-delimited token, skipping '#' comment lines.
std::string next_token(std::istream& in) {
    std::string tok;
    int ch;
    while ((ch = in.get()) != EOF) {
        if (ch == '#') {
            while ((ch = in.get()) != EOF && ch != '\n') {
            }
        } else if (!std::isspace(ch)) {
            tok.push_back(static_cast<char>(ch));
            break;
        }
    }
    while ((ch = in.get()) != EOF && !std::isspace(ch)) {
        tok.push_back(static_cast<char>(ch));
    }
    return tok;
}

}  // namespace

Image read_pgm(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw std::runtime_error("read_pgm: cannot open " + path.string());
    }
    if (next_token(in) != "P5") {
        throw std::runtime_error("read_pgm: not a binary PGM (P5): " + path.string());
    }
    const int width = std::stoi(next_token(in));
    const int height = std::stoi(next_token(in));
    const int maxval = std::stoi(next_token(in));
    if (width != height || width <= 0) {
        throw std::runtime_error("read_pgm: image must be square: " + path.string());
    }
    if (maxval != 255) {
        throw std::runtime_error("read_pgm: only 8-bit maxval 255 supported: " + path.string());
    }
    std::vector<double> data(static_cast<std::size_t>(width) * height);
    std::vector<unsigned char> raw(data.size());
    in.read(reinterpret_cast<char*>(raw.data()), static_cast<std::streamsize>(raw.size()));
    if (in.gcount() != static_cast<std::streamsize>(raw.size())) {
        throw std::runtime_error("read_pgm: truncated pixel data: " + path.string());
    }
    for (std::size_t i = 0; i < raw.size(); ++i) {
        data[i] = raw[i] / 255.0;
    }
    return Image(width, std::move(data));
}

void write_pgm(const Image& img, const std::filesystem::path& path) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) {
        throw std::runtime_error("write_pgm: cannot open " + path.string());
    }
    out << "P5\n" << img.side() << ' ' << img.side() << "\n255\n";
    std::vector<unsigned char> raw(img.data().size());
    for (std::size_t i = 0; i < raw.size(); ++i) {
        const long b = std::lround(img.data()[i] * 255.0);
        raw[i] = static_cast<unsigned char>(std::clamp(b, 0L, 255L));
    }
    out.write(reinterpret_cast<const char*>(raw.data()), static_cast<std::streamsize>(raw.size()));
    if (!out) {
        throw std::runtime_error("write_pgm: write failed: " + path.string());
    }
}

}  // namespace gazekit
