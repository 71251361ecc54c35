#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

namespace tilatlas {

/// Interleaved 8-bit raster. Row-major, `Channels` bytes per pixel.
template <int Channels>
struct Image {
  static constexpr int kChannels = Channels;

  int width = 0;
  int height = 0;
  std::vector<std::uint8_t> data;

  Image() = default;
  Image(int w, int h, std::uint8_t fill = 0)
      : width(w), height(h),
        data(static_cast<std::size_t>(w) * h * Channels, fill) {}

  std::size_t offset(int x, int y) const {
    return (static_cast<std::size_t>(y) * width + x) * Channels;
  }
  std::uint8_t* pixel(int x, int y) { return data.data() + offset(x, y); }
  const std::uint8_t* pixel(int x, int y) const {
    return data.data() + offset(x, y);
  }
  void set(int x, int y, const std::array<std::uint8_t, Channels>& v) {
    auto* p = pixel(x, y);
    for (int c = 0; c < Channels; ++c) p[c] = v[c];
  }
  std::array<std::uint8_t, Channels> get(int x, int y) const {
    std::array<std::uint8_t, Channels> v{};
    const auto* p = pixel(x, y);
    for (int c = 0; c < Channels; ++c) v[c] = p[c];
    return v;
  }
  bool empty() const { return width == 0 || height == 0; }

  bool operator==(const Image&) const = default;
};

using RgbImage = Image<3>;
using RgbaImage = Image<4>;
using Rgba = std::array<std::uint8_t, 4>;
using Rgb = std::array<std::uint8_t, 3>;

/// Floating-point interleaved RGB, used for channel-standardized patches.
struct FloatImage {
  int width = 0;
  int height = 0;
  std::vector<double> data;  // width * height * 3
};

RgbImage crop(const RgbImage& src, int x, int y, int w, int h);

// PNG codec (libpng). Encoding is byte-deterministic for identical input.
std::vector<std::uint8_t> encode_png(const RgbaImage& img);
std::vector<std::uint8_t> encode_png(const RgbImage& img);
RgbaImage decode_png_rgba(std::span<const std::uint8_t> bytes);
RgbImage decode_png_rgb(std::span<const std::uint8_t> bytes);

RgbImage read_png_rgb(const std::filesystem::path& path);
void write_file(const std::filesystem::path& path,
                std::span<const std::uint8_t> bytes);
void write_file(const std::filesystem::path& path, std::string_view text);
std::vector<std::uint8_t> read_file_bytes(const std::filesystem::path& path);
std::string read_file_text(const std::filesystem::path& path);

}  // namespace tilatlas
