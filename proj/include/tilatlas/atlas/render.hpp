#pragma once

// Heatmap rasterization (one pixel per patch), tumor/TIL overlays and the
// tile pyramid served to the viewer.

#include <optional>
#include <string_view>
#include <vector>

#include "tilatlas/gridmap.hpp"
#include "tilatlas/image.hpp"

namespace tilatlas {

enum class Colormap { kGrayscale, kHeat, kPaper };
std::string_view to_string(Colormap c);
Colormap parse_colormap(std::string_view s);

namespace overlay_colors {
inline constexpr Rgba kLymphocyte{255, 0, 0, 255};   // red
inline constexpr Rgba kCancer{255, 255, 0, 255};     // yellow
inline constexpr Rgba kTissue{192, 192, 192, 255};   // grey
inline constexpr Rgba kBackground{255, 255, 255, 255};
inline constexpr Rgba kTransparent{0, 0, 0, 0};
}  // namespace overlay_colors

inline constexpr double kDefaultTilThreshold = 0.5;

struct RenderParams {
  Colormap colormap = Colormap::kHeat;
  std::optional<double> threshold;
  std::optional<AggregationConfig> aggregation;

  /// Cancer maps: 4x4 max aggregation, then threshold 0.6. TIL maps: raw.
  static RenderParams defaults_for(LabelKind kind);
};

/// Pipeline: optional aggregation, optional threshold (cells below it are
/// transparent, or tissue-grey under the "paper" colormap), then colormap.
/// Uncovered cells are transparent.
RgbaImage render_heatmap(const ProbabilityMap& map, const RenderParams& params,
                         unsigned threads = 1);

Rgba colormap_color(Colormap c, double p, LabelKind kind);

struct OverlayParams {
  double til_threshold = kDefaultTilThreshold;
  double cancer_threshold = kDefaultCancerThreshold;
  std::optional<AggregationConfig> cancer_aggregation = kDefaultAggregation;
};

/// Lymphocyte-positive -> red, else cancer-positive -> yellow, else tissue
/// -> grey, else white.
RgbaImage render_overlay(const ProbabilityMap& til, const ProbabilityMap& tumor,
                         const TissueMask& mask, const OverlayParams& params = {});

/// Tissue = patch covered by either map (predictions exist only on tissue).
TissueMask coverage_tissue_mask(const ProbabilityMap& a, const ProbabilityMap& b);

inline constexpr int kTileSize = 256;

struct PyramidLevel {
  int width = 0;
  int height = 0;
  int tiles_x = 0;
  int tiles_y = 0;
};

/// Level 0 is full resolution; each level halves (ceil) until the image fits
/// in one tile.
std::vector<PyramidLevel> pyramid_levels(int width, int height,
                                         int tile_size = kTileSize);

/// Alpha-weighted 2x2 box filter with ceil dimensions.
RgbaImage downsample_half(const RgbaImage& img);

class TilePyramid {
 public:
  explicit TilePyramid(RgbaImage base, int tile_size = kTileSize);

  int levels() const { return static_cast<int>(images_.size()); }
  const PyramidLevel& level(int z) const { return info_.at(static_cast<std::size_t>(z)); }
  const RgbaImage& image(int z) const { return images_.at(static_cast<std::size_t>(z)); }
  int tile_size() const { return tile_size_; }

  /// tile_size x tile_size; pixels past the level edge are transparent.
  /// Out-of-range (z, x, y) is a not-found error.
  RgbaImage tile(int z, int x, int y) const;

 private:
  int tile_size_;
  std::vector<RgbaImage> images_;
  std::vector<PyramidLevel> info_;
};

}  // namespace tilatlas
