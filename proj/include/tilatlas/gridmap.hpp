#pragma once

// Patch-grid data model: geometry, probability maps, block aggregation,
// thresholding, tissue masks and the combined tumor/TIL RGB encoding.

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "tilatlas/image.hpp"

namespace tilatlas {

struct PixelRect {
  std::int64_t x = 0;
  std::int64_t y = 0;
  std::int64_t width = 0;
  std::int64_t height = 0;

  bool operator==(const PixelRect&) const = default;
};

/// Uniform partition of a slide (base magnification) into square patches.
/// Row index `i` grows downwards, column index `j` to the right; the last
/// row/column is clipped to the slide bounds.
class GridGeometry {
 public:
  GridGeometry() = default;

  static GridGeometry from_slide(std::int64_t slide_width_px,
                                 std::int64_t slide_height_px,
                                 std::int64_t patch_size_px,
                                 std::optional<double> base_mpp = std::nullopt);

  std::int64_t slide_width_px() const { return slide_width_; }
  std::int64_t slide_height_px() const { return slide_height_; }
  std::int64_t patch_size_px() const { return patch_size_; }
  std::optional<double> base_mpp() const { return base_mpp_; }
  std::int64_t rows() const { return rows_; }
  std::int64_t cols() const { return cols_; }
  std::size_t cell_count() const {
    return static_cast<std::size_t>(rows_) * static_cast<std::size_t>(cols_);
  }
  std::size_t index(std::int64_t row, std::int64_t col) const {
    return static_cast<std::size_t>(row) * static_cast<std::size_t>(cols_) +
           static_cast<std::size_t>(col);
  }
  bool contains(std::int64_t row, std::int64_t col) const {
    return row >= 0 && col >= 0 && row < rows_ && col < cols_;
  }

  PixelRect patch_rect(std::int64_t row, std::int64_t col) const;

  /// "3500x3500px/350 (10x10)"
  std::string describe() const;

  // mpp is descriptive metadata and does not take part in equality.
  bool operator==(const GridGeometry& o) const {
    return slide_width_ == o.slide_width_ && slide_height_ == o.slide_height_ &&
           patch_size_ == o.patch_size_;
  }

 private:
  std::int64_t slide_width_ = 0;
  std::int64_t slide_height_ = 0;
  std::int64_t patch_size_ = 0;
  std::optional<double> base_mpp_;
  std::int64_t cols_ = 0;
  std::int64_t rows_ = 0;
};

GridGeometry grid_from_slide(std::int64_t slide_width_px,
                             std::int64_t slide_height_px,
                             std::int64_t patch_size_px);

enum class LabelKind { kCancer, kTil };
std::string_view to_string(LabelKind kind);
LabelKind parse_label_kind(std::string_view s);

struct PredictionRecord {
  std::int64_t x = 0;  // top-left corner, base px
  std::int64_t y = 0;
  double prob = 0.0;
};

/// Dense per-patch probabilities over a grid. Cells without a prediction are
/// flagged uncovered and never read as 0.0.
class ProbabilityMap {
 public:
  ProbabilityMap() = default;
  ProbabilityMap(GridGeometry geometry, std::vector<double> values,
                 std::vector<std::uint8_t> coverage, LabelKind kind,
                 std::string provenance);

  static ProbabilityMap uncovered(const GridGeometry& geometry, LabelKind kind,
                                  std::string provenance);
  /// Fully covered map from a row-major value vector.
  static ProbabilityMap dense(const GridGeometry& geometry,
                              std::vector<double> values, LabelKind kind,
                              std::string provenance = {});

  const GridGeometry& geometry() const { return geometry_; }
  LabelKind label_kind() const { return kind_; }
  const std::string& provenance() const { return provenance_; }

  double value(std::int64_t row, std::int64_t col) const {
    return values_[geometry_.index(row, col)];
  }
  bool covered(std::int64_t row, std::int64_t col) const {
    return coverage_[geometry_.index(row, col)] != 0;
  }
  std::span<const double> values() const { return values_; }
  std::span<const std::uint8_t> coverage() const { return coverage_; }
  std::size_t covered_count() const;

  bool operator==(const ProbabilityMap&) const = default;

 private:
  GridGeometry geometry_;
  std::vector<double> values_;
  std::vector<std::uint8_t> coverage_;
  LabelKind kind_ = LabelKind::kCancer;
  std::string provenance_;
};

/// Places records on the grid. Rejects misaligned or out-of-bounds corners,
/// probabilities outside [0,1], and duplicate cells.
ProbabilityMap map_from_predictions(std::span<const PredictionRecord> records,
                                    const GridGeometry& geometry,
                                    LabelKind kind = LabelKind::kCancer,
                                    std::string provenance = {});

enum class AggregationFunc { kMax, kMedian, kAverage };
std::string_view to_string(AggregationFunc f);
AggregationFunc parse_aggregation_func(std::string_view s);

struct AggregationConfig {
  int window = 4;
  AggregationFunc func = AggregationFunc::kMax;

  void validate() const;
  bool operator==(const AggregationConfig&) const = default;
};

/// Default post-processing for cancer maps: 4x4 blocks, max.
inline constexpr AggregationConfig kDefaultAggregation{4, AggregationFunc::kMax};

/// Block aggregation. The grid is cut into non-overlapping `window` x
/// `window` blocks anchored at multiples of the window; every cell of a block
/// receives f over the covered values of that block. Blocks with no covered
/// cell stay uncovered. `threads` > 1 splits block rows across workers and
/// produces the same bits as the sequential pass.
ProbabilityMap aggregate(const ProbabilityMap& map,
                         const AggregationConfig& cfg, unsigned threads = 1);

enum class PatchLabel : std::uint8_t { kNegative = 0, kPositive = 1, kUncovered = 2 };

class LabelMap {
 public:
  LabelMap() = default;
  LabelMap(GridGeometry geometry, std::vector<PatchLabel> labels,
           std::optional<double> threshold_used = std::nullopt);

  const GridGeometry& geometry() const { return geometry_; }
  PatchLabel at(std::int64_t row, std::int64_t col) const {
    return labels_[geometry_.index(row, col)];
  }
  std::span<const PatchLabel> labels() const { return labels_; }
  std::optional<double> threshold_used() const { return threshold_; }
  std::size_t count(PatchLabel label) const;

  bool operator==(const LabelMap&) const = default;

 private:
  GridGeometry geometry_;
  std::vector<PatchLabel> labels_;
  std::optional<double> threshold_;
};

/// Display default for cancer maps.
inline constexpr double kDefaultCancerThreshold = 0.6;

/// Covered cell is positive iff value >= t.
LabelMap threshold(const ProbabilityMap& map, double t);

class TissueMask {
 public:
  TissueMask() = default;
  TissueMask(GridGeometry geometry, std::vector<std::uint8_t> tissue);
  static TissueMask all_tissue(const GridGeometry& geometry);

  const GridGeometry& geometry() const { return geometry_; }
  bool tissue(std::int64_t row, std::int64_t col) const {
    return tissue_[geometry_.index(row, col)] != 0;
  }
  std::span<const std::uint8_t> cells() const { return tissue_; }
  std::size_t tissue_count() const;

  bool operator==(const TissueMask&) const = default;

 private:
  GridGeometry geometry_;
  std::vector<std::uint8_t> tissue_;
};

struct PatchStats {
  double mean_r = 0, mean_g = 0, mean_b = 0;
  double near_white_fraction = 0;  // pixels with min(R,G,B) > white_level
};

struct TissueConfig {
  int white_level = 220;
  double max_white_fraction = 0.90;
};

struct TissueMaskResult {
  TissueMask mask;
  std::size_t missing_cells = 0;  // defaulted to glass
};

/// Glass iff near-white fraction > max_white_fraction. `stats` is row-major
/// over the grid; missing entries become glass and are counted.
TissueMaskResult tissue_mask_from_patch_stats(
    std::span<const std::optional<PatchStats>> stats,
    const GridGeometry& geometry, const TissueConfig& cfg = {});

/// Per-patch statistics of a base-resolution raster laid out on `geometry`.
std::vector<std::optional<PatchStats>> patch_stats_from_raster(
    const RgbImage& slide, const GridGeometry& geometry,
    const TissueConfig& cfg = {});

/// Round-half-up to 0..255.
std::uint8_t quantize_probability(double p);

/// R = TIL probability, G = cancer probability, B = 255 for tissue, 0 for
/// glass. Uncovered cells encode as 0 in their channel.
class CombinedMap {
 public:
  CombinedMap() = default;
  CombinedMap(GridGeometry geometry, std::vector<std::uint8_t> r,
              std::vector<std::uint8_t> g, std::vector<std::uint8_t> b);

  const GridGeometry& geometry() const { return geometry_; }
  std::span<const std::uint8_t> r() const { return r_; }
  std::span<const std::uint8_t> g() const { return g_; }
  std::span<const std::uint8_t> b() const { return b_; }

  bool operator==(const CombinedMap&) const = default;

 private:
  GridGeometry geometry_;
  std::vector<std::uint8_t> r_, g_, b_;
};

CombinedMap combine(const ProbabilityMap& til, const ProbabilityMap& tumor,
                    const TissueMask& mask);

struct DecodedCombined {
  ProbabilityMap til;
  ProbabilityMap tumor;
  TissueMask mask;
};

/// Inverse of `combine`: channel / 255. Every cell decodes as covered.
DecodedCombined decode_combined(const CombinedMap& cm);

/// Lossless raster form of a combined map, one pixel per patch.
RgbImage combined_to_image(const CombinedMap& cm);
CombinedMap combined_from_image(const RgbImage& img, const GridGeometry& geometry);

struct TilInTumor {
  std::optional<double> fraction;  // nullopt when no tumor-positive cells
  std::size_t tumor_cells = 0;
  std::size_t til_cells = 0;
  std::size_t overlap_cells = 0;
};

TilInTumor til_in_tumor_fraction(const LabelMap& til_labels,
                                 const LabelMap& tumor_labels);

void require_same_geometry(const GridGeometry& a, const GridGeometry& b,
                           std::string_view what);

}  // namespace tilatlas
