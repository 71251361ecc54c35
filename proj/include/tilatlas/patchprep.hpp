#pragma once

// Annotation-driven patch labeling, training-set sampling, patch transforms
// and a heuristic TIL scorer used in place of a trained classifier.

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "tilatlas/gridmap.hpp"
#include "tilatlas/image.hpp"

namespace tilatlas {

struct Point {
  double x = 0;
  double y = 0;
  bool operator==(const Point&) const = default;
};

/// Closed polygon; the first point is repeated at the end after
/// normalization.
struct Polygon {
  std::vector<Point> points;
};

struct AnnotationSet {
  std::string slide_id;
  std::vector<Polygon> cancer_regions;
};

/// {"slide_id": str, "regions": [{"label": "cancer_region", "points": [[x,y],..]}]}
AnnotationSet parse_annotations(std::string_view json_text);
std::string serialize_annotations(const AnnotationSet& set);
/// Closes the ring and rejects rings with fewer than 3 distinct points.
Polygon normalize_polygon(std::vector<Point> points);
/// Rejects regions with coordinates outside [0,w]x[0,h].
void validate_annotations(const AnnotationSet& set, const GridGeometry& geometry);

// Closed-set predicates: boundary contact counts as inside/intersecting.
bool point_in_polygon(const Point& p, const Polygon& poly);
bool segments_intersect(const Point& a, const Point& b, const Point& c,
                        const Point& d);
/// The rectangle is the closed box [x, x+width] x [y, y+height].
bool rect_intersects_polygon(const PixelRect& rect, const Polygon& poly);

/// Positive iff the patch rectangle meets any cancer polygon.
PatchLabel label_patch(const PixelRect& rect, const AnnotationSet& annotations);
/// Ground-truth label map over the whole grid.
LabelMap label_grid(const GridGeometry& geometry,
                    const AnnotationSet& annotations);

enum class Split { kTrain, kVal, kTest };
std::string_view to_string(Split s);
Split parse_split(std::string_view s);

struct PatchLabelRecord {
  std::string slide_id;
  std::int64_t row = 0;
  std::int64_t col = 0;
  PixelRect rect;
  PatchLabel label = PatchLabel::kNegative;
  Split split = Split::kTrain;

  bool operator==(const PatchLabelRecord&) const = default;
};

std::vector<PatchLabelRecord> label_records(const GridGeometry& geometry,
                                            const AnnotationSet& annotations,
                                            Split split = Split::kTrain);

struct DatasetManifest {
  std::vector<std::string> slides;
  std::vector<PatchLabelRecord> records;  // row-major per slide
  std::size_t positives = 0;
  std::size_t negatives = 0;
  double neg_pos_ratio_target = 0;
  std::uint64_t seed = 0;
  bool insufficient_negatives = false;

  std::size_t patches() const { return records.size(); }
};

/// Keeps every positive and round(ratio * positives) negatives drawn
/// without replacement. Deterministic for a given seed.
DatasetManifest sample_training_set(std::span<const PatchLabelRecord> records,
                                    double neg_pos_ratio, std::uint64_t seed);

/// Header object line followed by one record object per line.
std::string serialize_manifest(const DatasetManifest& m);
DatasetManifest parse_manifest(std::string_view jsonl);

/// Per-channel standardization to mean 0 and population std 1. A constant
/// channel maps to zeros.
FloatImage normalize_channels(const RgbImage& patch);
FloatImage normalize_channels(const FloatImage& patch);

struct TransformConfig {
  double max_rotation_deg = 22.5;
  double hflip_prob = 0.5;
  double vflip_prob = 0.5;
  double brightness = 0.1;
  double contrast = 0.1;
  double saturation = 0.1;
  bool normalize = true;
  std::uint64_t seed = 0;

  void validate() const;
  /// No geometric or photometric change.
  static TransformConfig identity();
};

struct AugmentParams {
  double angle_deg = 0;
  bool hflip = false;
  bool vflip = false;
  double brightness_factor = 1;
  double contrast_factor = 1;
  double saturation_factor = 1;
};

AugmentParams draw_augment_params(const TransformConfig& cfg,
                                  std::uint64_t draw_seed);
RgbImage apply_augment(const RgbImage& patch, const AugmentParams& params);
/// Seeded rotation, flips and photometric jitter; output has the input size.
RgbImage augment(const RgbImage& patch, const TransformConfig& cfg,
                 std::uint64_t draw_seed);

/// Bilinear rotation about the patch center with mirrored borders.
RgbImage rotate_reflect(const RgbImage& patch, double angle_deg);

/// Fraction of pixels that are dark (luma < 120) and blue-purple (B > R).
double dark_purple_fraction(const RgbImage& patch);
/// Logistic in dark_purple_fraction; strictly increasing, inside (0,1).
double baseline_til_score(const RgbImage& patch);

/// Scores every tissue patch of a slide raster with the baseline scorer.
/// Glass patches are left without a record.
std::vector<PredictionRecord> score_slide_baseline(const RgbImage& slide,
                                                   const GridGeometry& geometry,
                                                   const TissueConfig& tissue = {});

}  // namespace tilatlas
