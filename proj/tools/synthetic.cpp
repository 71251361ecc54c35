#include "synthetic.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <vector>

#include "tilatlas/random.hpp"

namespace tilmap {

using namespace tilatlas;

namespace {

using Color = std::array<int, 3>;

constexpr Color kGlass{244, 244, 246};
constexpr Color kStroma{226, 156, 196};
constexpr Color kTumor{204, 126, 182};
constexpr Color kLymphocyte{62, 38, 124};

struct Cluster {
  double cx, cy, radius;
};

bool in_tissue(double x, double y, int width, int height) {
  const double ax = 0.44 * width, ay = 0.40 * height;
  const double dx = (x - 0.5 * width) / ax, dy = (y - 0.5 * height) / ay;
  return dx * dx + dy * dy <= 1.0;
}

bool in_any(const AnnotationSet& ann, double x, double y) {
  for (const auto& poly : ann.cancer_regions) {
    if (point_in_polygon({x, y}, poly)) return true;
  }
  return false;
}

std::vector<Cluster> place_clusters(const AnnotationSet& ann, int width, int height,
                                    SplitMix64& rng) {
  std::vector<Cluster> out;
  int inside = 0, outside = 0;
  for (int attempt = 0; attempt < 10000 && (inside < 8 || outside < 6); ++attempt) {
    const double x = rng.uniform() * width, y = rng.uniform() * height;
    const double r = 0.035 * width + rng.uniform() * 0.025 * width;
    if (!in_tissue(x, y, width, height)) continue;
    const bool tumor = in_any(ann, x, y);
    if (tumor ? inside >= 8 : outside >= 6) continue;
    (tumor ? inside : outside)++;
    out.push_back({x, y, r});
  }
  return out;
}

std::uint8_t jitter(int v, SplitMix64& rng, int amplitude) {
  const int d = static_cast<int>(rng.below(2 * amplitude + 1)) - amplitude;
  return static_cast<std::uint8_t>(std::clamp(v + d, 0, 255));
}

}  // namespace

RgbImage synthesize_slide(const AnnotationSet& annotations, int width, int height,
                          std::uint64_t seed) {
  SplitMix64 layout(derive_seed(seed, 1));
  const auto clusters = place_clusters(annotations, width, height, layout);
  SplitMix64 noise(derive_seed(seed, 2));
  RgbImage img(width, height);
  for (int y = 0; y < height; ++y) {
    for (int x = 0; x < width; ++x) {
      const double px = x + 0.5, py = y + 0.5;
      Color c = kGlass;
      int amplitude = 3;
      if (in_tissue(px, py, width, height)) {
        c = in_any(annotations, px, py) ? kTumor : kStroma;
        amplitude = 10;
        for (const auto& cl : clusters) {
          const double dx = px - cl.cx, dy = py - cl.cy;
          if (dx * dx + dy * dy <= cl.radius * cl.radius && noise.uniform() < 0.65) {
            c = kLymphocyte;
            break;
          }
        }
      }
      auto* p = img.pixel(x, y);
      for (int k = 0; k < 3; ++k) p[k] = jitter(c[k], noise, amplitude);
    }
  }
  return img;
}

std::string synthesize_cancer_predictions(const RgbImage& slide,
                                          const AnnotationSet& annotations,
                                          int patch_size, std::uint64_t seed,
                                          const TissueConfig& tissue) {
  const auto geometry = grid_from_slide(slide.width, slide.height, patch_size);
  const auto stats = patch_stats_from_raster(slide, geometry, tissue);
  const auto mask = tissue_mask_from_patch_stats(stats, geometry, tissue).mask;
  SplitMix64 rng(derive_seed(seed, 3));
  std::vector<PredictionRecord> records;
  for (std::int64_t i = 0; i < geometry.rows(); ++i) {
    for (std::int64_t j = 0; j < geometry.cols(); ++j) {
      if (!mask.tissue(i, j)) continue;
      const auto rect = geometry.patch_rect(i, j);
      const bool positive = label_patch(rect, annotations) == PatchLabel::kPositive;
      const double u = rng.uniform();
      records.push_back({rect.x, rect.y, positive ? 0.55 + 0.45 * u : 0.5 * u * u});
    }
  }
  PredictionHeader header;
  header.slide_id = annotations.slide_id;
  header.patch_size_px = patch_size;
  header.base_width = slide.width;
  header.base_height = slide.height;
  header.label_kind = LabelKind::kCancer;
  header.model_id = "synthetic-oracle";
  const auto map = map_from_predictions(records, geometry, LabelKind::kCancer, header.model_id);
  return serialize_prediction_file(header, map);
}

}  // namespace tilmap
