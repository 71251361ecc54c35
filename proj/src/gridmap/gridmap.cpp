#include "tilatlas/gridmap.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <thread>

#include "tilatlas/error.hpp"

namespace tilatlas {

GridGeometry GridGeometry::from_slide(std::int64_t slide_width_px,
                                      std::int64_t slide_height_px,
                                      std::int64_t patch_size_px,
                                      std::optional<double> base_mpp) {
  if (slide_width_px <= 0 || slide_height_px <= 0 || patch_size_px <= 0) {
    fail(ErrorCode::kInvalidArgument,
         "slide and patch dimensions must be positive",
         std::to_string(slide_width_px) + "x" + std::to_string(slide_height_px) +
             "/" + std::to_string(patch_size_px));
  }
  if (base_mpp && !(*base_mpp > 0.0)) {
    fail(ErrorCode::kInvalidArgument, "base_mpp must be positive");
  }
  GridGeometry g;
  g.slide_width_ = slide_width_px;
  g.slide_height_ = slide_height_px;
  g.patch_size_ = patch_size_px;
  g.base_mpp_ = base_mpp;
  g.cols_ = (slide_width_px + patch_size_px - 1) / patch_size_px;
  g.rows_ = (slide_height_px + patch_size_px - 1) / patch_size_px;
  return g;
}

GridGeometry grid_from_slide(std::int64_t slide_width_px,
                             std::int64_t slide_height_px,
                             std::int64_t patch_size_px) {
  return GridGeometry::from_slide(slide_width_px, slide_height_px,
                                  patch_size_px);
}

PixelRect GridGeometry::patch_rect(std::int64_t row, std::int64_t col) const {
  if (!contains(row, col)) {
    fail(ErrorCode::kInvalidArgument, "patch index outside grid",
         "(" + std::to_string(row) + "," + std::to_string(col) + ") on " +
             describe());
  }
  PixelRect r;
  r.x = col * patch_size_;
  r.y = row * patch_size_;
  r.width = std::min(patch_size_, slide_width_ - r.x);
  r.height = std::min(patch_size_, slide_height_ - r.y);
  return r;
}

std::string GridGeometry::describe() const {
  char buf[128];
  std::snprintf(buf, sizeof(buf), "%lldx%lldpx/%lld (%lldx%lld)",
                static_cast<long long>(slide_width_),
                static_cast<long long>(slide_height_),
                static_cast<long long>(patch_size_),
                static_cast<long long>(rows_), static_cast<long long>(cols_));
  return buf;
}

void require_same_geometry(const GridGeometry& a, const GridGeometry& b,
                           std::string_view what) {
  if (!(a == b)) {
    fail(ErrorCode::kInvalidArgument,
         std::string(what) + ": geometry mismatch",
         a.describe() + " vs " + b.describe());
  }
}

std::string_view to_string(LabelKind kind) {
  return kind == LabelKind::kTil ? "til" : "cancer";
}

LabelKind parse_label_kind(std::string_view s) {
  if (s == "cancer") return LabelKind::kCancer;
  if (s == "til") return LabelKind::kTil;
  fail(ErrorCode::kInvalidArgument, "unknown label kind", std::string(s));
}

ProbabilityMap::ProbabilityMap(GridGeometry geometry,
                               std::vector<double> values,
                               std::vector<std::uint8_t> coverage,
                               LabelKind kind, std::string provenance)
    : geometry_(std::move(geometry)),
      values_(std::move(values)),
      coverage_(std::move(coverage)),
      kind_(kind),
      provenance_(std::move(provenance)) {
  const auto n = geometry_.cell_count();
  if (values_.size() != n || coverage_.size() != n) {
    fail(ErrorCode::kInvalidArgument, "map arrays do not match geometry",
         geometry_.describe());
  }
  for (std::size_t k = 0; k < n; ++k) {
    if (coverage_[k] && !(values_[k] >= 0.0 && values_[k] <= 1.0)) {
      fail(ErrorCode::kInvalidArgument, "probability outside [0,1]",
           "cell " + std::to_string(k));
    }
  }
}

ProbabilityMap ProbabilityMap::uncovered(const GridGeometry& geometry,
                                         LabelKind kind,
                                         std::string provenance) {
  return ProbabilityMap(geometry, std::vector<double>(geometry.cell_count()),
                        std::vector<std::uint8_t>(geometry.cell_count(), 0),
                        kind, std::move(provenance));
}

ProbabilityMap ProbabilityMap::dense(const GridGeometry& geometry,
                                     std::vector<double> values,
                                     LabelKind kind, std::string provenance) {
  std::vector<std::uint8_t> coverage(values.size(), 1);
  return ProbabilityMap(geometry, std::move(values), std::move(coverage), kind,
                        std::move(provenance));
}

std::size_t ProbabilityMap::covered_count() const {
  return static_cast<std::size_t>(
      std::count_if(coverage_.begin(), coverage_.end(),
                    [](std::uint8_t c) { return c != 0; }));
}

ProbabilityMap map_from_predictions(std::span<const PredictionRecord> records,
                                    const GridGeometry& geometry,
                                    LabelKind kind, std::string provenance) {
  std::vector<double> values(geometry.cell_count(), 0.0);
  std::vector<std::uint8_t> coverage(geometry.cell_count(), 0);
  const auto patch = geometry.patch_size_px();
  for (std::size_t k = 0; k < records.size(); ++k) {
    const auto& rec = records[k];
    const std::string where = "record " + std::to_string(k) + " at (" +
                              std::to_string(rec.x) + "," +
                              std::to_string(rec.y) + ")";
    if (rec.x < 0 || rec.y < 0 || rec.x >= geometry.slide_width_px() ||
        rec.y >= geometry.slide_height_px()) {
      fail(ErrorCode::kInvalidArgument, "coordinate outside slide bounds",
           where);
    }
    if (rec.x % patch != 0 || rec.y % patch != 0) {
      fail(ErrorCode::kInvalidArgument,
           "coordinate not aligned to patch size " + std::to_string(patch),
           where);
    }
    if (!(rec.prob >= 0.0 && rec.prob <= 1.0)) {
      fail(ErrorCode::kInvalidArgument, "probability outside [0,1]", where);
    }
    const auto row = rec.y / patch;
    const auto col = rec.x / patch;
    const auto idx = geometry.index(row, col);
    if (coverage[idx]) {
      fail(ErrorCode::kConflict,
           "duplicate prediction for cell (" + std::to_string(row) + "," +
               std::to_string(col) + ")",
           where);
    }
    values[idx] = rec.prob;
    coverage[idx] = 1;
  }
  return ProbabilityMap(geometry, std::move(values), std::move(coverage), kind,
                        std::move(provenance));
}

std::string_view to_string(AggregationFunc f) {
  switch (f) {
    case AggregationFunc::kMax: return "max";
    case AggregationFunc::kMedian: return "median";
    case AggregationFunc::kAverage: return "average";
  }
  return "max";
}

AggregationFunc parse_aggregation_func(std::string_view s) {
  if (s == "max") return AggregationFunc::kMax;
  if (s == "median") return AggregationFunc::kMedian;
  if (s == "average" || s == "mean") return AggregationFunc::kAverage;
  fail(ErrorCode::kInvalidArgument, "unknown aggregation function",
       std::string(s));
}

void AggregationConfig::validate() const {
  if (window < 1) {
    fail(ErrorCode::kInvalidArgument, "aggregation window must be >= 1",
         std::to_string(window));
  }
}

namespace {

// Reduces the covered values of one block. `scratch` holds them in
// row-major order on entry and may be reordered.
double reduce_block(std::vector<double>& scratch, AggregationFunc f) {
  switch (f) {
    case AggregationFunc::kMax:
      return *std::max_element(scratch.begin(), scratch.end());
    case AggregationFunc::kAverage: {
      double sum = 0.0;
      for (double v : scratch) sum += v;
      return sum / static_cast<double>(scratch.size());
    }
    case AggregationFunc::kMedian: {
      const auto n = scratch.size();
      const auto mid = scratch.begin() + static_cast<std::ptrdiff_t>(n / 2);
      std::nth_element(scratch.begin(), mid, scratch.end());
      const double upper = *mid;
      if (n % 2 == 1) return upper;
      const double lower = *std::max_element(scratch.begin(), mid);
      return (lower + upper) / 2.0;
    }
  }
  return 0.0;
}

void aggregate_block_rows(const ProbabilityMap& in, int w, AggregationFunc f,
                          std::int64_t first_block_row,
                          std::int64_t last_block_row,
                          std::vector<double>& out_values,
                          std::vector<std::uint8_t>& out_coverage) {
  const auto& g = in.geometry();
  const auto values = in.values();
  const auto coverage = in.coverage();
  std::vector<double> scratch;
  scratch.reserve(static_cast<std::size_t>(w) * w);
  for (std::int64_t br = first_block_row; br < last_block_row; ++br) {
    const std::int64_t r0 = br * w;
    const std::int64_t r1 = std::min<std::int64_t>(r0 + w, g.rows());
    for (std::int64_t c0 = 0; c0 < g.cols(); c0 += w) {
      const std::int64_t c1 = std::min<std::int64_t>(c0 + w, g.cols());
      scratch.clear();
      for (auto m = r0; m < r1; ++m) {
        for (auto n = c0; n < c1; ++n) {
          const auto idx = g.index(m, n);
          if (coverage[idx]) scratch.push_back(values[idx]);
        }
      }
      if (scratch.empty()) continue;
      const double v = reduce_block(scratch, f);
      for (auto m = r0; m < r1; ++m) {
        for (auto n = c0; n < c1; ++n) {
          const auto idx = g.index(m, n);
          out_values[idx] = v;
          out_coverage[idx] = 1;
        }
      }
    }
  }
}

}  // namespace

ProbabilityMap aggregate(const ProbabilityMap& map,
                         const AggregationConfig& cfg, unsigned threads) {
  cfg.validate();
  const auto& g = map.geometry();
  if (cfg.window == 1) return map;

  std::vector<double> values(g.cell_count(), 0.0);
  std::vector<std::uint8_t> coverage(g.cell_count(), 0);
  const std::int64_t block_rows = (g.rows() + cfg.window - 1) / cfg.window;

  // Workers write disjoint row bands, so no synchronization is needed.
  const auto workers = static_cast<std::int64_t>(
      std::clamp<unsigned>(threads, 1u, static_cast<unsigned>(std::max<std::int64_t>(block_rows, 1))));
  if (workers <= 1) {
    aggregate_block_rows(map, cfg.window, cfg.func, 0, block_rows, values,
                         coverage);
  } else {
    std::vector<std::jthread> pool;
    pool.reserve(static_cast<std::size_t>(workers));
    for (std::int64_t t = 0; t < workers; ++t) {
      const auto first = block_rows * t / workers;
      const auto last = block_rows * (t + 1) / workers;
      pool.emplace_back([&, first, last] {
        aggregate_block_rows(map, cfg.window, cfg.func, first, last, values,
                             coverage);
      });
    }
  }
  return ProbabilityMap(g, std::move(values), std::move(coverage),
                        map.label_kind(), map.provenance());
}

LabelMap::LabelMap(GridGeometry geometry, std::vector<PatchLabel> labels,
                   std::optional<double> threshold_used)
    : geometry_(std::move(geometry)),
      labels_(std::move(labels)),
      threshold_(threshold_used) {
  if (labels_.size() != geometry_.cell_count()) {
    fail(ErrorCode::kInvalidArgument, "label array does not match geometry",
         geometry_.describe());
  }
}

std::size_t LabelMap::count(PatchLabel label) const {
  return static_cast<std::size_t>(
      std::count(labels_.begin(), labels_.end(), label));
}

LabelMap threshold(const ProbabilityMap& map, double t) {
  if (!(t >= 0.0 && t <= 1.0)) {
    fail(ErrorCode::kInvalidArgument, "threshold outside [0,1]",
         std::to_string(t));
  }
  const auto values = map.values();
  const auto coverage = map.coverage();
  std::vector<PatchLabel> labels(values.size());
  for (std::size_t k = 0; k < values.size(); ++k) {
    if (!coverage[k]) {
      labels[k] = PatchLabel::kUncovered;
    } else {
      labels[k] = values[k] >= t ? PatchLabel::kPositive : PatchLabel::kNegative;
    }
  }
  return LabelMap(map.geometry(), std::move(labels), t);
}

TissueMask::TissueMask(GridGeometry geometry, std::vector<std::uint8_t> tissue)
    : geometry_(std::move(geometry)), tissue_(std::move(tissue)) {
  if (tissue_.size() != geometry_.cell_count()) {
    fail(ErrorCode::kInvalidArgument, "tissue mask does not match geometry",
         geometry_.describe());
  }
}

TissueMask TissueMask::all_tissue(const GridGeometry& geometry) {
  return TissueMask(geometry,
                    std::vector<std::uint8_t>(geometry.cell_count(), 1));
}

std::size_t TissueMask::tissue_count() const {
  return static_cast<std::size_t>(
      std::count_if(tissue_.begin(), tissue_.end(),
                    [](std::uint8_t c) { return c != 0; }));
}

TissueMaskResult tissue_mask_from_patch_stats(
    std::span<const std::optional<PatchStats>> stats,
    const GridGeometry& geometry, const TissueConfig& cfg) {
  TissueMaskResult result;
  std::vector<std::uint8_t> tissue(geometry.cell_count(), 0);
  for (std::size_t k = 0; k < tissue.size(); ++k) {
    if (k >= stats.size() || !stats[k]) {
      ++result.missing_cells;
      continue;
    }
    tissue[k] = stats[k]->near_white_fraction > cfg.max_white_fraction ? 0 : 1;
  }
  result.mask = TissueMask(geometry, std::move(tissue));
  return result;
}

std::vector<std::optional<PatchStats>> patch_stats_from_raster(
    const RgbImage& slide, const GridGeometry& geometry,
    const TissueConfig& cfg) {
  if (slide.width != geometry.slide_width_px() ||
      slide.height != geometry.slide_height_px()) {
    fail(ErrorCode::kInvalidArgument, "raster does not match slide geometry",
         std::to_string(slide.width) + "x" + std::to_string(slide.height) +
             " vs " + geometry.describe());
  }
  std::vector<std::optional<PatchStats>> out(geometry.cell_count());
  for (std::int64_t i = 0; i < geometry.rows(); ++i) {
    for (std::int64_t j = 0; j < geometry.cols(); ++j) {
      const auto rect = geometry.patch_rect(i, j);
      double sr = 0, sg = 0, sb = 0;
      std::size_t white = 0;
      for (auto y = rect.y; y < rect.y + rect.height; ++y) {
        const auto* p = slide.pixel(static_cast<int>(rect.x), static_cast<int>(y));
        for (std::int64_t x = 0; x < rect.width; ++x, p += 3) {
          sr += p[0];
          sg += p[1];
          sb += p[2];
          if (std::min({p[0], p[1], p[2]}) > cfg.white_level) ++white;
        }
      }
      const double n = static_cast<double>(rect.width * rect.height);
      out[geometry.index(i, j)] =
          PatchStats{sr / n, sg / n, sb / n, static_cast<double>(white) / n};
    }
  }
  return out;
}

std::uint8_t quantize_probability(double p) {
  const double scaled = std::floor(std::clamp(p, 0.0, 1.0) * 255.0 + 0.5);
  return static_cast<std::uint8_t>(scaled);
}

CombinedMap::CombinedMap(GridGeometry geometry, std::vector<std::uint8_t> r,
                         std::vector<std::uint8_t> g,
                         std::vector<std::uint8_t> b)
    : geometry_(std::move(geometry)),
      r_(std::move(r)),
      g_(std::move(g)),
      b_(std::move(b)) {
  const auto n = geometry_.cell_count();
  if (r_.size() != n || g_.size() != n || b_.size() != n) {
    fail(ErrorCode::kInvalidArgument, "combined channels do not match geometry",
         geometry_.describe());
  }
}

CombinedMap combine(const ProbabilityMap& til, const ProbabilityMap& tumor,
                    const TissueMask& mask) {
  require_same_geometry(til.geometry(), tumor.geometry(), "combine til/tumor");
  require_same_geometry(til.geometry(), mask.geometry(), "combine til/tissue");
  const auto n = til.geometry().cell_count();
  std::vector<std::uint8_t> r(n), g(n), b(n);
  const auto tv = til.values();
  const auto tc = til.coverage();
  const auto cv = tumor.values();
  const auto cc = tumor.coverage();
  const auto tissue = mask.cells();
  for (std::size_t k = 0; k < n; ++k) {
    r[k] = tc[k] ? quantize_probability(tv[k]) : 0;
    g[k] = cc[k] ? quantize_probability(cv[k]) : 0;
    b[k] = tissue[k] ? 255 : 0;
  }
  return CombinedMap(til.geometry(), std::move(r), std::move(g), std::move(b));
}

DecodedCombined decode_combined(const CombinedMap& cm) {
  const auto n = cm.geometry().cell_count();
  std::vector<double> til(n), tumor(n);
  std::vector<std::uint8_t> tissue(n);
  const auto r = cm.r(), g = cm.g(), b = cm.b();
  for (std::size_t k = 0; k < n; ++k) {
    if (b[k] != 0 && b[k] != 255) {
      fail(ErrorCode::kMalformed, "tissue channel must be 0 or 255",
           "cell " + std::to_string(k) + " has " + std::to_string(b[k]));
    }
    til[k] = r[k] / 255.0;
    tumor[k] = g[k] / 255.0;
    tissue[k] = b[k] == 255 ? 1 : 0;
  }
  return DecodedCombined{
      ProbabilityMap::dense(cm.geometry(), std::move(til), LabelKind::kTil),
      ProbabilityMap::dense(cm.geometry(), std::move(tumor), LabelKind::kCancer),
      TissueMask(cm.geometry(), std::move(tissue))};
}

RgbImage combined_to_image(const CombinedMap& cm) {
  const auto& g = cm.geometry();
  RgbImage img(static_cast<int>(g.cols()), static_cast<int>(g.rows()));
  for (std::size_t k = 0; k < g.cell_count(); ++k) {
    img.data[3 * k] = cm.r()[k];
    img.data[3 * k + 1] = cm.g()[k];
    img.data[3 * k + 2] = cm.b()[k];
  }
  return img;
}

CombinedMap combined_from_image(const RgbImage& img,
                                const GridGeometry& geometry) {
  if (img.width != geometry.cols() || img.height != geometry.rows()) {
    fail(ErrorCode::kMalformed, "combined image does not match grid",
         geometry.describe());
  }
  const auto n = geometry.cell_count();
  std::vector<std::uint8_t> r(n), g(n), b(n);
  for (std::size_t k = 0; k < n; ++k) {
    r[k] = img.data[3 * k];
    g[k] = img.data[3 * k + 1];
    b[k] = img.data[3 * k + 2];
  }
  return CombinedMap(geometry, std::move(r), std::move(g), std::move(b));
}

TilInTumor til_in_tumor_fraction(const LabelMap& til_labels,
                                 const LabelMap& tumor_labels) {
  require_same_geometry(til_labels.geometry(), tumor_labels.geometry(),
                        "til_in_tumor_fraction");
  TilInTumor out;
  const auto til = til_labels.labels();
  const auto tumor = tumor_labels.labels();
  for (std::size_t k = 0; k < til.size(); ++k) {
    const bool t = tumor[k] == PatchLabel::kPositive;
    const bool l = til[k] == PatchLabel::kPositive;
    out.tumor_cells += t;
    out.til_cells += l;
    out.overlap_cells += (t && l);
  }
  if (out.tumor_cells > 0) {
    out.fraction = static_cast<double>(out.overlap_cells) /
                   static_cast<double>(out.tumor_cells);
  }
  return out;
}

}  // namespace tilatlas
