#pragma once

// Patch-level evaluation of label maps against ground truth.

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "tilatlas/gridmap.hpp"
#include "tilatlas/image.hpp"

namespace tilatlas {

struct ConfusionCounts {
  std::uint64_t tp = 0, fp = 0, tn = 0, fn = 0;

  std::uint64_t total() const { return tp + fp + tn + fn; }
  bool operator==(const ConfusionCounts&) const = default;
};

/// Counts over cells inside `eval_mask` (all cells when absent). Uncovered
/// predictions count as negative; truth must be covered inside the region.
ConfusionCounts confusion(const LabelMap& pred, const LabelMap& truth,
                          const TissueMask* eval_mask = nullptr);

/// A ratio whose denominator may be empty. Never NaN.
using Ratio = std::optional<double>;

struct MetricsReport {
  Ratio f1, ppv, npv, tpr, tnr, fpr, fnr, accuracy;
  ConfusionCounts counts;
};

MetricsReport metrics(const ConfusionCounts& c);

/// JSON object with explicit nulls for undefined entries.
std::string metrics_to_json(const MetricsReport& m);

struct SweepImage {
  ProbabilityMap map;
  LabelMap truth;
  std::optional<TissueMask> eval_mask;
  std::string name;
};

struct SweepRow {
  double threshold = 0;
  std::optional<double> mean_f1;  // over images with defined F1
  std::optional<double> std_f1;   // population std over the same images
  std::size_t n_defined = 0;
};

struct SweepResult {
  std::vector<SweepRow> rows;  // 101 entries, t = k / 100
  double best_threshold = 0;
  std::optional<double> best_mean_f1;
  std::vector<MetricsReport> per_image_at_best;
};

inline constexpr int kSweepSteps = 100;

/// Threshold for sweep step k in [0, 100].
inline double sweep_threshold(int k) { return static_cast<double>(k) / kSweepSteps; }

/// Mean per-image F1 at each threshold; the best threshold maximises it,
/// ties going to the lowest threshold.
SweepResult threshold_sweep(std::span<const SweepImage> images,
                            unsigned threads = 1);

/// threshold,mean_f1,std_f1,n_defined
std::string sweep_to_csv(const SweepResult& r);

/// Mann-Whitney AUC: P(pos > neg) + 0.5 P(tie).
double auc(std::span<const double> scores, std::span<const std::uint8_t> labels);

namespace confusion_colors {
inline constexpr Rgba kTruePositive{0, 255, 0, 255};    // green
inline constexpr Rgba kFalseNegative{255, 0, 0, 255};   // red
inline constexpr Rgba kFalsePositive{255, 255, 0, 255}; // yellow
inline constexpr Rgba kTrueNegative{0, 0, 255, 255};    // blue
inline constexpr Rgba kOutside{0, 0, 0, 0};
}  // namespace confusion_colors

/// One pixel per patch; cells outside the region or with uncovered truth are
/// transparent.
RgbaImage render_confusion(const LabelMap& pred, const LabelMap& truth,
                           const TissueMask* eval_mask = nullptr);

}  // namespace tilatlas
