#pragma once

// Super-patch TIL scores and human/machine concordance statistics.
//
// Correlations are estimated in two steps: category thresholds come from the
// cumulative marginal proportions (inverse normal CDF), then the correlation
// is the one-dimensional maximizer of the likelihood with those thresholds
// held fixed.

#include <array>
#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "tilatlas/gridmap.hpp"

namespace tilatlas {

inline constexpr int kSuperPatchBlock = 8;

struct SuperPatchScore {
  std::int64_t block_row = 0;
  std::int64_t block_col = 0;
  int machine_count = 0;  // TIL-positive patches in the block
  int cells = 0;          // grid cells in the block (< 64 on edges)
};

/// Row-major over blocks anchored at multiples of `block`.
std::vector<SuperPatchScore> super_patch_scores(const LabelMap& til_labels,
                                                int block = kSuperPatchBlock);

double normal_cdf(double x);
double normal_pdf(double x);
/// Inverse of normal_cdf for p in (0,1); +-inf at the ends.
double normal_quantile(double p);

/// P(X <= a, Y <= b) for standard bivariate normal with correlation rho.
/// Infinite bounds and |rho| = 1 use the limiting forms.
double bivariate_normal_cdf(double a, double b, double rho);

enum class CorrelationMethod { kPolychoric, kPolyserial };
std::string_view to_string(CorrelationMethod m);

struct ConcordanceEstimate {
  double rho = 0;
  std::vector<double> row_thresholds;  // strictly increasing
  std::vector<double> col_thresholds;  // polychoric only
  double ci_low = 0;
  double ci_high = 0;
  CorrelationMethod method = CorrelationMethod::kPolychoric;
  int n_resamples = 0;
  std::size_t n = 0;
  double log_likelihood = 0;
};

/// r x c table of counts, row-major.
struct ContingencyTable {
  int rows = 0;
  int cols = 0;
  std::vector<std::uint64_t> counts;

  std::uint64_t at(int r, int c) const {
    return counts[static_cast<std::size_t>(r) * cols + c];
  }
  std::uint64_t total() const;
  ContingencyTable transposed() const;
};

/// Cross-tabulates two ordinal vectors with levels 1..levels.
ContingencyTable cross_tabulate(std::span<const int> a, std::span<const int> b,
                                int levels = 3);

inline constexpr double kCellProbabilityFloor = 1e-12;
inline constexpr double kRhoTolerance = 1e-10;

/// Empty rows and columns are dropped before estimation. Fewer than two
/// non-empty rows or columns is an undefined estimate.
ConcordanceEstimate polychoric(const ContingencyTable& table);
double polychoric_log_likelihood(const ContingencyTable& table, double rho);

/// x continuous (standardized internally), y ordinal codes.
ConcordanceEstimate polyserial(std::span<const double> x, std::span<const int> y);

/// Median of the available ratings; nullopt when any rating is missing.
std::optional<int> median_rating(std::span<const std::optional<int>> ratings);

struct BootstrapConfig {
  int n_resamples = 2000;
  double level = 0.95;
  std::uint64_t seed = 0;
  unsigned threads = 1;
  int max_retries = 20;
};

struct BootstrapInterval {
  double low = 0;
  double high = 0;
  std::size_t undefined_draws = 0;
};

/// Estimator over a case resample, given as indices into the paired data.
/// Returning nullopt marks the resample undefined; it is then redrawn.
using ResampleEstimator =
    std::function<std::optional<double>(std::span<const std::size_t>)>;

/// Percentile interval from a case-resampling bootstrap. Resample b uses a
/// seed derived from (seed, b), so results do not depend on thread count.
BootstrapInterval bootstrap_ci(std::size_t n_cases,
                               const ResampleEstimator& estimator,
                               const BootstrapConfig& cfg);

/// Point estimate plus bootstrap interval. The interval is widened to contain
/// the point estimate when the percentile bounds miss it.
ConcordanceEstimate polychoric_with_ci(std::span<const int> a,
                                       std::span<const int> b,
                                       const BootstrapConfig& cfg);
ConcordanceEstimate polyserial_with_ci(std::span<const double> x,
                                       std::span<const int> y,
                                       const BootstrapConfig& cfg);

enum class OrdinalLevel : int { kLow = 1, kMedium = 2, kHigh = 3 };
std::optional<int> parse_ordinal(std::string_view s);
std::string_view ordinal_name(int level);

/// Ratings by human raters and machine counts per super-patch.
struct RatingTable {
  std::vector<std::string> ids;
  std::vector<std::string> raters;  // display names, "rater_" stripped
  std::vector<std::vector<std::optional<int>>> ratings;  // [rater][row]
  std::vector<std::string> models;
  std::vector<std::vector<std::optional<double>>> counts;  // [model][row]

  std::size_t rows() const { return ids.size(); }
  /// Pairs where both raters have a rating.
  ContingencyTable contingency(std::size_t rater_a, std::size_t rater_b) const;
  /// Per-row median across raters; rows with a missing rating are nullopt.
  std::vector<std::optional<int>> median_ratings(std::size_t* excluded = nullptr) const;
};

/// CSV: super_patch_id, rater_<name>... (low|medium|high), <model>... counts.
RatingTable parse_rating_csv(std::string_view csv);

struct BinSummary {
  int level = 0;
  std::size_t n = 0;
  std::optional<double> median, q1, q3, min, max;
};

/// Machine-score distribution per ordinal bin (box-plot data).
std::array<BinSummary, 3> ordinal_vs_machine_summary(
    std::span<const std::optional<int>> levels,
    std::span<const std::optional<double>> machine);

/// Type-7 (linear interpolation) sample quantile of sorted data.
double quantile_sorted(std::span<const double> sorted, double q);

/// Report JSON: one row per rater (human partner + each model) and
/// a "Median" row against each model.
std::string concordance_report_json(const RatingTable& table,
                                    const BootstrapConfig& cfg);

std::string estimate_to_json(const ConcordanceEstimate& e);

}  // namespace tilatlas
