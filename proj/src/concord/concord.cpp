#include "tilatlas/concord.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>
#include <thread>

#include "json.hpp"
#include "optimize.hpp"
#include "tilatlas/error.hpp"
#include "tilatlas/random.hpp"

namespace tilatlas {

std::vector<SuperPatchScore> super_patch_scores(const LabelMap& til_labels,
                                                int block) {
  if (block < 1) fail(ErrorCode::kInvalidArgument, "block size must be >= 1");
  const auto& g = til_labels.geometry();
  std::vector<SuperPatchScore> out;
  for (std::int64_t r0 = 0; r0 < g.rows(); r0 += block) {
    for (std::int64_t c0 = 0; c0 < g.cols(); c0 += block) {
      SuperPatchScore s{r0 / block, c0 / block, 0, 0};
      const auto r1 = std::min<std::int64_t>(r0 + block, g.rows());
      const auto c1 = std::min<std::int64_t>(c0 + block, g.cols());
      for (auto i = r0; i < r1; ++i) {
        for (auto j = c0; j < c1; ++j) {
          ++s.cells;
          s.machine_count += til_labels.at(i, j) == PatchLabel::kPositive;
        }
      }
      out.push_back(s);
    }
  }
  return out;
}

std::string_view to_string(CorrelationMethod m) {
  return m == CorrelationMethod::kPolychoric ? "polychoric" : "polyserial";
}

std::uint64_t ContingencyTable::total() const {
  return std::accumulate(counts.begin(), counts.end(), std::uint64_t{0});
}

ContingencyTable ContingencyTable::transposed() const {
  ContingencyTable t{cols, rows, std::vector<std::uint64_t>(counts.size())};
  for (int r = 0; r < rows; ++r) {
    for (int c = 0; c < cols; ++c) {
      t.counts[static_cast<std::size_t>(c) * rows + r] = at(r, c);
    }
  }
  return t;
}

ContingencyTable cross_tabulate(std::span<const int> a, std::span<const int> b,
                                int levels) {
  if (a.size() != b.size()) {
    fail(ErrorCode::kInvalidArgument, "paired ratings differ in length");
  }
  ContingencyTable t{levels, levels,
                     std::vector<std::uint64_t>(static_cast<std::size_t>(levels) * levels)};
  for (std::size_t k = 0; k < a.size(); ++k) {
    if (a[k] < 1 || a[k] > levels || b[k] < 1 || b[k] > levels) {
      fail(ErrorCode::kInvalidArgument, "ordinal level out of range",
           "pair " + std::to_string(k));
    }
    ++t.counts[static_cast<std::size_t>(a[k] - 1) * levels + (b[k] - 1)];
  }
  return t;
}

namespace {

constexpr double kRhoBound = 1.0 - 1e-9;

// Thresholds at the cumulative marginal proportions, with +-inf ends.
std::vector<double> cut_points(std::span<const std::uint64_t> margins,
                               std::uint64_t total) {
  std::vector<double> cuts;
  cuts.push_back(-INFINITY);
  std::uint64_t cum = 0;
  for (std::size_t k = 0; k + 1 < margins.size(); ++k) {
    cum += margins[k];
    cuts.push_back(normal_quantile(static_cast<double>(cum) /
                                   static_cast<double>(total)));
  }
  cuts.push_back(INFINITY);
  return cuts;
}

std::vector<double> interior(const std::vector<double>& cuts) {
  return {cuts.begin() + 1, cuts.end() - 1};
}

struct CompactTable {
  int rows = 0, cols = 0;
  std::vector<std::uint64_t> counts;
  std::vector<std::uint64_t> row_margins, col_margins;
  std::uint64_t total = 0;
};

CompactTable drop_empty(const ContingencyTable& t) {
  if (t.counts.size() != static_cast<std::size_t>(t.rows) * t.cols) {
    fail(ErrorCode::kInvalidArgument, "contingency table shape mismatch");
  }
  std::vector<int> keep_rows, keep_cols;
  for (int r = 0; r < t.rows; ++r) {
    std::uint64_t s = 0;
    for (int c = 0; c < t.cols; ++c) s += t.at(r, c);
    if (s) keep_rows.push_back(r);
  }
  for (int c = 0; c < t.cols; ++c) {
    std::uint64_t s = 0;
    for (int r = 0; r < t.rows; ++r) s += t.at(r, c);
    if (s) keep_cols.push_back(c);
  }
  if (keep_rows.size() < 2 || keep_cols.size() < 2) {
    fail(ErrorCode::kUndefined,
         "polychoric correlation needs two non-empty rows and columns");
  }
  CompactTable out;
  out.rows = static_cast<int>(keep_rows.size());
  out.cols = static_cast<int>(keep_cols.size());
  out.row_margins.assign(keep_rows.size(), 0);
  out.col_margins.assign(keep_cols.size(), 0);
  for (std::size_t r = 0; r < keep_rows.size(); ++r) {
    for (std::size_t c = 0; c < keep_cols.size(); ++c) {
      const auto n = t.at(keep_rows[r], keep_cols[c]);
      out.counts.push_back(n);
      out.row_margins[r] += n;
      out.col_margins[c] += n;
      out.total += n;
    }
  }
  return out;
}

double table_log_likelihood(const CompactTable& t,
                            const std::vector<double>& row_cuts,
                            const std::vector<double>& col_cuts, double rho) {
  // Cumulative probabilities at every threshold pair, then rectangle
  // probabilities by inclusion-exclusion.
  const std::size_t nr = row_cuts.size(), nc = col_cuts.size();
  std::vector<double> cdf(nr * nc);
  for (std::size_t r = 0; r < nr; ++r) {
    for (std::size_t c = 0; c < nc; ++c) {
      cdf[r * nc + c] = bivariate_normal_cdf(row_cuts[r], col_cuts[c], rho);
    }
  }
  double ll = 0.0;
  for (int r = 0; r < t.rows; ++r) {
    for (int c = 0; c < t.cols; ++c) {
      const auto n = t.counts[static_cast<std::size_t>(r) * t.cols + c];
      if (n == 0) continue;
      const auto at = [&](std::size_t i, std::size_t j) { return cdf[i * nc + j]; };
      const double p = at(r + 1, c + 1) - at(r, c + 1) - at(r + 1, c) + at(r, c);
      ll += static_cast<double>(n) * std::log(std::max(p, kCellProbabilityFloor));
    }
  }
  return ll;
}

}  // namespace

double polychoric_log_likelihood(const ContingencyTable& table, double rho) {
  const auto t = drop_empty(table);
  return table_log_likelihood(t, cut_points(t.row_margins, t.total),
                              cut_points(t.col_margins, t.total), rho);
}

ConcordanceEstimate polychoric(const ContingencyTable& table) {
  const auto t = drop_empty(table);
  const auto row_cuts = cut_points(t.row_margins, t.total);
  const auto col_cuts = cut_points(t.col_margins, t.total);
  const auto opt = detail::brent_minimize(
      [&](double rho) { return -table_log_likelihood(t, row_cuts, col_cuts, rho); },
      -kRhoBound, kRhoBound, kRhoTolerance);
  ConcordanceEstimate e;
  e.method = CorrelationMethod::kPolychoric;
  e.rho = opt.x;
  e.ci_low = e.ci_high = opt.x;
  e.row_thresholds = interior(row_cuts);
  e.col_thresholds = interior(col_cuts);
  e.n = t.total;
  e.log_likelihood = -opt.fx;
  return e;
}

namespace {

// P(lo < Z <= hi) for standard normal Z, accurate in both tails.
double normal_interval(double lo, double hi) {
  if (lo > 0.0) return normal_cdf(-lo) - normal_cdf(-hi);
  return normal_cdf(hi) - normal_cdf(lo);
}

struct SerialData {
  std::vector<double> z;       // standardized x
  std::vector<int> category;   // 0-based among observed levels
  std::vector<double> cuts;    // with +-inf ends
};

SerialData prepare_polyserial(std::span<const double> x, std::span<const int> y) {
  if (x.size() != y.size()) {
    fail(ErrorCode::kInvalidArgument, "polyserial inputs differ in length");
  }
  const std::size_t n = x.size();
  if (n < 2) fail(ErrorCode::kUndefined, "polyserial needs at least two cases");
  double mean = 0.0;
  for (double v : x) mean += v;
  mean /= static_cast<double>(n);
  double var = 0.0;
  for (double v : x) var += (v - mean) * (v - mean);
  const double sd = std::sqrt(var / static_cast<double>(n));
  if (!(sd > 0.0) || sd < 1e-12 * std::max(1.0, std::abs(mean))) {
    fail(ErrorCode::kUndefined, "polyserial needs a non-constant continuous variable");
  }

  std::map<int, std::uint64_t> levels;
  for (int v : y) ++levels[v];
  if (levels.size() < 2) {
    fail(ErrorCode::kUndefined, "polyserial needs at least two ordinal levels");
  }
  std::map<int, int> rank;
  std::vector<std::uint64_t> margins;
  for (const auto& [level, count] : levels) {
    rank[level] = static_cast<int>(margins.size());
    margins.push_back(count);
  }
  SerialData d;
  d.z.reserve(n);
  d.category.reserve(n);
  for (std::size_t k = 0; k < n; ++k) {
    d.z.push_back((x[k] - mean) / sd);
    d.category.push_back(rank[y[k]]);
  }
  d.cuts = cut_points(margins, n);
  return d;
}

double serial_log_likelihood(const SerialData& d, double rho) {
  const double s = std::sqrt(1.0 - rho * rho);
  double ll = 0.0;
  for (std::size_t k = 0; k < d.z.size(); ++k) {
    const int c = d.category[k];
    const double shift = rho * d.z[k];
    const double lo = (d.cuts[c] - shift) / s;
    const double hi = (d.cuts[c + 1] - shift) / s;
    ll += std::log(std::max(normal_interval(lo, hi), kCellProbabilityFloor));
  }
  return ll;
}

}  // namespace

ConcordanceEstimate polyserial(std::span<const double> x, std::span<const int> y) {
  const auto d = prepare_polyserial(x, y);
  const auto opt = detail::brent_minimize(
      [&](double rho) { return -serial_log_likelihood(d, rho); }, -kRhoBound,
      kRhoBound, kRhoTolerance);
  ConcordanceEstimate e;
  e.method = CorrelationMethod::kPolyserial;
  e.rho = opt.x;
  e.ci_low = e.ci_high = opt.x;
  e.row_thresholds = interior(d.cuts);
  e.n = x.size();
  e.log_likelihood = -opt.fx;
  return e;
}

std::optional<int> median_rating(std::span<const std::optional<int>> ratings) {
  if (ratings.empty()) return std::nullopt;
  std::vector<int> v;
  for (const auto& r : ratings) {
    if (!r) return std::nullopt;
    v.push_back(*r);
  }
  if (v.size() % 2 == 0) {
    fail(ErrorCode::kInvalidArgument, "median rating needs an odd number of raters");
  }
  std::nth_element(v.begin(), v.begin() + static_cast<std::ptrdiff_t>(v.size() / 2), v.end());
  return v[v.size() / 2];
}

double quantile_sorted(std::span<const double> sorted, double q) {
  if (sorted.empty()) fail(ErrorCode::kInvalidArgument, "quantile of empty data");
  const double h = (static_cast<double>(sorted.size()) - 1.0) * std::clamp(q, 0.0, 1.0);
  const auto lo = static_cast<std::size_t>(std::floor(h));
  const auto hi = std::min(lo + 1, sorted.size() - 1);
  return sorted[lo] + (h - static_cast<double>(lo)) * (sorted[hi] - sorted[lo]);
}

BootstrapInterval bootstrap_ci(std::size_t n_cases,
                               const ResampleEstimator& estimator,
                               const BootstrapConfig& cfg) {
  if (n_cases == 0) fail(ErrorCode::kInvalidArgument, "bootstrap over empty data");
  if (cfg.n_resamples < 1) fail(ErrorCode::kInvalidArgument, "need at least one resample");
  if (!(cfg.level > 0.0 && cfg.level < 1.0)) {
    fail(ErrorCode::kInvalidArgument, "confidence level must be in (0,1)");
  }
  const auto n_res = static_cast<std::size_t>(cfg.n_resamples);
  std::vector<double> estimates(n_res);
  std::vector<std::uint8_t> first_undefined(n_res, 0);
  std::vector<std::uint8_t> failed(n_res, 0);
  std::vector<std::size_t> undefined_draws(n_res, 0);

  auto run = [&](std::size_t b) {
    std::vector<std::size_t> idx(n_cases);
    for (int attempt = 0; attempt <= cfg.max_retries; ++attempt) {
      SplitMix64 rng(derive_seed(derive_seed(cfg.seed, b), static_cast<std::uint64_t>(attempt)));
      for (auto& i : idx) i = static_cast<std::size_t>(rng.below(n_cases));
      const auto est = estimator(idx);
      if (est && std::isfinite(*est)) {
        estimates[b] = *est;
        return;
      }
      if (attempt == 0) first_undefined[b] = 1;
      ++undefined_draws[b];
    }
    failed[b] = 1;
  };

  const unsigned workers = std::clamp<unsigned>(cfg.threads, 1u, static_cast<unsigned>(n_res));
  if (workers == 1) {
    for (std::size_t b = 0; b < n_res; ++b) run(b);
  } else {
    std::vector<std::jthread> pool;
    for (unsigned w = 0; w < workers; ++w) {
      pool.emplace_back([&, w] {
        for (std::size_t b = w; b < n_res; b += workers) run(b);
      });
    }
  }

  const auto n_first_undefined = static_cast<std::size_t>(
      std::count(first_undefined.begin(), first_undefined.end(), 1));
  if (2 * n_first_undefined > n_res) {
    fail(ErrorCode::kUndefined, "bootstrap failed: more than half of the resamples are undefined",
         std::to_string(n_first_undefined) + " of " + std::to_string(n_res));
  }
  if (std::find(failed.begin(), failed.end(), 1) != failed.end()) {
    fail(ErrorCode::kUndefined, "bootstrap failed: resample stayed undefined after retries");
  }
  std::sort(estimates.begin(), estimates.end());
  const double alpha = 1.0 - cfg.level;
  BootstrapInterval ci;
  ci.low = quantile_sorted(estimates, alpha / 2.0);
  ci.high = quantile_sorted(estimates, 1.0 - alpha / 2.0);
  ci.undefined_draws =
      std::accumulate(undefined_draws.begin(), undefined_draws.end(), std::size_t{0});
  return ci;
}

namespace {

void attach_interval(ConcordanceEstimate& e, const BootstrapInterval& ci,
                     int n_resamples) {
  e.ci_low = std::clamp(std::min(ci.low, e.rho), -1.0, 1.0);
  e.ci_high = std::clamp(std::max(ci.high, e.rho), -1.0, 1.0);
  e.n_resamples = n_resamples;
}

}  // namespace

ConcordanceEstimate polychoric_with_ci(std::span<const int> a,
                                       std::span<const int> b,
                                       const BootstrapConfig& cfg) {
  auto est = polychoric(cross_tabulate(a, b));
  const auto ci = bootstrap_ci(
      a.size(),
      [&](std::span<const std::size_t> idx) -> std::optional<double> {
        std::vector<int> ra, rb;
        ra.reserve(idx.size());
        rb.reserve(idx.size());
        for (auto i : idx) {
          ra.push_back(a[i]);
          rb.push_back(b[i]);
        }
        try {
          return polychoric(cross_tabulate(ra, rb)).rho;
        } catch (const Error& e) {
          if (e.code() == ErrorCode::kUndefined) return std::nullopt;
          throw;
        }
      },
      cfg);
  attach_interval(est, ci, cfg.n_resamples);
  return est;
}

ConcordanceEstimate polyserial_with_ci(std::span<const double> x,
                                       std::span<const int> y,
                                       const BootstrapConfig& cfg) {
  auto est = polyserial(x, y);
  const auto ci = bootstrap_ci(
      x.size(),
      [&](std::span<const std::size_t> idx) -> std::optional<double> {
        std::vector<double> rx;
        std::vector<int> ry;
        rx.reserve(idx.size());
        ry.reserve(idx.size());
        for (auto i : idx) {
          rx.push_back(x[i]);
          ry.push_back(y[i]);
        }
        try {
          return polyserial(rx, ry).rho;
        } catch (const Error& e) {
          if (e.code() == ErrorCode::kUndefined) return std::nullopt;
          throw;
        }
      },
      cfg);
  attach_interval(est, ci, cfg.n_resamples);
  return est;
}

std::optional<int> parse_ordinal(std::string_view s) {
  if (s == "low") return 1;
  if (s == "medium") return 2;
  if (s == "high") return 3;
  return std::nullopt;
}

std::string_view ordinal_name(int level) {
  switch (level) {
    case 1: return "low";
    case 2: return "medium";
    case 3: return "high";
  }
  return "?";
}

ContingencyTable RatingTable::contingency(std::size_t rater_a,
                                          std::size_t rater_b) const {
  std::vector<int> a, b;
  for (std::size_t r = 0; r < rows(); ++r) {
    if (ratings[rater_a][r] && ratings[rater_b][r]) {
      a.push_back(*ratings[rater_a][r]);
      b.push_back(*ratings[rater_b][r]);
    }
  }
  return cross_tabulate(a, b);
}

std::vector<std::optional<int>> RatingTable::median_ratings(std::size_t* excluded) const {
  std::vector<std::optional<int>> out(rows());
  std::size_t missing = 0;
  std::vector<std::optional<int>> row(raters.size());
  for (std::size_t r = 0; r < rows(); ++r) {
    for (std::size_t k = 0; k < raters.size(); ++k) row[k] = ratings[k][r];
    out[r] = median_rating(row);
    missing += !out[r].has_value();
  }
  if (excluded) *excluded = missing;
  return out;
}

namespace {

std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) {
    s.remove_suffix(1);
  }
  return s;
}

std::vector<std::string_view> split_csv_line(std::string_view line) {
  std::vector<std::string_view> out;
  std::size_t pos = 0;
  while (true) {
    const auto comma = line.find(',', pos);
    out.push_back(trim(line.substr(pos, comma == std::string_view::npos
                                            ? std::string_view::npos
                                            : comma - pos)));
    if (comma == std::string_view::npos) break;
    pos = comma + 1;
  }
  return out;
}

}  // namespace

RatingTable parse_rating_csv(std::string_view csv) {
  RatingTable t;
  std::vector<int> rater_col, model_col;
  std::size_t pos = 0, line_no = 0;
  bool header = true;
  while (pos < csv.size()) {
    auto end = csv.find('\n', pos);
    if (end == std::string_view::npos) end = csv.size();
    const auto line = trim(csv.substr(pos, end - pos));
    pos = end + 1;
    ++line_no;
    if (line.empty()) continue;
    const auto fields = split_csv_line(line);
    if (header) {
      if (fields.empty() || fields[0] != "super_patch_id") {
        fail(ErrorCode::kMalformed, "rating CSV must start with super_patch_id");
      }
      for (std::size_t c = 1; c < fields.size(); ++c) {
        if (fields[c].starts_with("rater_")) {
          rater_col.push_back(static_cast<int>(c));
          t.raters.emplace_back(fields[c].substr(6));
        } else {
          model_col.push_back(static_cast<int>(c));
          t.models.emplace_back(fields[c]);
        }
      }
      t.ratings.resize(t.raters.size());
      t.counts.resize(t.models.size());
      header = false;
      continue;
    }
    const std::size_t width = rater_col.size() + model_col.size() + 1;
    if (fields.size() != width) {
      fail(ErrorCode::kMalformed, "wrong number of fields",
           "line " + std::to_string(line_no));
    }
    t.ids.emplace_back(fields[0]);
    for (std::size_t k = 0; k < rater_col.size(); ++k) {
      const auto v = fields[rater_col[k]];
      if (v.empty()) {
        t.ratings[k].push_back(std::nullopt);
        continue;
      }
      const auto level = parse_ordinal(v);
      if (!level) {
        fail(ErrorCode::kMalformed, "rating must be low|medium|high",
             "line " + std::to_string(line_no) + ": " + std::string(v));
      }
      t.ratings[k].push_back(level);
    }
    for (std::size_t k = 0; k < model_col.size(); ++k) {
      const auto v = fields[model_col[k]];
      if (v.empty()) {
        t.counts[k].push_back(std::nullopt);
        continue;
      }
      try {
        std::size_t used = 0;
        const double d = std::stod(std::string(v), &used);
        if (used != v.size()) throw std::invalid_argument("trailing");
        t.counts[k].push_back(d);
      } catch (const std::exception&) {
        fail(ErrorCode::kMalformed, "model count is not a number",
             "line " + std::to_string(line_no) + ": " + std::string(v));
      }
    }
  }
  if (header) fail(ErrorCode::kMalformed, "empty rating CSV");
  return t;
}

std::array<BinSummary, 3> ordinal_vs_machine_summary(
    std::span<const std::optional<int>> levels,
    std::span<const std::optional<double>> machine) {
  if (levels.size() != machine.size()) {
    fail(ErrorCode::kInvalidArgument, "ratings and machine scores differ in length");
  }
  std::array<std::vector<double>, 3> bins;
  for (std::size_t k = 0; k < levels.size(); ++k) {
    if (!levels[k] || !machine[k]) continue;
    if (*levels[k] < 1 || *levels[k] > 3) {
      fail(ErrorCode::kInvalidArgument, "ordinal level out of range");
    }
    bins[*levels[k] - 1].push_back(*machine[k]);
  }
  std::array<BinSummary, 3> out;
  for (int b = 0; b < 3; ++b) {
    auto& v = bins[b];
    std::sort(v.begin(), v.end());
    out[b].level = b + 1;
    out[b].n = v.size();
    if (v.empty()) continue;
    out[b].median = quantile_sorted(v, 0.5);
    out[b].q1 = quantile_sorted(v, 0.25);
    out[b].q3 = quantile_sorted(v, 0.75);
    out[b].min = v.front();
    out[b].max = v.back();
  }
  return out;
}

std::string estimate_to_json(const ConcordanceEstimate& e) {
  nlohmann::json j = {{"method", to_string(e.method)},
                      {"rho", e.rho},
                      {"ci_low", e.ci_low},
                      {"ci_high", e.ci_high},
                      {"n", e.n},
                      {"n_resamples", e.n_resamples},
                      {"row_thresholds", e.row_thresholds}};
  if (e.method == CorrelationMethod::kPolychoric) j["col_thresholds"] = e.col_thresholds;
  return j.dump();
}

namespace {

nlohmann::json cell_json(const ConcordanceEstimate& e) {
  return {{"rho", e.rho}, {"ci", {e.ci_low, e.ci_high}}, {"n", e.n},
          {"method", to_string(e.method)}};
}

nlohmann::json try_cell(const std::function<ConcordanceEstimate()>& f) {
  try {
    return cell_json(f());
  } catch (const Error& e) {
    if (e.code() != ErrorCode::kUndefined) throw;
    return {{"rho", nullptr}, {"reason", e.what()}};
  }
}

}  // namespace

std::string concordance_report_json(const RatingTable& table,
                                    const BootstrapConfig& cfg) {
  nlohmann::json rows = nlohmann::json::array();
  const std::size_t k = table.raters.size();

  auto rater_vs_model = [&](const std::vector<std::optional<int>>& levels,
                            std::size_t m) {
    std::vector<double> x;
    std::vector<int> y;
    for (std::size_t r = 0; r < table.rows(); ++r) {
      if (levels[r] && table.counts[m][r]) {
        x.push_back(*table.counts[m][r]);
        y.push_back(*levels[r]);
      }
    }
    return try_cell([&] { return polyserial_with_ci(x, y, cfg); });
  };

  for (std::size_t a = 0; a < k; ++a) {
    nlohmann::json row = {{"rater", table.raters[a]}};
    if (k >= 2) {
      const std::size_t b = (a + 1) % k;
      std::vector<int> ra, rb;
      for (std::size_t r = 0; r < table.rows(); ++r) {
        if (table.ratings[a][r] && table.ratings[b][r]) {
          ra.push_back(*table.ratings[a][r]);
          rb.push_back(*table.ratings[b][r]);
        }
      }
      auto cell = try_cell([&] { return polychoric_with_ci(ra, rb, cfg); });
      cell["vs"] = table.raters[b];
      row["human"] = cell;
    } else {
      row["human"] = nullptr;
    }
    nlohmann::json models = nlohmann::json::object();
    for (std::size_t m = 0; m < table.models.size(); ++m) {
      models[table.models[m]] = rater_vs_model(table.ratings[a], m);
    }
    row["models"] = models;
    rows.push_back(row);
  }
  if (k >= 3 && k % 2 == 1) {
    std::size_t excluded = 0;
    const auto med = table.median_ratings(&excluded);
    nlohmann::json row = {{"rater", "Median"}, {"human", nullptr},
                          {"excluded_rows", excluded}};
    nlohmann::json models = nlohmann::json::object();
    nlohmann::json summary = nlohmann::json::object();
    for (std::size_t m = 0; m < table.models.size(); ++m) {
      models[table.models[m]] = rater_vs_model(med, m);
      nlohmann::json bins = nlohmann::json::array();
      for (const auto& b : ordinal_vs_machine_summary(med, table.counts[m])) {
        auto opt = [](const std::optional<double>& v) {
          return v ? nlohmann::json(*v) : nlohmann::json(nullptr);
        };
        bins.push_back({{"level", ordinal_name(b.level)}, {"n", b.n},
                        {"median", opt(b.median)}, {"q1", opt(b.q1)},
                        {"q3", opt(b.q3)}, {"min", opt(b.min)}, {"max", opt(b.max)}});
      }
      summary[table.models[m]] = bins;
    }
    row["models"] = models;
    rows.push_back(row);
    return nlohmann::json{{"rows", rows},
                          {"n_resamples", cfg.n_resamples},
                          {"level", cfg.level},
                          {"median_vs_machine", summary}}
        .dump(1);
  }
  return nlohmann::json{{"rows", rows}, {"n_resamples", cfg.n_resamples},
                        {"level", cfg.level}}
      .dump(1);
}

}  // namespace tilatlas
