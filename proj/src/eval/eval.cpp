#include "tilatlas/eval.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numeric>
#include <thread>

#include "json.hpp"
#include "tilatlas/error.hpp"

namespace tilatlas {

namespace {

enum class Outcome { kTp, kFp, kTn, kFn, kSkip };

Outcome classify(PatchLabel pred, PatchLabel truth, bool in_region) {
  if (!in_region) return Outcome::kSkip;
  if (truth == PatchLabel::kUncovered) {
    fail(ErrorCode::kInvalidArgument,
         "ground truth has uncovered cells inside the evaluation region");
  }
  const bool p = pred == PatchLabel::kPositive;
  const bool t = truth == PatchLabel::kPositive;
  if (p && t) return Outcome::kTp;
  if (p) return Outcome::kFp;
  if (t) return Outcome::kFn;
  return Outcome::kTn;
}

void check_inputs(const LabelMap& pred, const LabelMap& truth,
                  const TissueMask* mask, std::string_view what) {
  require_same_geometry(pred.geometry(), truth.geometry(), what);
  if (mask) require_same_geometry(pred.geometry(), mask->geometry(), what);
}

Ratio ratio(std::uint64_t num, std::uint64_t den) {
  if (den == 0) return std::nullopt;
  return static_cast<double>(num) / static_cast<double>(den);
}

}  // namespace

ConfusionCounts confusion(const LabelMap& pred, const LabelMap& truth,
                          const TissueMask* eval_mask) {
  check_inputs(pred, truth, eval_mask, "confusion");
  ConfusionCounts c;
  const auto p = pred.labels();
  const auto t = truth.labels();
  for (std::size_t k = 0; k < p.size(); ++k) {
    const bool in = eval_mask == nullptr || eval_mask->cells()[k] != 0;
    switch (classify(p[k], t[k], in)) {
      case Outcome::kTp: ++c.tp; break;
      case Outcome::kFp: ++c.fp; break;
      case Outcome::kTn: ++c.tn; break;
      case Outcome::kFn: ++c.fn; break;
      case Outcome::kSkip: break;
    }
  }
  return c;
}

MetricsReport metrics(const ConfusionCounts& c) {
  MetricsReport m;
  m.counts = c;
  m.ppv = ratio(c.tp, c.tp + c.fp);
  m.npv = ratio(c.tn, c.tn + c.fn);
  m.tpr = ratio(c.tp, c.tp + c.fn);
  m.tnr = ratio(c.tn, c.tn + c.fp);
  m.fpr = ratio(c.fp, c.fp + c.tn);
  m.fnr = ratio(c.fn, c.fn + c.tp);
  m.accuracy = ratio(c.tp + c.tn, c.total());
  if (m.ppv && m.tpr && (*m.ppv + *m.tpr) > 0.0) {
    m.f1 = 2.0 * (*m.ppv * *m.tpr) / (*m.ppv + *m.tpr);
  } else if (m.ppv && m.tpr) {
    m.f1 = 0.0;  // tp = 0 with both denominators non-empty
  }
  return m;
}

std::string metrics_to_json(const MetricsReport& m) {
  auto put = [](const Ratio& r) -> nlohmann::json {
    return r ? nlohmann::json(*r) : nlohmann::json(nullptr);
  };
  nlohmann::json j = {
      {"f1", put(m.f1)},   {"ppv", put(m.ppv)}, {"npv", put(m.npv)},
      {"tpr", put(m.tpr)}, {"tnr", put(m.tnr)}, {"fpr", put(m.fpr)},
      {"fnr", put(m.fnr)}, {"accuracy", put(m.accuracy)},
      {"counts",
       {{"tp", m.counts.tp}, {"fp", m.counts.fp}, {"tn", m.counts.tn},
        {"fn", m.counts.fn}}}};
  return j.dump();
}

SweepResult threshold_sweep(std::span<const SweepImage> images,
                            unsigned threads) {
  if (images.empty()) fail(ErrorCode::kInvalidArgument, "sweep needs at least one image");
  for (const auto& im : images) {
    require_same_geometry(im.map.geometry(), im.truth.geometry(),
                          "threshold_sweep " + im.name);
    if (im.eval_mask) {
      require_same_geometry(im.map.geometry(), im.eval_mask->geometry(),
                            "threshold_sweep " + im.name);
    }
  }
  constexpr int kRows = kSweepSteps + 1;
  // f1[k][img]; filled per image so workers touch disjoint columns.
  std::vector<std::vector<Ratio>> f1(kRows, std::vector<Ratio>(images.size()));
  auto run_image = [&](std::size_t idx) {
    const auto& im = images[idx];
    const TissueMask* mask = im.eval_mask ? &*im.eval_mask : nullptr;
    for (int k = 0; k < kRows; ++k) {
      const auto labels = threshold(im.map, sweep_threshold(k));
      f1[k][idx] = metrics(confusion(labels, im.truth, mask)).f1;
    }
  };
  const unsigned workers = std::clamp<unsigned>(
      threads, 1u, static_cast<unsigned>(images.size()));
  if (workers == 1) {
    for (std::size_t i = 0; i < images.size(); ++i) run_image(i);
  } else {
    std::vector<std::jthread> pool;
    for (unsigned w = 0; w < workers; ++w) {
      pool.emplace_back([&, w] {
        for (std::size_t i = w; i < images.size(); i += workers) run_image(i);
      });
    }
  }

  SweepResult result;
  int best_k = -1;
  for (int k = 0; k < kRows; ++k) {
    SweepRow row;
    row.threshold = sweep_threshold(k);
    double sum = 0.0;
    for (const auto& v : f1[k]) {
      if (v) {
        sum += *v;
        ++row.n_defined;
      }
    }
    if (row.n_defined > 0) {
      const double mean = sum / static_cast<double>(row.n_defined);
      double ss = 0.0;
      for (const auto& v : f1[k]) {
        if (v) ss += (*v - mean) * (*v - mean);
      }
      row.mean_f1 = mean;
      row.std_f1 = std::sqrt(ss / static_cast<double>(row.n_defined));
      if (best_k < 0 || mean > *result.rows[best_k].mean_f1) best_k = k;
    }
    result.rows.push_back(row);
  }
  if (best_k >= 0) {
    result.best_threshold = sweep_threshold(best_k);
    result.best_mean_f1 = result.rows[best_k].mean_f1;
    for (const auto& im : images) {
      const TissueMask* mask = im.eval_mask ? &*im.eval_mask : nullptr;
      result.per_image_at_best.push_back(metrics(
          confusion(threshold(im.map, result.best_threshold), im.truth, mask)));
    }
  }
  return result;
}

std::string sweep_to_csv(const SweepResult& r) {
  std::string out = "threshold,mean_f1,std_f1,n_defined\n";
  char buf[128];
  for (const auto& row : r.rows) {
    std::snprintf(buf, sizeof(buf), "%.2f,", row.threshold);
    out += buf;
    if (row.mean_f1) {
      std::snprintf(buf, sizeof(buf), "%.6f,%.6f,", *row.mean_f1, *row.std_f1);
      out += buf;
    } else {
      out += ",,";
    }
    out += std::to_string(row.n_defined);
    out += '\n';
  }
  return out;
}

double auc(std::span<const double> scores, std::span<const std::uint8_t> labels) {
  if (scores.size() != labels.size()) {
    fail(ErrorCode::kInvalidArgument, "scores and labels differ in length");
  }
  std::vector<std::size_t> order(scores.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return scores[a] < scores[b];
  });
  // Twice the Mann-Whitney U, in integers: a positive beating a negative
  // scores 2, a tie 1.
  std::uint64_t twice_u = 0;
  std::uint64_t neg_below = 0;
  std::uint64_t n_pos = 0, n_neg = 0;
  std::size_t k = 0;
  while (k < order.size()) {
    std::size_t end = k;
    std::uint64_t pos_tied = 0, neg_tied = 0;
    while (end < order.size() && scores[order[end]] == scores[order[k]]) {
      (labels[order[end]] ? pos_tied : neg_tied) += 1;
      ++end;
    }
    twice_u += pos_tied * (2 * neg_below + neg_tied);
    neg_below += neg_tied;
    n_pos += pos_tied;
    n_neg += neg_tied;
    k = end;
  }
  if (n_pos == 0 || n_neg == 0) {
    fail(ErrorCode::kUndefined, "AUC undefined for single-class input");
  }
  return static_cast<double>(twice_u) /
         (2.0 * static_cast<double>(n_pos) * static_cast<double>(n_neg));
}

RgbaImage render_confusion(const LabelMap& pred, const LabelMap& truth,
                           const TissueMask* eval_mask) {
  check_inputs(pred, truth, eval_mask, "render_confusion");
  const auto& g = pred.geometry();
  RgbaImage img(static_cast<int>(g.cols()), static_cast<int>(g.rows()));
  const auto p = pred.labels();
  const auto t = truth.labels();
  for (std::int64_t i = 0; i < g.rows(); ++i) {
    for (std::int64_t j = 0; j < g.cols(); ++j) {
      const auto k = g.index(i, j);
      const bool in = (eval_mask == nullptr || eval_mask->cells()[k] != 0) &&
                      t[k] != PatchLabel::kUncovered;
      Rgba color = confusion_colors::kOutside;
      switch (classify(p[k], t[k], in)) {
        case Outcome::kTp: color = confusion_colors::kTruePositive; break;
        case Outcome::kFp: color = confusion_colors::kFalsePositive; break;
        case Outcome::kTn: color = confusion_colors::kTrueNegative; break;
        case Outcome::kFn: color = confusion_colors::kFalseNegative; break;
        case Outcome::kSkip: break;
      }
      img.set(static_cast<int>(j), static_cast<int>(i), color);
    }
  }
  return img;
}

}  // namespace tilatlas
