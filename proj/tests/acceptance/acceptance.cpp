// Acceptance suite: one PASS/FAIL line per criterion, non-zero exit if any
// criterion fails.

#include <sys/wait.h>

#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <functional>
#include <iostream>
#include <map>
#include <numbers>
#include <sstream>
#include <string>
#include <vector>

#include "json.hpp"
#include "oracles.hpp"
#include "tilatlas/atlas/catalog.hpp"
#include "tilatlas/atlas/prediction_file.hpp"
#include "tilatlas/atlas/render.hpp"
#include "tilatlas/concord.hpp"
#include "tilatlas/error.hpp"
#include "tilatlas/eval.hpp"
#include "tilatlas/gridmap.hpp"

using namespace tilatlas;
using Clock = std::chrono::steady_clock;

namespace {

class Checker {
 public:
  void expect(bool ok, const std::string& what) {
    ++checks_;
    if (!ok && first_failure_.empty()) first_failure_ = what;
    failed_ += !ok;
  }
  bool ok() const { return failed_ == 0; }
  std::string summary() const {
    std::ostringstream os;
    os << checks_ << " checks";
    if (failed_) os << ", " << failed_ << " failed; first: " << first_failure_;
    return os.str();
  }
  void note(const std::string& s) { notes_ += (notes_.empty() ? "" : "; ") + s; }
  const std::string& notes() const { return notes_; }

 private:
  std::size_t checks_ = 0;
  std::size_t failed_ = 0;
  std::string first_failure_;
  std::string notes_;
};

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

std::string fmt(double v, int digits = 3) {
  std::ostringstream os;
  os.precision(digits);
  os << std::fixed << v;
  return os.str();
}

// 1 -------------------------------------------------------------------------

void aggregation_oracle(Checker& c) {
  SplitMix64 rng(derive_seed(2024, 1));
  const auto t0 = Clock::now();
  double library = 0;
  const AggregationFunc funcs[] = {AggregationFunc::kMax, AggregationFunc::kMedian,
                                   AggregationFunc::kAverage};
  for (int m = 0; m < 100; ++m) {
    const auto rows = 1 + static_cast<std::int64_t>(rng.below(64));
    const auto cols = 1 + static_cast<std::int64_t>(rng.below(64));
    const auto map = oracle::random_map(rng, rows, cols, 0.5 + 0.5 * rng.uniform());
    for (int w = 1; w <= 8; ++w) {
      for (auto f : funcs) {
        const AggregationConfig cfg{w, f};
        const auto l0 = Clock::now();
        const auto got = aggregate(map, cfg);
        library += seconds_since(l0);
        const auto want = oracle::aggregate_nested_loops(map, cfg);
        c.expect(got == want, "map " + std::to_string(m) + " w=" + std::to_string(w) +
                                  " f=" + std::string(to_string(f)));
        if (w == 1) c.expect(got == map, "w=1 identity on map " + std::to_string(m));
      }
    }
  }
  const double secs = seconds_since(t0);
  c.expect(secs < 5.0, "runtime " + fmt(secs) + " s >= 5 s");
  c.note("100 maps x 8 windows x 3 functions in " + fmt(secs, 2) + " s including the oracle, " +
         fmt(library, 3) + " s in aggregate()");
}

// 2 -------------------------------------------------------------------------

void metric_identities(Checker& c) {
  SplitMix64 rng(derive_seed(2024, 2));
  for (int k = 0; k < 1000; ++k) {
    const ConfusionCounts cc{rng.below(1000), rng.below(1000), rng.below(1000),
                             rng.below(1000)};
    const auto m = metrics(cc);
    const std::string tag = "counts #" + std::to_string(k);
    if (m.f1 && m.ppv && m.tpr && *m.ppv + *m.tpr > 0) {
      c.expect(std::abs(*m.f1 - 2 * *m.ppv * *m.tpr / (*m.ppv + *m.tpr)) <= 1e-12, tag + " F1");
    }
    if (m.tpr && m.fnr) c.expect(std::abs(*m.tpr + *m.fnr - 1) <= 1e-12, tag + " TPR+FNR");
    if (m.tnr && m.fpr) c.expect(std::abs(*m.tnr + *m.fpr - 1) <= 1e-12, tag + " TNR+FPR");
  }

  const auto g = grid_from_slide(20, 20, 10);
  const std::vector<std::vector<double>> probs = {
      {0.2, 0.7, 0.45, 0.9}, {0.1, 0.3, 0.6, 0.0}, {0.55, 0.55, 0.05, 0.99}};
  const std::vector<std::vector<std::uint8_t>> cover = {
      {1, 1, 1, 1}, {1, 1, 1, 0}, {1, 0, 1, 1}};
  const std::vector<std::vector<std::uint8_t>> truth = {
      {0, 1, 1, 1}, {0, 1, 0, 0}, {1, 1, 0, 1}};
  std::vector<SweepImage> images;
  for (std::size_t i = 0; i < probs.size(); ++i) {
    std::vector<PatchLabel> t;
    for (auto v : truth[i]) t.push_back(v ? PatchLabel::kPositive : PatchLabel::kNegative);
    images.push_back({ProbabilityMap(g, probs[i], cover[i], LabelKind::kCancer, ""),
                      LabelMap(g, t), std::nullopt, std::to_string(i)});
  }
  const auto r = threshold_sweep(images);
  c.expect(r.rows.size() == 101, "sweep emits 101 rows");
  for (int k = 0; k <= 100 && k < static_cast<int>(r.rows.size()); ++k) {
    const double t = k / 100.0;
    const auto& row = r.rows[static_cast<std::size_t>(k)];
    c.expect(row.threshold == t, "threshold step at row " + std::to_string(k));
    std::vector<double> f1s;
    for (std::size_t i = 0; i < probs.size(); ++i) {
      if (auto f = oracle::f1_direct(probs[i], cover[i], truth[i], t)) f1s.push_back(*f);
    }
    c.expect(row.n_defined == f1s.size(), "defined count at t=" + fmt(t, 2));
    if (f1s.empty()) {
      c.expect(!row.mean_f1, "undefined mean at t=" + fmt(t, 2));
      continue;
    }
    double mean = 0;
    for (double f : f1s) mean += f;
    mean /= static_cast<double>(f1s.size());
    c.expect(row.mean_f1 && std::abs(*row.mean_f1 - mean) <= 1e-12,
             "mean F1 at t=" + fmt(t, 2));
  }
}

// 3 -------------------------------------------------------------------------

void auc_oracle(Checker& c) {
  SplitMix64 rng(derive_seed(2024, 3));
  for (int d = 0; d < 50; ++d) {
    const std::size_t n = 2 + rng.below(999);
    const auto levels = 2 + rng.below(200);
    std::vector<double> s(n);
    std::vector<std::uint8_t> y(n);
    for (std::size_t k = 0; k < n; ++k) {
      s[k] = static_cast<double>(rng.below(levels)) / static_cast<double>(levels);
      y[k] = rng.uniform() < 0.3 + 0.4 * s[k];
    }
    y[0] = 1;
    y[1] = 0;
    const double a = auc(s, y);
    c.expect(std::abs(a - oracle::auc_pairwise(s, y)) <= 1e-12,
             "dataset " + std::to_string(d) + " vs pairwise");
    std::vector<double> t(n), u(n);
    for (std::size_t k = 0; k < n; ++k) {
      t[k] = std::exp(4 * s[k]) - 3;
      u[k] = std::atan(10 * s[k] - 5);
    }
    c.expect(auc(t, y) == a, "dataset " + std::to_string(d) + " exp transform");
    c.expect(std::abs(auc(u, y) - a) <= 1e-12, "dataset " + std::to_string(d) + " atan transform");
  }
}

// 4 -------------------------------------------------------------------------

void concordance_recovery(Checker& c) {
  const auto t0 = Clock::now();
  const double cuts[] = {normal_quantile(1.0 / 3), normal_quantile(2.0 / 3)};
  std::string by_rho;
  for (double rho : {-0.7, -0.3, 0.0, 0.3, 0.7, 0.9}) {
    double err_choric = 0, err_serial = 0;
    for (std::uint64_t s = 0; s < 20; ++s) {
      SplitMix64 rng(derive_seed(static_cast<std::uint64_t>((rho + 1) * 1000), s));
      std::vector<int> a(5000), b(5000), y(5000);
      std::vector<double> x(5000);
      for (std::size_t k = 0; k < 5000; ++k) {
        const auto [z1, z2] = oracle::correlated_normals(rng, rho);
        a[k] = oracle::discretize(z1, cuts);
        b[k] = oracle::discretize(z2, cuts);
        x[k] = z1;
        y[k] = b[k];
      }
      err_choric += std::abs(polychoric(cross_tabulate(a, b)).rho - rho);
      err_serial += std::abs(polyserial(x, y).rho - rho);
    }
    err_choric /= 20;
    err_serial /= 20;
    c.expect(err_choric <= 0.05, "polychoric MAE " + fmt(err_choric, 4) + " at rho=" + fmt(rho, 1));
    c.expect(err_serial <= 0.05, "polyserial MAE " + fmt(err_serial, 4) + " at rho=" + fmt(rho, 1));
    by_rho += (by_rho.empty() ? "" : " ") + fmt(rho, 1) + ":" + fmt(err_choric, 3) + "/" +
             fmt(err_serial, 3);
  }
  const auto diag = polychoric(ContingencyTable{3, 3, {40, 0, 0, 0, 35, 0, 0, 0, 25}});
  c.expect(diag.rho >= 0.99, "perfect agreement rho " + fmt(diag.rho, 4));
  const double closed = 0.25 + std::asin(0.5) / (2 * std::numbers::pi);
  c.expect(std::abs(bivariate_normal_cdf(0, 0, 0.5) - closed) <= 1e-7, "Phi2(0,0,0.5)");
  const double secs = seconds_since(t0);
  c.expect(secs < 60.0, "runtime " + fmt(secs) + " s >= 60 s");
  c.note("MAE polychoric/polyserial by rho " + by_rho + "; " + fmt(secs, 2) + " s");
}

// 5 -------------------------------------------------------------------------

void combined_round_trip(Checker& c) {
  // Every channel value, with both tissue states.
  const auto g = grid_from_slide(16 * 10, 32 * 10, 10);
  std::vector<std::uint8_t> r(512), gr(512), b(512);
  for (int k = 0; k < 512; ++k) {
    r[static_cast<std::size_t>(k)] = static_cast<std::uint8_t>(k % 256);
    gr[static_cast<std::size_t>(k)] = static_cast<std::uint8_t>(255 - k % 256);
    b[static_cast<std::size_t>(k)] = k < 256 ? 255 : 0;
  }
  const CombinedMap cm(g, r, gr, b);
  const auto dec = decode_combined(cm);
  c.expect(combine(dec.til, dec.tumor, dec.mask) == cm, "re-encoding all 256 channel values");
  for (std::size_t k = 0; k < 512; ++k) {
    c.expect(std::abs(dec.til.values()[k] - r[k] / 255.0) <= 1e-15, "channel decode");
    c.expect(dec.mask.cells()[k] == (k < 256), "tissue flag");
  }
  // Every probability that quantizes to each channel value decodes within 1/510.
  for (int v = 0; v <= 100000; ++v) {
    const double p = v / 100000.0;
    c.expect(std::abs(quantize_probability(p) / 255.0 - p) <= 1.0 / 510 + 1e-15,
             "quantization error at p=" + fmt(p, 5));
  }
  c.expect(combined_from_image(combined_to_image(cm), g) == cm, "raster round trip");

  SplitMix64 rng(derive_seed(2024, 5));
  for (int m = 0; m < 50; ++m) {
    const auto rows = 1 + static_cast<std::int64_t>(rng.below(60));
    const auto cols = 1 + static_cast<std::int64_t>(rng.below(60));
    auto til = oracle::random_map(rng, rows, cols, 1.0, 10, LabelKind::kTil);
    auto tumor = oracle::random_map(rng, rows, cols, 1.0, 10, LabelKind::kCancer);
    std::vector<std::uint8_t> tissue(til.geometry().cell_count());
    for (auto& t : tissue) t = rng.below(4) != 0;
    const TissueMask mask(til.geometry(), tissue);
    const auto d = decode_combined(combine(til, tumor, mask));
    for (std::size_t k = 0; k < tissue.size(); ++k) {
      c.expect(std::abs(d.til.values()[k] - til.values()[k]) <= 1.0 / 510, "til decode");
      c.expect(std::abs(d.tumor.values()[k] - tumor.values()[k]) <= 1.0 / 510, "tumor decode");
      c.expect(d.mask.cells()[k] == tissue[k], "tissue flag on random map");
    }
  }

  // Golden overlay: lymphocyte red over cancer yellow over tissue grey over white.
  const auto g4 = grid_from_slide(40, 40, 10);
  const std::vector<double> til = {0.9, 0.9, 0.1, 0.1, 0.9, 0.1, 0.1, 0.1,
                                   0.1, 0.1, 0.1, 0.0, 0.0, 0.0, 0.6, 0.4};
  const std::vector<double> tumor = {0.9, 0.1, 0.9, 0.1, 0.1, 0.7, 0.2, 0.1,
                                     0.1, 0.1, 0.1, 0.0, 0.0, 0.0, 0.9, 0.65};
  const std::vector<std::uint8_t> tissue = {1, 1, 1, 1, 1, 1, 1, 1, 1, 1, 0, 0, 0, 0, 1, 1};
  OverlayParams op;
  op.cancer_aggregation = std::nullopt;
  const auto img = render_overlay(ProbabilityMap::dense(g4, til, LabelKind::kTil),
                                  ProbabilityMap::dense(g4, tumor, LabelKind::kCancer),
                                  TissueMask(g4, tissue), op);
  const Rgba R{255, 0, 0, 255}, Y{255, 255, 0, 255}, G{192, 192, 192, 255},
      W{255, 255, 255, 255};
  const std::vector<Rgba> golden = {R, R, Y, G, R, Y, G, G, G, G, W, W, W, W, R, Y};
  for (int k = 0; k < 16; ++k) {
    c.expect(img.get(k % 4, k / 4) == golden[static_cast<std::size_t>(k)],
             "overlay golden cell " + std::to_string(k));
  }
}

// 6 -------------------------------------------------------------------------

void confusion_render(Checker& c) {
  SplitMix64 rng(derive_seed(2024, 6));
  for (int m = 0; m < 100; ++m) {
    const auto rows = 1 + static_cast<std::int64_t>(rng.below(80));
    const auto cols = 1 + static_cast<std::int64_t>(rng.below(80));
    const auto pred = threshold(oracle::random_map(rng, rows, cols, 0.85), rng.uniform());
    const auto truth = threshold(oracle::random_map(rng, rows, cols, 1.0), rng.uniform());
    const auto counts = confusion(pred, truth);
    const auto img = render_confusion(pred, truth);
    std::map<Rgba, std::uint64_t> hist;
    for (std::size_t k = 0; k < img.data.size(); k += 4) {
      hist[{img.data[k], img.data[k + 1], img.data[k + 2], img.data[k + 3]}]++;
    }
    const std::string tag = "pair " + std::to_string(m);
    c.expect(hist[Rgba{0, 255, 0, 255}] == counts.tp, tag + " TP green");
    c.expect(hist[Rgba{255, 0, 0, 255}] == counts.fn, tag + " FN red");
    c.expect(hist[Rgba{255, 255, 0, 255}] == counts.fp, tag + " FP yellow");
    c.expect(hist[Rgba{0, 0, 255, 255}] == counts.tn, tag + " TN blue");
  }
}

// 7 -------------------------------------------------------------------------

void super_patches(Checker& c) {
  SplitMix64 rng(derive_seed(2024, 7));
  for (int m = 0; m < 100; ++m) {
    const auto rows = 1 + static_cast<std::int64_t>(rng.below(100));
    const auto cols = 1 + static_cast<std::int64_t>(rng.below(100));
    const auto labels = threshold(oracle::random_map(rng, rows, cols, 0.8), rng.uniform());
    std::int64_t total = 0;
    for (const auto& s : super_patch_scores(labels)) {
      c.expect(s.machine_count >= 0 && s.machine_count <= 64, "count in [0,64]");
      c.expect(s.machine_count <= s.cells, "count within block cells");
      total += s.machine_count;
    }
    c.expect(total == static_cast<std::int64_t>(labels.count(PatchLabel::kPositive)),
             "block sum equals positives on map " + std::to_string(m));
  }
  const auto g = grid_from_slide(240, 160, 10);
  std::vector<PatchLabel> v(g.cell_count(), PatchLabel::kNegative);
  const std::int64_t cells[17][2] = {{8, 16}, {8, 17}, {8, 23}, {9, 18}, {9, 20}, {10, 16},
                                     {10, 21}, {11, 19}, {11, 22}, {12, 16}, {12, 17},
                                     {13, 23}, {14, 18}, {14, 20}, {15, 16}, {15, 21},
                                     {15, 23}};
  for (const auto& rc : cells) v[g.index(rc[0], rc[1])] = PatchLabel::kPositive;
  const auto scores = super_patch_scores(LabelMap(g, v));
  for (const auto& s : scores) {
    const int want = (s.block_row == 1 && s.block_col == 2) ? 17 : 0;
    c.expect(s.machine_count == want, "hand grid block (" + std::to_string(s.block_row) + "," +
                                          std::to_string(s.block_col) + ")");
  }
}

// 8 -------------------------------------------------------------------------

struct RunResult {
  int status = -1;
  std::string out;
};

RunResult run(const std::string& cmd) {
  RunResult r;
  FILE* p = popen((cmd + " 2>/dev/null").c_str(), "r");
  if (!p) return r;
  char buf[4096];
  std::size_t n;
  while ((n = fread(buf, 1, sizeof(buf), p)) > 0) r.out.append(buf, n);
  const int st = pclose(p);
  r.status = WIFEXITED(st) ? WEXITSTATUS(st) : -1;
  return r;
}

void formats_and_service(Checker& c) {
  oracle::TempDir dir("acceptance");
  {
    Catalog cat(dir.path() / "catalog");
    SplitMix64 rng(derive_seed(2024, 8));
    for (int m = 0; m < 20; ++m) {
      PredictionHeader h;
      h.slide_id = "slide-" + std::to_string(m);
      h.patch_size_px = 350;
      h.base_width = 350 * (1 + static_cast<std::int64_t>(rng.below(40))) - 17;
      h.base_height = 350 * (1 + static_cast<std::int64_t>(rng.below(40)));
      h.label_kind = m % 2 ? LabelKind::kTil : LabelKind::kCancer;
      h.model_id = "model";
      const auto base = oracle::random_map(rng, h.geometry().rows(), h.geometry().cols(), 0.7);
      const ProbabilityMap map(h.geometry(), {base.values().begin(), base.values().end()},
                               {base.coverage().begin(), base.coverage().end()},
                               h.label_kind, h.model_id);
      const auto text = serialize_prediction_file(h, map);
      const auto first = cat.ingest(text);
      c.expect(cat.export_map(first.record.map_id) == text, "export byte-identical");
      const auto again = cat.ingest(text);
      c.expect(!again.created && again.record.map_id == first.record.map_id,
               "re-ingest idempotent");
      c.expect(cat.list_maps().size() == static_cast<std::size_t>(m + 1), "map count");
    }
    const auto big = oracle::random_map(rng, 700, 600, 0.8);
    const auto full = render_heatmap(big, RenderParams{});
    const TilePyramid pyr(full);
    RgbaImage stitched(full.width, full.height);
    for (int ty = 0; ty < pyr.level(0).tiles_y; ++ty) {
      for (int tx = 0; tx < pyr.level(0).tiles_x; ++tx) {
        const auto tile = pyr.tile(0, tx, ty);
        for (int y = 0; y < 256 && ty * 256 + y < full.height; ++y) {
          for (int x = 0; x < 256 && tx * 256 + x < full.width; ++x) {
            stitched.set(tx * 256 + x, ty * 256 + y, tile.get(x, y));
          }
        }
      }
    }
    c.expect(stitched == full, "stitched z=0 tiles equal the full render");
    const auto& top = pyr.level(pyr.levels() - 1);
    c.expect(top.tiles_x == 1 && top.tiles_y == 1, "top level is one tile");
  }

  const std::string exe = TILMAP_EXE;
  const auto work = dir.path() / "e2e";
  const std::string w = work.string();
  const std::string cli = "\"" + exe + "\" --data-dir \"" + w + "/catalog\" ";
  const auto t0 = Clock::now();
  std::vector<std::string> failures;
  auto step = [&](const std::string& name, const std::string& args) {
    auto r = run(cli + args);
    if (r.status != 0) failures.push_back(name + " exit " + std::to_string(r.status));
    return r.out;
  };
  step("synth", "synth -o \"" + w + "/slide\"");
  step("score", "patchprep score \"" + w + "/slide/slide.png\" --slide-id synthetic-3500 -o \"" +
                    w + "/slide/til.tsv\"");
  const auto ingested =
      step("ingest", "ingest \"" + w + "/slide/cancer.tsv\" \"" + w + "/slide/til.tsv\"");
  std::string cancer_id, til_id;
  std::istringstream lines(ingested);
  for (std::string line; std::getline(lines, line);) {
    try {
      const auto j = nlohmann::json::parse(line);
      (j["label_kind"] == "til" ? til_id : cancer_id) = j["map_id"];
    } catch (const std::exception&) {
    }
  }
  c.expect(!cancer_id.empty() && !til_id.empty(), "ingest printed both map ids");
  const auto agg = step("aggregate", "aggregate " + cancer_id + " -w 4 -f max");
  step("combine", "combine --til " + til_id + " --tumor " + cancer_id + " -o \"" + w +
                      "/combined.png\" --overlay \"" + w + "/overlay.png\"");
  const auto ev = step("eval", "eval confusion --pred " + cancer_id + " --truth \"" + w +
                                   "/slide/annotations.json\" -o \"" + w + "/confusion.png\"");
  const auto st = step("stats", "stats --til " + til_id + " --tumor " + cancer_id);
  const double secs = seconds_since(t0);
  for (const auto& f : failures) c.expect(false, "CLI step failed: " + f);
  c.expect(secs < 10.0, "end-to-end " + fmt(secs, 2) + " s >= 10 s");
  c.expect(std::filesystem::exists(work / "combined.png"), "combined PNG written");
  c.expect(std::filesystem::exists(work / "overlay.png"), "overlay PNG written");
  c.expect(std::filesystem::exists(work / "confusion.png"), "confusion PNG written");
  double f1 = -1, fraction = -1;
  try {
    f1 = nlohmann::json::parse(ev)["f1"].get<double>();
    fraction = nlohmann::json::parse(st)["til_in_tumor_fraction"].get<double>();
    c.expect(nlohmann::json::parse(agg)["source_map"] == cancer_id, "derived map links source");
  } catch (const std::exception& e) {
    c.expect(false, std::string("CLI output not parseable: ") + e.what());
  }
  c.expect(f1 > 0 && f1 <= 1, "eval F1 in (0,1]");
  c.expect(fraction >= 0 && fraction <= 1, "TIL-in-tumor fraction in [0,1]");
  c.note("CLI synth+score+ingest+aggregate+combine+eval+stats " + fmt(secs, 2) +
         " s, F1 " + fmt(f1) + ", TIL-in-tumor " + fmt(fraction));
}

// 9 -------------------------------------------------------------------------

void throughput(Checker& c) {
  SplitMix64 rng(derive_seed(2024, 9));
  const auto map = oracle::random_map(rng, 250, 400, 0.8);  // 100,000 patches
  const auto params = RenderParams::defaults_for(LabelKind::kCancer);
  auto t0 = Clock::now();
  const auto img = render_heatmap(map, params, 1);
  const double single = seconds_since(t0);
  c.expect(single < 2.0, "single-threaded aggregate+render " + fmt(single) + " s >= 2 s");
  const auto png = encode_png(img);
  for (auto f : {AggregationFunc::kMax, AggregationFunc::kMedian, AggregationFunc::kAverage}) {
    const AggregationConfig cfg{4, f};
    const auto seq = aggregate(map, cfg, 1);
    for (unsigned threads : {2u, 4u, 7u}) {
      c.expect(aggregate(map, cfg, threads) == seq,
               "parallel aggregate bit-identical (" + std::string(to_string(f)) + ", " +
                   std::to_string(threads) + " threads)");
    }
  }
  t0 = Clock::now();
  const auto par = render_heatmap(map, params, 4);
  const double parallel = seconds_since(t0);
  c.expect(par == img, "parallel render bit-identical");
  c.expect(encode_png(par) == png, "parallel PNG bytes identical");
  c.note("100k patches: 1 thread " + fmt(single, 4) + " s, 4 threads " + fmt(parallel, 4) + " s");
}

}  // namespace

int main() {
  struct Criterion {
    int id;
    const char* name;
    std::function<void(Checker&)> body;
  };
  const std::vector<Criterion> criteria = {
      {1, "aggregation matches the block formula oracle", aggregation_oracle},
      {2, "metric identities and threshold sweep oracle", metric_identities},
      {3, "AUC matches the pairwise oracle", auc_oracle},
      {4, "polychoric/polyserial recovery", concordance_recovery},
      {5, "combined-map round trip and overlay precedence", combined_round_trip},
      {6, "confusion render histogram equals counts", confusion_render},
      {7, "super-patch scores", super_patches},
      {8, "formats, tiles, idempotent ingest, end-to-end CLI", formats_and_service},
      {9, "100k-patch throughput and parallel bit-identity", throughput},
  };
  int failed = 0;
  for (const auto& cr : criteria) {
    Checker c;
    const auto t0 = Clock::now();
    try {
      cr.body(c);
    } catch (const std::exception& e) {
      c.expect(false, std::string("exception: ") + e.what());
    }
    const double secs = seconds_since(t0);
    failed += !c.ok();
    std::cout << (c.ok() ? "PASS" : "FAIL") << "  criterion " << cr.id << ": " << cr.name
              << " (" << c.summary() << ", " << fmt(secs, 2) << " s)";
    if (!c.notes().empty()) std::cout << " [" << c.notes() << "]";
    std::cout << "\n" << std::flush;
  }
  std::cout << (failed ? "FAILED: " : "ALL PASSED: ") << (criteria.size() - failed) << "/"
            << criteria.size() << " criteria\n";
  return failed ? 1 : 0;
}
