// tilmap: command line front end for map ingestion, post-processing,
// evaluation, concordance statistics, patch preparation and the HTTP server.

#include <csignal>
#include <cstdio>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"
#include "synthetic.hpp"
#include "tilatlas/atlas/catalog.hpp"
#include "tilatlas/atlas/config.hpp"
#include "tilatlas/atlas/prediction_file.hpp"
#include "tilatlas/atlas/render.hpp"
#include "tilatlas/atlas/server.hpp"
#include "tilatlas/concord.hpp"
#include "tilatlas/error.hpp"
#include "tilatlas/eval.hpp"
#include "tilatlas/image.hpp"
#include "tilatlas/patchprep.hpp"

#ifndef TILATLAS_DATA_DIR
#define TILATLAS_DATA_DIR "data"
#endif

namespace fs = std::filesystem;
using nlohmann::json;
using namespace tilatlas;

namespace {

struct Globals {
  std::uint64_t seed = 0;
  std::string config_path;
  std::string data_dir = "atlas-data";
  unsigned threads = 1;

  AtlasConfig config() const {
    return config_path.empty() ? AtlasConfig{} : load_config(config_path);
  }
};

struct Source {
  ProbabilityMap map;
  PredictionHeader header;
  std::optional<std::string> map_id;
};

// A source is a prediction file on disk or, failing that, a catalog map id.
Source load_source(const std::string& ref, const Globals& g) {
  Source s;
  if (fs::is_regular_file(ref)) {
    s.map = load_prediction_map(read_file_text(ref), &s.header);
    return s;
  }
  Catalog catalog(g.data_dir);
  s.map = load_prediction_map(catalog.export_map(ref), &s.header);
  s.map_id = ref;
  return s;
}

void emit(const std::string& text, const std::string& out_path) {
  if (out_path.empty() || out_path == "-") {
    std::cout << text;
    if (!text.empty() && text.back() != '\n') std::cout << '\n';
  } else {
    write_file(out_path, text);
  }
}

void write_png(const std::string& path, const std::vector<std::uint8_t>& png) {
  if (path.empty()) fail(ErrorCode::kInvalidArgument, "an output path (-o) is required");
  write_file(path, png);
}

std::string aggregation_suffix(const AggregationConfig& agg) {
  return "+agg:w=" + std::to_string(agg.window) + ",f=" + std::string(to_string(agg.func));
}

struct RenderOpts {
  std::string colormap;
  std::string threshold;
  int agg_w = 0;
  std::string agg_f;

  QueryParams query() const {
    QueryParams q;
    if (!colormap.empty()) q["colormap"] = colormap;
    if (!threshold.empty()) q["threshold"] = threshold;
    if (agg_w > 0) q["agg_w"] = std::to_string(agg_w);
    if (!agg_f.empty()) q["agg_f"] = agg_f;
    return q;
  }

  void add_to(CLI::App* cmd) {
    cmd->add_option("--colormap", colormap, "grayscale, heat or paper");
    cmd->add_option("--threshold", threshold, "Threshold in [0,1] or 'none'");
    cmd->add_option("--agg-w", agg_w, "Aggregation window (1 disables)");
    cmd->add_option("--agg-f", agg_f, "Aggregation function: max, median, average");
  }
};

// Truth labels for a prediction map from an annotation file on its grid.
LabelMap truth_for(const ProbabilityMap& map, const std::string& annotations_path) {
  const auto ann = parse_annotations(read_file_text(annotations_path));
  validate_annotations(ann, map.geometry());
  return label_grid(map.geometry(), ann);
}

TissueMask coverage_mask(const ProbabilityMap& map) {
  std::vector<std::uint8_t> cells(map.coverage().begin(), map.coverage().end());
  return TissueMask(map.geometry(), std::move(cells));
}

std::size_t rater_index(const RatingTable& t, const std::string& name) {
  for (std::size_t k = 0; k < t.raters.size(); ++k) {
    if (t.raters[k] == name || "rater_" + t.raters[k] == name) return k;
  }
  fail(ErrorCode::kNotFound, "unknown rater", name);
}

std::size_t model_index(const RatingTable& t, const std::string& name) {
  for (std::size_t k = 0; k < t.models.size(); ++k) {
    if (t.models[k] == name) return k;
  }
  fail(ErrorCode::kNotFound, "unknown model column", name);
}

int exit_code(ErrorCode code) {
  switch (code) {
    case ErrorCode::kInvalidArgument:
    case ErrorCode::kMalformed: return 2;
    case ErrorCode::kNotFound: return 3;
    case ErrorCode::kConflict: return 4;
    case ErrorCode::kUndefined: return 5;
    case ErrorCode::kIo: return 1;
  }
  return 1;
}

AtlasServer* g_server = nullptr;

void on_signal(int) {
  if (g_server) g_server->stop();
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Tumor and TIL probability map toolkit"};
  app.require_subcommand(1);
  Globals g;
  app.add_option("--seed", g.seed, "Seed for every randomized step");
  app.add_option("--config", g.config_path, "key=value configuration file")
      ->check(CLI::ExistingFile);
  app.add_option("--data-dir", g.data_dir, "Catalog directory");
  app.add_option("--threads", g.threads, "Worker threads")->check(CLI::Range(1u, 256u));

  // ingest
  std::vector<std::string> ingest_files;
  auto* ingest = app.add_subcommand("ingest", "Add prediction files to the catalog");
  ingest->add_option("files", ingest_files)->required()->check(CLI::ExistingFile);
  ingest->callback([&] {
    Catalog catalog(g.data_dir);
    for (const auto& f : ingest_files) {
      const auto r = catalog.ingest(read_file_text(f));
      for (const auto& w : r.warnings) std::cerr << "warning: " << f << ": " << w << '\n';
      json j = json::parse(map_record_to_json(r.record));
      j["created"] = r.created;
      std::cout << j.dump() << '\n';
    }
  });

  // export
  std::string export_id, export_out;
  auto* exp = app.add_subcommand("export", "Write a catalog map as a prediction file");
  exp->add_option("map_id", export_id)->required();
  exp->add_option("-o,--output", export_out);
  exp->callback([&] { emit(Catalog(g.data_dir).export_map(export_id), export_out); });

  // aggregate
  std::string agg_src, agg_out, agg_func;
  int agg_window = 0;
  auto* agg = app.add_subcommand("aggregate", "Block-aggregate a map");
  agg->add_option("source", agg_src, "Prediction file or map id")->required();
  agg->add_option("--window,-w", agg_window, "Block width (default from config)");
  agg->add_option("--func,-f", agg_func, "max, median or average");
  agg->add_option("-o,--output", agg_out, "Write the aggregated prediction file");
  agg->callback([&] {
    auto cfg = g.config().aggregation;
    if (agg_window > 0) cfg.window = agg_window;
    if (!agg_func.empty()) cfg.func = parse_aggregation_func(agg_func);
    cfg.validate();
    auto src = load_source(agg_src, g);
    const auto out = aggregate(src.map, cfg, g.threads);
    if (src.map_id) {
      Catalog catalog(g.data_dir);
      std::cout << map_record_to_json(catalog.store_derived(out, *src.map_id, cfg).record)
                << '\n';
      if (!agg_out.empty()) {
        auto header = src.header;
        header.model_id += aggregation_suffix(cfg);
        write_file(agg_out, serialize_prediction_file(header, out));
      }
      return;
    }
    src.header.model_id += aggregation_suffix(cfg);
    emit(serialize_prediction_file(src.header, out), agg_out);
  });

  // render
  std::string render_src, render_out;
  RenderOpts render_opts;
  auto* render = app.add_subcommand("render", "Render a map to a PNG, one pixel per patch");
  render->add_option("source", render_src, "Prediction file or map id")->required();
  render->add_option("-o,--output", render_out)->required();
  render_opts.add_to(render);
  render->callback([&] {
    const auto src = load_source(render_src, g);
    const auto params =
        resolve_render_params(src.map.label_kind(), g.config(), render_opts.query());
    write_png(render_out, encode_png(render_heatmap(src.map, params, g.threads)));
  });

  // combine
  std::string comb_til, comb_tumor, comb_out, comb_overlay, comb_slide;
  auto* comb = app.add_subcommand("combine", "Fuse TIL and tumor maps into one RGB map");
  comb->add_option("--til", comb_til, "TIL prediction file or map id")->required();
  comb->add_option("--tumor", comb_tumor, "Cancer prediction file or map id")->required();
  comb->add_option("-o,--output", comb_out, "Lossless combined PNG")->required();
  comb->add_option("--overlay", comb_overlay, "Also write the red/yellow/grey overlay");
  comb->add_option("--slide", comb_slide, "Slide raster for the tissue mask")
      ->check(CLI::ExistingFile);
  comb->callback([&] {
    const auto cfg = g.config();
    const auto til = load_source(comb_til, g);
    const auto tumor = load_source(comb_tumor, g);
    if (til.map.label_kind() != LabelKind::kTil || tumor.map.label_kind() != LabelKind::kCancer) {
      fail(ErrorCode::kInvalidArgument, "--til needs a til map and --tumor a cancer map");
    }
    std::optional<TissueMask> mask;
    if (!comb_slide.empty()) {
      const auto raster = read_png_rgb(comb_slide);
      const auto stats = patch_stats_from_raster(raster, til.map.geometry(), cfg.tissue);
      mask = tissue_mask_from_patch_stats(stats, til.map.geometry(), cfg.tissue).mask;
    } else {
      mask = coverage_tissue_mask(til.map, tumor.map);
    }
    const auto cm = combine(til.map, tumor.map, *mask);
    write_png(comb_out, encode_png(combined_to_image(cm)));
    if (!comb_overlay.empty()) {
      OverlayParams p;
      p.til_threshold = cfg.til_threshold;
      p.cancer_threshold = cfg.cancer_threshold;
      p.cancer_aggregation = cfg.aggregation;
      write_png(comb_overlay, encode_png(render_overlay(til.map, tumor.map, *mask, p)));
    }
    std::cout << json{{"rows", cm.geometry().rows()},
                      {"cols", cm.geometry().cols()},
                      {"tissue_patch_count", mask->tissue_count()}}
                     .dump()
              << '\n';
  });

  // eval
  auto* eval = app.add_subcommand("eval", "Patch-level evaluation against annotations");
  eval->require_subcommand(1);
  std::vector<std::string> sweep_pred, sweep_truth;
  std::string sweep_out;
  int eval_agg_w = 0;
  std::string eval_agg_f;
  bool eval_all_cells = false;
  auto add_eval_common = [&](CLI::App* cmd) {
    cmd->add_option("--agg-w", eval_agg_w, "Aggregation window (1 disables)");
    cmd->add_option("--agg-f", eval_agg_f, "Aggregation function");
    cmd->add_flag("--all-cells", eval_all_cells,
                  "Evaluate every cell instead of covered (tissue) cells");
  };
  auto eval_map = [&](const ProbabilityMap& map) {
    QueryParams q;
    if (eval_agg_w > 0) q["agg_w"] = std::to_string(eval_agg_w);
    if (!eval_agg_f.empty()) q["agg_f"] = eval_agg_f;
    const auto p = resolve_render_params(map.label_kind(), g.config(), q);
    return p.aggregation ? aggregate(map, *p.aggregation, g.threads) : map;
  };
  auto* sweep = eval->add_subcommand("sweep", "Mean F1 over thresholds 0.00..1.00");
  sweep->add_option("--pred", sweep_pred, "Prediction files or map ids")->required();
  sweep->add_option("--truth", sweep_truth, "Annotation files, one per --pred")->required();
  sweep->add_option("-o,--output", sweep_out, "CSV output");
  add_eval_common(sweep);
  sweep->callback([&] {
    if (sweep_pred.size() != sweep_truth.size()) {
      fail(ErrorCode::kInvalidArgument, "--pred and --truth counts differ");
    }
    std::vector<SweepImage> images;
    for (std::size_t k = 0; k < sweep_pred.size(); ++k) {
      const auto src = load_source(sweep_pred[k], g);
      auto map = eval_map(src.map);
      auto truth = truth_for(map, sweep_truth[k]);
      std::optional<TissueMask> mask;
      if (!eval_all_cells) mask = coverage_mask(src.map);
      images.push_back({std::move(map), std::move(truth), std::move(mask), sweep_pred[k]});
    }
    const auto r = threshold_sweep(images, g.threads);
    emit(sweep_to_csv(r), sweep_out);
    json best = {{"best_threshold", r.best_threshold},
                 {"best_mean_f1", r.best_mean_f1 ? json(*r.best_mean_f1) : json(nullptr)}};
    std::cerr << best.dump() << '\n';
  });

  std::string conf_pred, conf_truth, conf_out;
  std::optional<double> conf_threshold;
  auto* conf = eval->add_subcommand("confusion", "Confusion counts, metrics, AUC and a map");
  conf->add_option("--pred", conf_pred)->required();
  conf->add_option("--truth", conf_truth, "Annotation file")->required();
  conf->add_option("--threshold", conf_threshold, "Default from config per label kind");
  conf->add_option("-o,--output", conf_out, "Confusion PNG (TP green, FN red, FP yellow, TN blue)");
  add_eval_common(conf);
  conf->callback([&] {
    const auto cfg = g.config();
    const auto src = load_source(conf_pred, g);
    const auto map = eval_map(src.map);
    const auto truth = truth_for(map, conf_truth);
    double t = map.label_kind() == LabelKind::kCancer ? cfg.cancer_threshold : cfg.til_threshold;
    if (conf_threshold) t = *conf_threshold;
    const auto pred = threshold(map, t);
    std::optional<TissueMask> mask;
    if (!eval_all_cells) mask = coverage_mask(src.map);
    const TissueMask* region = mask ? &*mask : nullptr;
    const auto counts = confusion(pred, truth, region);
    json j = json::parse(metrics_to_json(metrics(counts)));
    j["threshold"] = t;
    std::vector<double> scores;
    std::vector<std::uint8_t> labels;
    for (std::size_t k = 0; k < map.geometry().cell_count(); ++k) {
      if (region && !region->cells()[k]) continue;
      if (truth.labels()[k] == PatchLabel::kUncovered) continue;
      scores.push_back(map.coverage()[k] ? map.values()[k] : 0.0);
      labels.push_back(truth.labels()[k] == PatchLabel::kPositive ? 1 : 0);
    }
    try {
      j["auc"] = auc(scores, labels);
    } catch (const Error&) {
      j["auc"] = nullptr;
    }
    if (!conf_out.empty()) write_png(conf_out, encode_png(render_confusion(pred, truth, region)));
    std::cout << j.dump() << '\n';
  });

  // stats
  std::string stats_til, stats_tumor;
  auto* stats = app.add_subcommand("stats", "TIL-in-tumor statistics for a map pair");
  stats->add_option("--til", stats_til)->required();
  stats->add_option("--tumor", stats_tumor)->required();
  stats->callback([&] {
    const auto til = load_source(stats_til, g);
    const auto tumor = load_source(stats_tumor, g);
    std::cout << stats_json(til.map, tumor.map, g.config()) << '\n';
  });

  // concord
  auto* concord = app.add_subcommand("concord", "Super-patch scores and concordance");
  concord->require_subcommand(1);
  int n_resamples = 2000;
  auto bootstrap_cfg = [&] {
    BootstrapConfig b;
    b.n_resamples = n_resamples;
    b.seed = g.seed;
    b.threads = g.threads;
    return b;
  };
  std::string pc_csv, pc_a, pc_b;
  auto* pc = concord->add_subcommand("polychoric", "Correlation between two raters");
  pc->add_option("ratings", pc_csv)->required()->check(CLI::ExistingFile);
  pc->add_option("--a", pc_a)->required();
  pc->add_option("--b", pc_b)->required();
  pc->add_option("--resamples", n_resamples);
  pc->callback([&] {
    const auto table = parse_rating_csv(read_file_text(pc_csv));
    const auto ia = rater_index(table, pc_a), ib = rater_index(table, pc_b);
    std::vector<int> a, b;
    for (std::size_t r = 0; r < table.rows(); ++r) {
      if (table.ratings[ia][r] && table.ratings[ib][r]) {
        a.push_back(*table.ratings[ia][r]);
        b.push_back(*table.ratings[ib][r]);
      }
    }
    std::cout << estimate_to_json(polychoric_with_ci(a, b, bootstrap_cfg())) << '\n';
  });

  std::string ps_csv, ps_rater, ps_model;
  auto* ps = concord->add_subcommand("polyserial", "Correlation between a rater and a model");
  ps->add_option("ratings", ps_csv)->required()->check(CLI::ExistingFile);
  ps->add_option("--rater", ps_rater, "Rater name or 'median'")->required();
  ps->add_option("--model", ps_model)->required();
  ps->add_option("--resamples", n_resamples);
  ps->callback([&] {
    const auto table = parse_rating_csv(read_file_text(ps_csv));
    const auto levels = ps_rater == "median" ? table.median_ratings()
                                             : table.ratings[rater_index(table, ps_rater)];
    const auto& counts = table.counts[model_index(table, ps_model)];
    std::vector<double> x;
    std::vector<int> y;
    for (std::size_t r = 0; r < table.rows(); ++r) {
      if (levels[r] && counts[r]) {
        x.push_back(*counts[r]);
        y.push_back(*levels[r]);
      }
    }
    std::cout << estimate_to_json(polyserial_with_ci(x, y, bootstrap_cfg())) << '\n';
  });

  std::string sp_src, sp_out;
  std::optional<double> sp_threshold;
  auto* sp = concord->add_subcommand("superpatch", "TIL-positive counts per 8x8 block");
  sp->add_option("source", sp_src, "TIL prediction file or map id")->required();
  sp->add_option("--threshold", sp_threshold, "Default from config");
  sp->add_option("-o,--output", sp_out, "CSV output");
  sp->callback([&] {
    const auto src = load_source(sp_src, g);
    const double t = sp_threshold.value_or(g.config().til_threshold);
    std::string csv = "block_row,block_col,machine_count,cells\n";
    for (const auto& s : super_patch_scores(threshold(src.map, t))) {
      csv += std::to_string(s.block_row) + "," + std::to_string(s.block_col) + "," +
             std::to_string(s.machine_count) + "," + std::to_string(s.cells) + "\n";
    }
    emit(csv, sp_out);
  });

  std::string rep_csv;
  auto* rep = concord->add_subcommand("report", "Rater and model concordance table");
  rep->add_option("ratings", rep_csv)->required()->check(CLI::ExistingFile);
  rep->add_option("--resamples", n_resamples);
  rep->callback([&] {
    const auto table = parse_rating_csv(read_file_text(rep_csv));
    std::cout << concordance_report_json(table, bootstrap_cfg()) << '\n';
  });

  // patchprep
  auto* prep = app.add_subcommand("patchprep", "Training patch labels and transforms");
  prep->require_subcommand(1);
  std::string lab_ann, lab_out, lab_split = "train";
  std::int64_t lab_w = 0, lab_h = 0, lab_patch = 0;
  auto* lab = prep->add_subcommand("label", "Label every grid patch from annotations");
  lab->add_option("--annotations", lab_ann)->required()->check(CLI::ExistingFile);
  lab->add_option("--width", lab_w, "Slide width in base pixels")->required();
  lab->add_option("--height", lab_h, "Slide height in base pixels")->required();
  lab->add_option("--patch-size", lab_patch)->required();
  lab->add_option("--split", lab_split, "train, val or test");
  lab->add_option("-o,--output", lab_out, "Manifest (JSONL)");
  lab->callback([&] {
    const auto ann = parse_annotations(read_file_text(lab_ann));
    const auto geometry = grid_from_slide(lab_w, lab_h, lab_patch);
    validate_annotations(ann, geometry);
    DatasetManifest m;
    m.slides = {ann.slide_id};
    m.records = label_records(geometry, ann, parse_split(lab_split));
    for (const auto& r : m.records) {
      (r.label == PatchLabel::kPositive ? m.positives : m.negatives)++;
    }
    m.seed = g.seed;
    emit(serialize_manifest(m), lab_out);
  });

  std::string samp_in, samp_out;
  double samp_ratio = 1.0;
  auto* samp = prep->add_subcommand("sample", "Keep all positives, subsample negatives");
  samp->add_option("manifest", samp_in)->required()->check(CLI::ExistingFile);
  samp->add_option("--ratio", samp_ratio, "Negatives per positive");
  samp->add_option("-o,--output", samp_out);
  samp->callback([&] {
    const auto m = parse_manifest(read_file_text(samp_in));
    const auto out = sample_training_set(m.records, samp_ratio, g.seed);
    if (out.insufficient_negatives) std::cerr << "warning: fewer negatives than requested\n";
    emit(serialize_manifest(out), samp_out);
  });

  std::string tr_in, tr_out;
  std::uint64_t tr_draw = 0;
  bool tr_identity = false;
  auto* tr = prep->add_subcommand("transform", "Seeded augmentation of a patch image");
  tr->add_option("input", tr_in)->required()->check(CLI::ExistingFile);
  tr->add_option("-o,--output", tr_out)->required();
  tr->add_option("--draw", tr_draw, "Draw index; each index gets its own parameters");
  tr->add_flag("--identity", tr_identity, "Disable every transform");
  tr->callback([&] {
    auto cfg = tr_identity ? TransformConfig::identity() : TransformConfig{};
    cfg.seed = g.seed;
    cfg.validate();
    const auto patch = read_png_rgb(tr_in);
    const auto p = draw_augment_params(cfg, tr_draw);
    write_png(tr_out, encode_png(apply_augment(patch, p)));
    std::cout << json{{"angle_deg", p.angle_deg},
                      {"hflip", p.hflip},
                      {"vflip", p.vflip},
                      {"brightness", p.brightness_factor},
                      {"contrast", p.contrast_factor},
                      {"saturation", p.saturation_factor}}
                     .dump()
              << '\n';
  });

  std::string sc_slide, sc_out, sc_id, sc_model = "baseline-dark-purple";
  std::int64_t sc_patch = tilmap::kSyntheticPatchSize;
  auto* sc = prep->add_subcommand("score", "Baseline TIL scores for every tissue patch");
  sc->add_option("slide", sc_slide, "Slide raster (PNG)")->required()->check(CLI::ExistingFile);
  sc->add_option("--slide-id", sc_id)->required();
  sc->add_option("--patch-size", sc_patch);
  sc->add_option("--model-id", sc_model);
  sc->add_option("-o,--output", sc_out, "Prediction file");
  sc->callback([&] {
    const auto raster = read_png_rgb(sc_slide);
    const auto geometry = grid_from_slide(raster.width, raster.height, sc_patch);
    const auto records = score_slide_baseline(raster, geometry, g.config().tissue);
    PredictionHeader h;
    h.slide_id = sc_id;
    h.patch_size_px = sc_patch;
    h.base_width = raster.width;
    h.base_height = raster.height;
    h.label_kind = LabelKind::kTil;
    h.model_id = sc_model;
    emit(serialize_prediction_file(
             h, map_from_predictions(records, geometry, LabelKind::kTil, sc_model)),
         sc_out);
  });

  // synth
  std::string syn_dir, syn_ann = std::string(TILATLAS_DATA_DIR) + "/synthetic_annotations.json";
  int syn_size = tilmap::kSyntheticSlideSize;
  auto* syn = app.add_subcommand("synth", "Generate the synthetic demo slide");
  syn->add_option("-o,--output-dir", syn_dir)->required();
  syn->add_option("--annotations", syn_ann)->check(CLI::ExistingFile);
  syn->add_option("--size", syn_size, "Slide width and height")->check(CLI::Range(100, 20000));
  syn->callback([&] {
    fs::create_directories(syn_dir);
    const auto ann = parse_annotations(read_file_text(syn_ann));
    const auto slide = tilmap::synthesize_slide(ann, syn_size, syn_size, g.seed);
    write_file(fs::path(syn_dir) / "slide.png", encode_png(slide));
    write_file(fs::path(syn_dir) / "annotations.json", serialize_annotations(ann));
    write_file(fs::path(syn_dir) / "cancer.tsv",
               tilmap::synthesize_cancer_predictions(slide, ann, tilmap::kSyntheticPatchSize,
                                                     g.seed, g.config().tissue));
    std::cout << json{{"slide", (fs::path(syn_dir) / "slide.png").string()},
                      {"slide_id", ann.slide_id},
                      {"width", slide.width},
                      {"height", slide.height},
                      {"patch_size_px", tilmap::kSyntheticPatchSize}}
                     .dump()
              << '\n';
  });

  // serve
  int port = 8080;
  std::string host = "127.0.0.1";
  auto* serve = app.add_subcommand("serve", "Run the HTTP API");
  serve->add_option("--port", port)->check(CLI::Range(0, 65535));
  serve->add_option("--host", host);
  serve->callback([&] {
    Catalog catalog(g.data_dir);
    ServerOptions opts;
    opts.config = g.config();
    opts.render_threads = g.threads;
    AtlasServer server(catalog, opts);
    const int bound = server.bind(host, port);
    if (bound < 0) fail(ErrorCode::kIo, "cannot bind", host + ":" + std::to_string(port));
    g_server = &server;
    std::signal(SIGINT, on_signal);
    std::signal(SIGTERM, on_signal);
    std::cout << "listening on http://" << host << ":" << bound << std::endl;
    server.run();
    g_server = nullptr;
  });

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e);
  } catch (const Error& e) {
    std::cerr << "error: " << e.what();
    if (!e.detail().empty()) std::cerr << " (" << e.detail() << ")";
    std::cerr << '\n';
    return exit_code(e.code());
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
