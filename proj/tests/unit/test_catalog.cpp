#include <algorithm>
#include <atomic>
#include <fstream>
#include <functional>
#include <thread>

#include "doctest.h"
#include "json.hpp"
#include "oracles.hpp"
#include "tilatlas/atlas/catalog.hpp"
#include "tilatlas/atlas/config.hpp"
#include "tilatlas/error.hpp"

using namespace tilatlas;

namespace {

std::string prediction_text(const std::string& slide, std::int64_t w, std::int64_t h,
                            std::int64_t patch, LabelKind kind, std::uint64_t seed,
                            const std::string& model = "test-model") {
  SplitMix64 rng(seed);
  PredictionHeader ph;
  ph.slide_id = slide;
  ph.patch_size_px = patch;
  ph.base_width = w;
  ph.base_height = h;
  ph.label_kind = kind;
  ph.model_id = model;
  const auto g = ph.geometry();
  std::vector<double> v(g.cell_count());
  std::vector<std::uint8_t> c(g.cell_count());
  for (std::size_t k = 0; k < v.size(); ++k) {
    c[k] = rng.uniform() < 0.8;
    v[k] = c[k] ? static_cast<double>(rng.below(1001)) / 1000.0 : 0.0;
  }
  return serialize_prediction_file(ph, ProbabilityMap(g, v, c, kind, model));
}

ErrorCode code_of(const std::function<void()>& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.code();
  }
  FAIL("expected an error");
  return ErrorCode::kIo;
}

}  // namespace

TEST_SUITE("catalog") {

TEST_CASE("sha256 of known inputs") {
  CHECK(sha256_hex("") == "e3b0c44298fc1c149afbf4c8996fb92427ae41e4649b934ca495991b7852b855");
  CHECK(sha256_hex("abc") == "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");
}

TEST_CASE("slide manifests carry a pyramid descriptor") {
  const auto s = make_slide_manifest("s", 3500, 3500, {100, 350, 100});
  CHECK(s.patch_sizes == std::vector<std::int64_t>{100, 350});
  CHECK(s.pyramid_levels == 5);
  CHECK(s.tile_size == 256);
  CHECK(make_slide_manifest("s", 200, 100).pyramid_levels == 1);
  CHECK(code_of([] { make_slide_manifest("", 10, 10); }) == ErrorCode::kInvalidArgument);
  CHECK(code_of([] { make_slide_manifest("x", 0, 10); }) == ErrorCode::kInvalidArgument);
  const auto j = nlohmann::json::parse(slide_to_json(s));
  CHECK(j["slide_id"] == "s");
  CHECK(j["pyramid"]["levels"] == 5);
}

TEST_CASE("register, list and get slides") {
  oracle::TempDir dir("catalog");
  Catalog cat(dir.path());
  const auto s = make_slide_manifest("b", 1000, 800, {100});
  cat.register_slide(s);
  cat.register_slide(make_slide_manifest("a", 10, 10));
  const auto list = cat.list_slides();
  REQUIRE(list.size() == 2);
  CHECK(list[0].slide_id == "a");
  CHECK(list[1].slide_id == "b");
  CHECK(cat.get_slide("b") == s);
  CHECK(cat.register_slide(s) == s);
  CHECK(cat.list_slides().size() == 2);
  CHECK(code_of([&] { cat.register_slide(make_slide_manifest("b", 1000, 801)); }) ==
        ErrorCode::kConflict);
  CHECK(code_of([&] { cat.get_slide("nope"); }) == ErrorCode::kNotFound);
  CHECK(code_of([&] { cat.get_map("nope"); }) == ErrorCode::kNotFound);
}

TEST_CASE("ingest is idempotent and export is byte-identical") {
  oracle::TempDir dir("catalog");
  Catalog cat(dir.path());
  const auto text = prediction_text("s1", 1234, 987, 100, LabelKind::kTil, 1);
  const auto first = cat.ingest(text);
  CHECK(first.created);
  CHECK(first.warnings.empty());
  CHECK(first.record.map_id.size() == 17);
  CHECK(first.record.map_id[0] == 'm');
  CHECK(first.record.map_id.substr(1) == sha256_hex(text).substr(0, 16));
  CHECK(first.record.cells == 13 * 10);
  CHECK(cat.export_map(first.record.map_id) == text);
  CHECK(std::filesystem::exists(dir.path() / first.record.storage_path));

  const auto again = cat.ingest(text);
  CHECK_FALSE(again.created);
  CHECK(again.record.map_id == first.record.map_id);
  CHECK(again.record.created == first.record.created);
  CHECK(cat.list_maps().size() == 1);

  const auto slide = cat.get_slide("s1");
  CHECK(slide.width == 1234);
  CHECK(slide.patch_sizes == std::vector<std::int64_t>{100});

  const auto map = cat.load_map(first.record.map_id);
  CHECK(map->label_kind() == LabelKind::kTil);
  CHECK(map->covered_count() == first.record.covered);
}

TEST_CASE("ingest conflicts and warnings") {
  oracle::TempDir dir("catalog");
  Catalog cat(dir.path());
  cat.ingest(prediction_text("s", 700, 350, 350, LabelKind::kCancer, 2));
  CHECK(code_of([&] {
          cat.ingest(prediction_text("s", 700, 351, 350, LabelKind::kCancer, 2));
        }) == ErrorCode::kConflict);
  // Same slide, different patch size: accepted, slide gains the size.
  cat.ingest(prediction_text("s", 700, 350, 100, LabelKind::kTil, 3));
  CHECK(cat.get_slide("s").patch_sizes == std::vector<std::int64_t>{100, 350});

  const std::string empty =
      R"({"base_height":350,"base_width":700,"format_version":1,"label_kind":"cancer",)"
      R"("model_id":"none","patch_size_px":350,"slide_id":"s"})" "\n";
  const auto r = cat.ingest(empty);
  CHECK(r.record.covered == 0);
  REQUIRE(r.warnings.size() == 1);
  CHECK(r.warnings[0].find("zero coverage") != std::string::npos);
  CHECK(code_of([&] { cat.ingest("garbage\n"); }) == ErrorCode::kMalformed);
}

TEST_CASE("derived maps record their source and aggregation") {
  oracle::TempDir dir("catalog");
  Catalog cat(dir.path());
  const auto src = cat.ingest(prediction_text("s", 2000, 1500, 100, LabelKind::kCancer, 4));
  const auto map = cat.load_map(src.record.map_id);
  const AggregationConfig agg{4, AggregationFunc::kMax};
  const auto d = cat.store_derived(aggregate(*map, agg), src.record.map_id, agg);
  CHECK(d.created);
  CHECK(d.record.source_map == src.record.map_id);
  CHECK(d.record.provenance == "test-model+agg:w=4,f=max");
  REQUIRE(d.record.aggregation.has_value());
  CHECK(d.record.aggregation->window == 4);
  const auto stored = cat.load_map(d.record.map_id);
  const auto expected = aggregate(*map, agg);
  CHECK(std::equal(stored->values().begin(), stored->values().end(), expected.values().begin()));
  CHECK(std::equal(stored->coverage().begin(), stored->coverage().end(),
                   expected.coverage().begin()));
  CHECK(stored->provenance() == d.record.provenance);
  CHECK(cat.list_maps("s").size() == 2);
  CHECK(cat.list_maps("other").empty());
  const auto j = nlohmann::json::parse(map_record_to_json(d.record));
  CHECK(j["aggregation"]["window"] == 4);
  CHECK(j["source_map"] == src.record.map_id);
  CHECK(nlohmann::json::parse(map_record_to_json(src.record))["aggregation"].is_null());
}

TEST_CASE("catalog state persists across instances") {
  oracle::TempDir dir("catalog");
  std::string id;
  {
    Catalog cat(dir.path());
    cat.register_slide(make_slide_manifest("x", 50, 50));
    id = cat.ingest(prediction_text("y", 300, 300, 100, LabelKind::kTil, 5)).record.map_id;
  }
  Catalog reopened(dir.path());
  CHECK(reopened.list_slides().size() == 2);
  CHECK(reopened.get_map(id).slide_id == "y");
  CHECK(reopened.export_map(id) == prediction_text("y", 300, 300, 100, LabelKind::kTil, 5));

  std::ofstream(dir.path() / "index.json") << "{broken";
  CHECK(code_of([&] { Catalog broken(dir.path()); }) == ErrorCode::kMalformed);
}

TEST_CASE("concurrent ingest is visible to every later listing") {
  oracle::TempDir dir("catalog");
  Catalog cat(dir.path());
  std::atomic<int> violations{0};
  std::vector<std::thread> workers;
  for (int t = 0; t < 4; ++t) {
    workers.emplace_back([&, t] {
      for (int k = 0; k < 10; ++k) {
        const auto slide = "s" + std::to_string(t);
        const auto r = cat.ingest(prediction_text(slide, 500, 400, 100, LabelKind::kTil,
                                                  static_cast<std::uint64_t>(t * 100 + k)));
        const auto maps = cat.list_maps();
        const bool seen = std::any_of(maps.begin(), maps.end(), [&](const MapRecord& m) {
          return m.map_id == r.record.map_id;
        });
        if (!seen) ++violations;
        const auto slides = cat.list_slides();
        if (std::none_of(slides.begin(), slides.end(),
                         [&](const SlideManifest& s) { return s.slide_id == slide; })) {
          ++violations;
        }
      }
    });
  }
  for (auto& w : workers) w.join();
  CHECK(violations == 0);
  CHECK(cat.list_maps().size() == 40);
  const auto maps = cat.list_maps();
  CHECK(std::is_sorted(maps.begin(), maps.end(), [](const MapRecord& a, const MapRecord& b) {
    return a.map_id < b.map_id;
  }));
  CHECK(Catalog(dir.path()).list_maps().size() == 40);
}

}  // TEST_SUITE

TEST_SUITE("config") {

TEST_CASE("defaults") {
  const auto c = parse_config("");
  CHECK(c.aggregation.window == 4);
  CHECK(c.aggregation.func == AggregationFunc::kMax);
  CHECK(c.tissue.white_level == 220);
  CHECK(c.tissue.max_white_fraction == 0.90);
  CHECK(c.cancer_threshold == 0.6);
  CHECK(c.til_threshold == 0.5);
  CHECK(c.colormap == Colormap::kHeat);
}

TEST_CASE("sections and values") {
  const auto c = parse_config(
      "; comment\n"
      "[aggregation]\n"
      "window = 2\n"
      "func = median\n"
      "[tissue]\n"
      "white_level = 230\n"
      "max_white_fraction = 0.8\n"
      "[render]\n"
      "cancer_threshold = 0.7\n"
      "til_threshold = 0.4\n"
      "colormap = paper\n");
  CHECK(c.aggregation.window == 2);
  CHECK(c.aggregation.func == AggregationFunc::kMedian);
  CHECK(c.tissue.white_level == 230);
  CHECK(c.tissue.max_white_fraction == 0.8);
  CHECK(c.cancer_threshold == 0.7);
  CHECK(c.til_threshold == 0.4);
  CHECK(c.colormap == Colormap::kPaper);
}

TEST_CASE("bad configs are rejected") {
  CHECK(code_of([] { parse_config("[render]\nbogus = 1\n"); }) == ErrorCode::kInvalidArgument);
  CHECK(code_of([] { parse_config("window = 4\n"); }) == ErrorCode::kInvalidArgument);
  CHECK(code_of([] { parse_config("[aggregation]\nwindow = four\n"); }) ==
        ErrorCode::kInvalidArgument);
  CHECK(code_of([] { parse_config("[aggregation]\nwindow = 0\n"); }) ==
        ErrorCode::kInvalidArgument);
  CHECK(code_of([] { parse_config("[aggregation]\nfunc = mode\n"); }) ==
        ErrorCode::kInvalidArgument);
  CHECK(code_of([] { parse_config("[tissue]\nwhite_level = 300\n"); }) ==
        ErrorCode::kInvalidArgument);
  CHECK(code_of([] { parse_config("[render]\ncancer_threshold = 1.2\n"); }) ==
        ErrorCode::kInvalidArgument);
  CHECK(code_of([] { parse_config("[render\n"); }) == ErrorCode::kMalformed);
}

TEST_CASE("load from disk") {
  oracle::TempDir dir("config");
  std::ofstream(dir.path() / "atlas.ini") << "[aggregation]\nwindow = 3\n";
  CHECK(load_config(dir.path() / "atlas.ini").aggregation.window == 3);
  CHECK(code_of([&] { load_config(dir.path() / "missing.ini"); }) == ErrorCode::kIo);
}

}  // TEST_SUITE
