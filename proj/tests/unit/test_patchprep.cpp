#include <cmath>
#include <set>

#include "doctest.h"
#include "oracles.hpp"
#include "tilatlas/error.hpp"
#include "tilatlas/patchprep.hpp"

using namespace tilatlas;

namespace {

Polygon square(double x0, double y0, double x1, double y1) {
  return normalize_polygon({{x0, y0}, {x1, y0}, {x1, y1}, {x0, y1}});
}

AnnotationSet with_regions(std::vector<Polygon> polys) {
  AnnotationSet a;
  a.slide_id = "s";
  a.cancer_regions = std::move(polys);
  return a;
}

std::vector<PatchLabelRecord> synthetic_records(std::size_t pos, std::size_t neg) {
  std::vector<PatchLabelRecord> out;
  const std::size_t n = pos + neg;
  std::vector<bool> positive(n, false);
  for (std::size_t k = 0; k < pos; ++k) positive[k * n / pos] = true;
  for (std::size_t k = 0; k < n; ++k) {
    PatchLabelRecord r;
    r.slide_id = "s";
    r.row = static_cast<std::int64_t>(k / 50);
    r.col = static_cast<std::int64_t>(k % 50);
    r.rect = {r.col * 10, r.row * 10, 10, 10};
    // Interleave positives so order preservation is visible.
    r.label = positive[k] ? PatchLabel::kPositive : PatchLabel::kNegative;
    out.push_back(r);
  }
  return out;
}

std::size_t count(const std::vector<PatchLabelRecord>& rs, PatchLabel l) {
  std::size_t c = 0;
  for (const auto& r : rs) c += r.label == l;
  return c;
}

RgbImage noise_patch(std::uint64_t seed, int w = 24, int h = 24) {
  SplitMix64 rng(seed);
  RgbImage img(w, h);
  for (auto& b : img.data) b = static_cast<std::uint8_t>(rng.below(256));
  return img;
}

}  // namespace

TEST_SUITE("patchprep") {

TEST_CASE("label_patch: containment, disjoint and boundary touch") {
  const auto ann = with_regions({square(100, 100, 200, 200)});
  CHECK(label_patch({120, 120, 10, 10}, ann) == PatchLabel::kPositive);
  CHECK(label_patch({300, 300, 10, 10}, ann) == PatchLabel::kNegative);
  CHECK(label_patch({200, 200, 10, 10}, ann) == PatchLabel::kPositive);  // corner point
  CHECK(label_patch({90, 150, 10, 10}, ann) == PatchLabel::kPositive);   // shared edge
  CHECK(label_patch({89, 150, 10, 10}, ann) == PatchLabel::kNegative);
  // Polygon strictly inside the patch.
  CHECK(label_patch({0, 0, 1000, 1000}, ann) == PatchLabel::kPositive);
  // Segment crossing without any vertex inside either shape.
  const auto thin = with_regions({normalize_polygon({{0, 15}, {100, 15}, {100, 16}})});
  CHECK(label_patch({40, 0, 10, 40}, thin) == PatchLabel::kPositive);
}

TEST_CASE("label_patch agrees with a separating-axis oracle on random convex polygons") {
  SplitMix64 rng(99);
  for (int trial = 0; trial < 1000; ++trial) {
    const double cx = 50 + rng.uniform() * 400, cy = 50 + rng.uniform() * 400;
    const double rad = 10 + rng.uniform() * 120;
    const int k = 3 + static_cast<int>(rng.below(6));
    std::vector<double> angles;
    for (int v = 0; v < k; ++v) angles.push_back(rng.uniform() * 2 * std::numbers::pi);
    std::sort(angles.begin(), angles.end());
    std::vector<Point> pts;
    for (double a : angles) {
      pts.push_back({std::round(cx + rad * std::cos(a)), std::round(cy + rad * std::sin(a))});
    }
    pts.erase(std::unique(pts.begin(), pts.end(),
                          [](const Point& a, const Point& b) { return a.x == b.x && a.y == b.y; }),
              pts.end());
    if (pts.size() < 3) continue;
    Polygon poly;
    try {
      poly = normalize_polygon(pts);
    } catch (const Error&) {
      continue;
    }
    const PixelRect r{static_cast<std::int64_t>(rng.below(500)),
                      static_cast<std::int64_t>(rng.below(500)),
                      1 + static_cast<std::int64_t>(rng.below(80)),
                      1 + static_cast<std::int64_t>(rng.below(80))};
    Polygon open = poly;
    if (open.points.size() > 1 && open.points.front().x == open.points.back().x &&
        open.points.front().y == open.points.back().y) {
      open.points.pop_back();
    }
    CHECK(rect_intersects_polygon(r, poly) == oracle::rect_meets_convex_polygon(r, open));
  }
}

TEST_CASE("annotation files parse, validate and round trip") {
  const std::string text =
      R"({"slide_id":"s1","regions":[{"label":"cancer_region","points":[[0,0],[10,0],[10,10]]}]})";
  const auto ann = parse_annotations(text);
  CHECK(ann.slide_id == "s1");
  REQUIRE(ann.cancer_regions.size() == 1);
  CHECK(ann.cancer_regions[0].points.size() == 4);  // closed
  CHECK(parse_annotations(serialize_annotations(ann)).cancer_regions[0].points.size() == 4);
  validate_annotations(ann, grid_from_slide(20, 20, 10));
  CHECK_THROWS_AS(validate_annotations(ann, grid_from_slide(5, 5, 5)), Error);
  CHECK_THROWS_AS(parse_annotations("{"), Error);
  CHECK_THROWS_AS(parse_annotations(R"({"slide_id":"s","regions":[{"label":"stroma","points":[]}]})"),
                  Error);
  CHECK_THROWS_AS(normalize_polygon({{0, 0}, {1, 1}}), Error);
}

TEST_CASE("label_grid marks intersecting patches") {
  const auto g = grid_from_slide(40, 40, 10);
  const auto labels = label_grid(g, with_regions({square(12, 12, 18, 28)}));
  CHECK(labels.count(PatchLabel::kPositive) == 2);
  CHECK(labels.at(1, 1) == PatchLabel::kPositive);
  CHECK(labels.at(2, 1) == PatchLabel::kPositive);
}

TEST_CASE("sampling keeps positives and hits the ratio") {
  const auto recs = synthetic_records(100, 1000);
  const auto m = sample_training_set(recs, 2.0, 7);
  CHECK(m.positives == 100);
  CHECK(m.negatives == 200);
  CHECK(count(m.records, PatchLabel::kPositive) == 100);
  CHECK(count(m.records, PatchLabel::kNegative) == 200);
  CHECK_FALSE(m.insufficient_negatives);
  // Row-major order preserved.
  for (std::size_t k = 1; k < m.records.size(); ++k) {
    const auto& a = m.records[k - 1];
    const auto& b = m.records[k];
    CHECK((a.row < b.row || (a.row == b.row && a.col < b.col)));
  }
}

TEST_CASE("sampling at the reference training ratio") {
  const double ratio = 233715.0 / 99889.0;
  CHECK(ratio == doctest::Approx(2.34).epsilon(0.001));
  const auto recs = synthetic_records(300, 900);
  const auto m = sample_training_set(recs, ratio, 1);
  CHECK(std::abs(static_cast<double>(m.negatives) - ratio * 300) <= 1.0);
}

TEST_CASE("sampling with too few negatives keeps them all and flags it") {
  const auto recs = synthetic_records(100, 50);
  const auto m = sample_training_set(recs, 2.0, 3);
  CHECK(m.negatives == 50);
  CHECK(m.insufficient_negatives);
  CHECK_THROWS_AS(sample_training_set(synthetic_records(0, 10), 1.0, 1), Error);
  CHECK_THROWS_AS(sample_training_set(recs, 0.0, 1), Error);
}

TEST_CASE("sampling is reproducible and seeds only change negatives") {
  const auto recs = synthetic_records(40, 600);
  const auto a = serialize_manifest(sample_training_set(recs, 3.0, 11));
  const auto b = serialize_manifest(sample_training_set(recs, 3.0, 11));
  CHECK(a == b);
  const auto m1 = sample_training_set(recs, 3.0, 11);
  const auto m2 = sample_training_set(recs, 3.0, 12);
  std::set<std::pair<std::int64_t, std::int64_t>> p1, p2, n1, n2;
  for (const auto& r : m1.records) (r.label == PatchLabel::kPositive ? p1 : n1).insert({r.row, r.col});
  for (const auto& r : m2.records) (r.label == PatchLabel::kPositive ? p2 : n2).insert({r.row, r.col});
  CHECK(p1 == p2);
  CHECK(n1 != n2);
}

TEST_CASE("manifest round trip and validation") {
  const auto m = sample_training_set(synthetic_records(10, 100), 1.5, 4);
  const auto text = serialize_manifest(m);
  const auto back = parse_manifest(text);
  CHECK(back.records == m.records);
  CHECK(back.positives == m.positives);
  CHECK(back.negatives == m.negatives);
  CHECK(back.seed == 4);
  CHECK(serialize_manifest(back) == text);
  CHECK_THROWS_AS(parse_manifest(""), Error);
  CHECK_THROWS_AS(parse_manifest(text.substr(text.find('\n') + 1)), Error);
}

TEST_CASE("channel normalization") {
  FloatImage two{2, 1, {0, 5, 5, 2, 5, 5}};
  const auto n = normalize_channels(two);
  CHECK(n.data[0] == doctest::Approx(-1.0));
  CHECK(n.data[3] == doctest::Approx(1.0));
  CHECK(n.data[1] == 0.0);
  CHECK(n.data[4] == 0.0);

  const auto patch = noise_patch(5);
  const auto z = normalize_channels(patch);
  for (int c = 0; c < 3; ++c) {
    double s = 0, ss = 0;
    const std::size_t px = z.data.size() / 3;
    for (std::size_t k = 0; k < px; ++k) s += z.data[3 * k + c];
    const double mean = s / px;
    for (std::size_t k = 0; k < px; ++k) ss += (z.data[3 * k + c] - mean) * (z.data[3 * k + c] - mean);
    CHECK(std::abs(mean) < 1e-6);
    CHECK(std::abs(std::sqrt(ss / px) - 1.0) < 1e-6);
  }
  const auto again = normalize_channels(z);
  for (std::size_t k = 0; k < z.data.size(); ++k) CHECK(again.data[k] == doctest::Approx(z.data[k]));
}

TEST_CASE("identity transform is a byte-identical no-op") {
  const auto patch = noise_patch(9);
  for (std::uint64_t d = 0; d < 20; ++d) {
    CHECK(augment(patch, TransformConfig::identity(), d) == patch);
  }
}

TEST_CASE("double horizontal flip is the identity") {
  const auto patch = noise_patch(10, 17, 9);
  AugmentParams flip;
  flip.hflip = true;
  CHECK(apply_augment(apply_augment(patch, flip), flip) == patch);
  CHECK(apply_augment(patch, flip) != patch);
  AugmentParams vflip;
  vflip.vflip = true;
  CHECK(apply_augment(apply_augment(patch, vflip), vflip) == patch);
}

TEST_CASE("drawn rotation angles stay in range and draws are deterministic") {
  TransformConfig cfg;
  cfg.seed = 42;
  double lo = 1e9, hi = -1e9;
  for (std::uint64_t d = 0; d < 10000; ++d) {
    const auto p = draw_augment_params(cfg, d);
    lo = std::min(lo, p.angle_deg);
    hi = std::max(hi, p.angle_deg);
    CHECK(p.brightness_factor >= 0.9);
    CHECK(p.brightness_factor <= 1.1);
  }
  CHECK(lo >= 0.0);
  CHECK(hi <= 22.5);
  CHECK(hi > 22.0);
  const auto patch = noise_patch(12);
  CHECK(augment(patch, cfg, 17) == augment(patch, cfg, 17));
  CHECK(augment(patch, cfg, 17).width == patch.width);
  TransformConfig bad;
  bad.hflip_prob = 1.5;
  CHECK_THROWS_AS(bad.validate(), Error);
}

TEST_CASE("rotation keeps size and a uniform patch stays uniform") {
  RgbImage flat(15, 11);
  for (std::size_t k = 0; k < flat.data.size(); k += 3) {
    flat.data[k] = 10;
    flat.data[k + 1] = 200;
    flat.data[k + 2] = 77;
  }
  const auto r = rotate_reflect(flat, 13.0);
  CHECK(r == flat);
}

TEST_CASE("baseline TIL score") {
  RgbImage white(10, 10);
  std::fill(white.data.begin(), white.data.end(), 255);
  CHECK(baseline_til_score(white) < 0.1);
  RgbImage purple(10, 10);
  for (std::size_t k = 0; k < purple.data.size(); k += 3) {
    purple.data[k] = 60;
    purple.data[k + 1] = 30;
    purple.data[k + 2] = 130;
  }
  CHECK(dark_purple_fraction(purple) == 1.0);
  CHECK(baseline_til_score(purple) > 0.9);
  RgbImage mixed = white;
  double prev = baseline_til_score(mixed);
  for (int k = 0; k < 100; ++k) {
    std::copy_n(purple.data.begin(), 3, mixed.data.begin() + 3 * k);
    const double s = baseline_til_score(mixed);
    CHECK(s >= prev);
    CHECK(s > 0.0);
    CHECK(s < 1.0);
    prev = s;
  }
}

TEST_CASE("slide scoring covers tissue patches only") {
  RgbImage slide(40, 20);
  std::fill(slide.data.begin(), slide.data.end(), 250);
  for (int y = 0; y < 10; ++y) {
    for (int x = 20; x < 30; ++x) {
      auto* p = slide.pixel(x, y);
      p[0] = 60;
      p[1] = 30;
      p[2] = 130;
    }
  }
  const auto g = grid_from_slide(40, 20, 10);
  const auto recs = score_slide_baseline(slide, g);
  REQUIRE(recs.size() == 1);
  CHECK(recs[0].x == 20);
  CHECK(recs[0].y == 0);
  CHECK(recs[0].prob > 0.9);
}

}  // TEST_SUITE
