#include <algorithm>
#include <cmath>
#include "json.hpp"

#include "tilatlas/error.hpp"
#include "tilatlas/patchprep.hpp"
#include "tilatlas/random.hpp"

namespace tilatlas {

using nlohmann::json;

Polygon normalize_polygon(std::vector<Point> points) {
  if (!points.empty() && points.front() == points.back() && points.size() > 1) {
    points.pop_back();
  }
  points.erase(std::unique(points.begin(), points.end()), points.end());
  if (points.size() < 3) {
    fail(ErrorCode::kMalformed, "polygon needs at least 3 distinct points",
         std::to_string(points.size()) + " given");
  }
  points.push_back(points.front());
  return Polygon{std::move(points)};
}

AnnotationSet parse_annotations(std::string_view json_text) {
  json doc;
  try {
    doc = json::parse(json_text);
  } catch (const json::exception& e) {
    fail(ErrorCode::kMalformed, "annotation file is not valid JSON", e.what());
  }
  AnnotationSet set;
  try {
    set.slide_id = doc.at("slide_id").get<std::string>();
    std::size_t idx = 0;
    for (const auto& region : doc.at("regions")) {
      const auto label = region.at("label").get<std::string>();
      if (label != "cancer_region") {
        fail(ErrorCode::kMalformed, "unsupported region label",
             "region " + std::to_string(idx) + ": " + label);
      }
      std::vector<Point> pts;
      for (const auto& p : region.at("points")) {
        if (!p.is_array() || p.size() != 2) {
          fail(ErrorCode::kMalformed, "point must be [x, y]",
               "region " + std::to_string(idx));
        }
        pts.push_back({p[0].get<double>(), p[1].get<double>()});
      }
      set.cancer_regions.push_back(normalize_polygon(std::move(pts)));
      ++idx;
    }
  } catch (const json::exception& e) {
    fail(ErrorCode::kMalformed, "annotation file has unexpected shape",
         e.what());
  }
  return set;
}

std::string serialize_annotations(const AnnotationSet& set) {
  json regions = json::array();
  for (const auto& poly : set.cancer_regions) {
    json pts = json::array();
    for (const auto& p : poly.points) pts.push_back({p.x, p.y});
    regions.push_back({{"label", "cancer_region"}, {"points", pts}});
  }
  return json{{"slide_id", set.slide_id}, {"regions", regions}}.dump(1) + "\n";
}

void validate_annotations(const AnnotationSet& set,
                          const GridGeometry& geometry) {
  const auto w = static_cast<double>(geometry.slide_width_px());
  const auto h = static_cast<double>(geometry.slide_height_px());
  for (std::size_t r = 0; r < set.cancer_regions.size(); ++r) {
    for (const auto& p : set.cancer_regions[r].points) {
      if (p.x < 0 || p.y < 0 || p.x > w || p.y > h) {
        fail(ErrorCode::kInvalidArgument, "annotation point outside slide",
             "region " + std::to_string(r));
      }
    }
  }
}

namespace {

double cross(const Point& o, const Point& a, const Point& b) {
  return (a.x - o.x) * (b.y - o.y) - (a.y - o.y) * (b.x - o.x);
}

bool on_segment(const Point& p, const Point& a, const Point& b) {
  return cross(a, b, p) == 0.0 && p.x >= std::min(a.x, b.x) &&
         p.x <= std::max(a.x, b.x) && p.y >= std::min(a.y, b.y) &&
         p.y <= std::max(a.y, b.y);
}

int sign(double v) { return (v > 0) - (v < 0); }

}  // namespace

bool segments_intersect(const Point& a, const Point& b, const Point& c,
                        const Point& d) {
  const int d1 = sign(cross(c, d, a));
  const int d2 = sign(cross(c, d, b));
  const int d3 = sign(cross(a, b, c));
  const int d4 = sign(cross(a, b, d));
  if (d1 * d2 < 0 && d3 * d4 < 0) return true;
  return (d1 == 0 && on_segment(a, c, d)) || (d2 == 0 && on_segment(b, c, d)) ||
         (d3 == 0 && on_segment(c, a, b)) || (d4 == 0 && on_segment(d, a, b));
}

bool point_in_polygon(const Point& p, const Polygon& poly) {
  const auto& v = poly.points;
  const std::size_t n = v.size();
  if (n < 4) return false;  // closed ring: >= 3 distinct + repeat
  for (std::size_t k = 0; k + 1 < n; ++k) {
    if (on_segment(p, v[k], v[k + 1])) return true;
  }
  bool inside = false;
  for (std::size_t k = 0; k + 1 < n; ++k) {
    const Point& a = v[k];
    const Point& b = v[k + 1];
    if ((a.y > p.y) != (b.y > p.y)) {
      const double x_at = a.x + (p.y - a.y) * (b.x - a.x) / (b.y - a.y);
      if (p.x < x_at) inside = !inside;
    }
  }
  return inside;
}

bool rect_intersects_polygon(const PixelRect& rect, const Polygon& poly) {
  const double x0 = static_cast<double>(rect.x);
  const double y0 = static_cast<double>(rect.y);
  const double x1 = x0 + static_cast<double>(rect.width);
  const double y1 = y0 + static_cast<double>(rect.height);
  const auto& v = poly.points;

  for (const auto& p : v) {
    if (p.x >= x0 && p.x <= x1 && p.y >= y0 && p.y <= y1) return true;
  }
  const Point corners[4] = {{x0, y0}, {x1, y0}, {x1, y1}, {x0, y1}};
  for (const auto& c : corners) {
    if (point_in_polygon(c, poly)) return true;
  }
  for (std::size_t k = 0; k + 1 < v.size(); ++k) {
    for (int e = 0; e < 4; ++e) {
      if (segments_intersect(v[k], v[k + 1], corners[e], corners[(e + 1) % 4])) {
        return true;
      }
    }
  }
  return false;
}

PatchLabel label_patch(const PixelRect& rect, const AnnotationSet& annotations) {
  for (const auto& poly : annotations.cancer_regions) {
    if (rect_intersects_polygon(rect, poly)) return PatchLabel::kPositive;
  }
  return PatchLabel::kNegative;
}

LabelMap label_grid(const GridGeometry& geometry,
                    const AnnotationSet& annotations) {
  std::vector<PatchLabel> labels(geometry.cell_count());
  for (std::int64_t i = 0; i < geometry.rows(); ++i) {
    for (std::int64_t j = 0; j < geometry.cols(); ++j) {
      labels[geometry.index(i, j)] =
          label_patch(geometry.patch_rect(i, j), annotations);
    }
  }
  return LabelMap(geometry, std::move(labels));
}

std::string_view to_string(Split s) {
  switch (s) {
    case Split::kTrain: return "train";
    case Split::kVal: return "val";
    case Split::kTest: return "test";
  }
  return "train";
}

Split parse_split(std::string_view s) {
  if (s == "train") return Split::kTrain;
  if (s == "val") return Split::kVal;
  if (s == "test") return Split::kTest;
  fail(ErrorCode::kMalformed, "unknown split", std::string(s));
}

std::vector<PatchLabelRecord> label_records(const GridGeometry& geometry,
                                            const AnnotationSet& annotations,
                                            Split split) {
  std::vector<PatchLabelRecord> out;
  out.reserve(geometry.cell_count());
  for (std::int64_t i = 0; i < geometry.rows(); ++i) {
    for (std::int64_t j = 0; j < geometry.cols(); ++j) {
      const auto rect = geometry.patch_rect(i, j);
      out.push_back({annotations.slide_id, i, j, rect,
                     label_patch(rect, annotations), split});
    }
  }
  return out;
}

DatasetManifest sample_training_set(std::span<const PatchLabelRecord> records,
                                    double neg_pos_ratio, std::uint64_t seed) {
  if (!(neg_pos_ratio > 0.0) || !std::isfinite(neg_pos_ratio)) {
    fail(ErrorCode::kInvalidArgument, "negative:positive ratio must be > 0");
  }
  std::vector<std::size_t> negatives;
  std::size_t positives = 0;
  for (std::size_t k = 0; k < records.size(); ++k) {
    if (records[k].label == PatchLabel::kPositive) {
      ++positives;
    } else if (records[k].label == PatchLabel::kNegative) {
      negatives.push_back(k);
    }
  }
  if (positives == 0) {
    fail(ErrorCode::kInvalidArgument, "no positive patches to sample around");
  }

  DatasetManifest m;
  m.neg_pos_ratio_target = neg_pos_ratio;
  m.seed = seed;
  const auto target = static_cast<std::size_t>(
      std::llround(neg_pos_ratio * static_cast<double>(positives)));
  std::size_t take = target;
  if (target > negatives.size()) {
    take = negatives.size();
    m.insufficient_negatives = true;
  }

  // Partial Fisher-Yates over the negative pool.
  SplitMix64 rng(seed);
  for (std::size_t k = 0; k < take; ++k) {
    const auto pick = k + rng.below(negatives.size() - k);
    std::swap(negatives[k], negatives[pick]);
  }
  std::vector<std::uint8_t> keep(records.size(), 0);
  for (std::size_t k = 0; k < take; ++k) keep[negatives[k]] = 1;

  for (std::size_t k = 0; k < records.size(); ++k) {
    const auto& rec = records[k];
    if (rec.label == PatchLabel::kPositive || keep[k]) {
      m.records.push_back(rec);
      if (std::find(m.slides.begin(), m.slides.end(), rec.slide_id) ==
          m.slides.end()) {
        m.slides.push_back(rec.slide_id);
      }
    }
  }
  m.positives = positives;
  m.negatives = take;
  return m;
}

std::string serialize_manifest(const DatasetManifest& m) {
  std::string out;
  json header = {{"type", "header"},
                 {"slides", m.slides},
                 {"patches", m.patches()},
                 {"positive", m.positives},
                 {"negative", m.negatives},
                 {"neg_pos_ratio", m.neg_pos_ratio_target},
                 {"seed", m.seed},
                 {"insufficient_negatives", m.insufficient_negatives}};
  out += header.dump();
  out += '\n';
  for (const auto& r : m.records) {
    json line = {{"slide_id", r.slide_id},
                 {"i", r.row},
                 {"j", r.col},
                 {"x", r.rect.x},
                 {"y", r.rect.y},
                 {"w", r.rect.width},
                 {"h", r.rect.height},
                 {"label", r.label == PatchLabel::kPositive ? "positive"
                                                            : "negative"},
                 {"split", to_string(r.split)}};
    out += line.dump();
    out += '\n';
  }
  return out;
}

DatasetManifest parse_manifest(std::string_view jsonl) {
  DatasetManifest m;
  std::size_t line_no = 0;
  std::size_t pos = 0;
  bool have_header = false;
  while (pos < jsonl.size()) {
    auto end = jsonl.find('\n', pos);
    if (end == std::string_view::npos) end = jsonl.size();
    const auto line = jsonl.substr(pos, end - pos);
    pos = end + 1;
    ++line_no;
    if (line.empty()) continue;
    try {
      const auto obj = json::parse(line);
      if (!have_header) {
        if (obj.value("type", "") != "header") {
          fail(ErrorCode::kMalformed, "manifest must start with a header",
               "line " + std::to_string(line_no));
        }
        m.slides = obj.at("slides").get<std::vector<std::string>>();
        m.positives = obj.at("positive").get<std::size_t>();
        m.negatives = obj.at("negative").get<std::size_t>();
        m.neg_pos_ratio_target = obj.at("neg_pos_ratio").get<double>();
        m.seed = obj.at("seed").get<std::uint64_t>();
        m.insufficient_negatives = obj.value("insufficient_negatives", false);
        have_header = true;
        continue;
      }
      PatchLabelRecord r;
      r.slide_id = obj.at("slide_id").get<std::string>();
      r.row = obj.at("i").get<std::int64_t>();
      r.col = obj.at("j").get<std::int64_t>();
      r.rect = {obj.at("x").get<std::int64_t>(), obj.at("y").get<std::int64_t>(),
                obj.at("w").get<std::int64_t>(), obj.at("h").get<std::int64_t>()};
      const auto label = obj.at("label").get<std::string>();
      if (label != "positive" && label != "negative") {
        fail(ErrorCode::kMalformed, "unknown label",
             "line " + std::to_string(line_no));
      }
      r.label = label == "positive" ? PatchLabel::kPositive : PatchLabel::kNegative;
      r.split = parse_split(obj.at("split").get<std::string>());
      m.records.push_back(std::move(r));
    } catch (const json::exception& e) {
      fail(ErrorCode::kMalformed, "bad manifest line",
           "line " + std::to_string(line_no) + ": " + e.what());
    }
  }
  if (!have_header) fail(ErrorCode::kMalformed, "empty manifest");
  std::size_t pos_count = 0;
  for (const auto& r : m.records) pos_count += r.label == PatchLabel::kPositive;
  if (pos_count != m.positives || m.records.size() - pos_count != m.negatives) {
    fail(ErrorCode::kMalformed, "manifest counts disagree with records");
  }
  return m;
}

}  // namespace tilatlas
