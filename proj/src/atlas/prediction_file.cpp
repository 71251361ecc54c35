#include "tilatlas/atlas/prediction_file.hpp"

#include <charconv>
#include <cmath>
#include <cstdio>

#include "json.hpp"
#include "tilatlas/error.hpp"

namespace tilatlas {

namespace {

std::string at_line(std::size_t line) { return "line " + std::to_string(line); }

std::int64_t parse_coordinate(std::string_view s, std::size_t line) {
  std::int64_t v = 0;
  const auto* end = s.data() + s.size();
  const auto res = std::from_chars(s.data(), end, v);
  if (s.empty() || res.ec != std::errc() || res.ptr != end || v < 0 ||
      s.front() == '+' || s.front() == '-') {
    fail(ErrorCode::kMalformed, "coordinate must be a non-negative integer",
         at_line(line) + ": '" + std::string(s) + "'");
  }
  return v;
}

double parse_probability(std::string_view s, std::size_t line) {
  // [01](\.\d{1,6})?
  bool ok = !s.empty() && (s[0] == '0' || s[0] == '1');
  if (ok && s.size() > 1) {
    ok = s[1] == '.' && s.size() >= 3 && s.size() <= 8;
    for (std::size_t k = 2; ok && k < s.size(); ++k) {
      ok = s[k] >= '0' && s[k] <= '9';
    }
  }
  double v = 0.0;
  if (ok) {
    const auto res = std::from_chars(s.data(), s.data() + s.size(), v);
    ok = res.ec == std::errc() && res.ptr == s.data() + s.size();
  }
  if (!ok || v > 1.0) {
    fail(ErrorCode::kMalformed,
         "probability must be a decimal in [0,1] with at most 6 fractional digits",
         at_line(line) + ": '" + std::string(s) + "'");
  }
  return v;
}

PredictionHeader parse_header(std::string_view line) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(line);
  } catch (const nlohmann::json::exception& e) {
    fail(ErrorCode::kMalformed, "header is not valid JSON",
         at_line(1) + ": " + e.what());
  }
  PredictionHeader h;
  try {
    h.format_version = j.at("format_version").get<int>();
    h.slide_id = j.at("slide_id").get<std::string>();
    h.patch_size_px = j.at("patch_size_px").get<std::int64_t>();
    h.base_width = j.at("base_width").get<std::int64_t>();
    h.base_height = j.at("base_height").get<std::int64_t>();
    h.label_kind = parse_label_kind(j.at("label_kind").get<std::string>());
    h.model_id = j.at("model_id").get<std::string>();
  } catch (const nlohmann::json::exception& e) {
    fail(ErrorCode::kMalformed, "header is missing a field", at_line(1) + ": " + e.what());
  } catch (const Error& e) {
    fail(ErrorCode::kMalformed, e.what(), at_line(1));
  }
  if (h.format_version != kPredictionFormatVersion) {
    fail(ErrorCode::kMalformed, "unsupported format_version",
         at_line(1) + ": " + std::to_string(h.format_version));
  }
  if (h.slide_id.empty()) fail(ErrorCode::kMalformed, "empty slide_id", at_line(1));
  if (h.patch_size_px <= 0 || h.base_width <= 0 || h.base_height <= 0) {
    fail(ErrorCode::kMalformed, "header dimensions must be positive", at_line(1));
  }
  return h;
}

}  // namespace

PredictionFile parse_prediction_file(std::string_view text) {
  PredictionFile file;
  std::size_t pos = 0;
  std::size_t line_no = 0;
  bool have_header = false;
  while (pos < text.size()) {
    auto end = text.find('\n', pos);
    if (end == std::string_view::npos) end = text.size();
    const auto line = text.substr(pos, end - pos);
    pos = end + 1;
    ++line_no;
    if (line.find('\r') != std::string_view::npos) {
      fail(ErrorCode::kMalformed, "CR characters are not allowed; use LF line endings",
           at_line(line_no));
    }
    if (!have_header) {
      file.header = parse_header(line);
      have_header = true;
      continue;
    }
    const auto t1 = line.find('\t');
    const auto t2 = t1 == std::string_view::npos ? t1 : line.find('\t', t1 + 1);
    if (t1 == std::string_view::npos || t2 == std::string_view::npos ||
        line.find('\t', t2 + 1) != std::string_view::npos) {
      fail(ErrorCode::kMalformed, "expected x<TAB>y<TAB>prob", at_line(line_no));
    }
    PredictionRecord rec;
    rec.x = parse_coordinate(line.substr(0, t1), line_no);
    rec.y = parse_coordinate(line.substr(t1 + 1, t2 - t1 - 1), line_no);
    rec.prob = parse_probability(line.substr(t2 + 1), line_no);
    const auto& h = file.header;
    if (rec.x >= h.base_width || rec.y >= h.base_height) {
      fail(ErrorCode::kMalformed, "coordinate outside slide bounds", at_line(line_no));
    }
    if (rec.x % h.patch_size_px != 0 || rec.y % h.patch_size_px != 0) {
      fail(ErrorCode::kMalformed,
           "coordinate not aligned to patch size " + std::to_string(h.patch_size_px),
           at_line(line_no));
    }
    file.records.push_back(rec);
  }
  if (!have_header) fail(ErrorCode::kMalformed, "empty prediction file", at_line(1));
  return file;
}

ProbabilityMap load_prediction_map(std::string_view text,
                                   PredictionHeader* header_out) {
  auto file = parse_prediction_file(text);
  const auto geometry = file.header.geometry();
  // Duplicates are the only placement error left after parsing; report the
  // offending line.
  std::vector<std::int64_t> first_line(geometry.cell_count(), 0);
  for (std::size_t k = 0; k < file.records.size(); ++k) {
    const auto& r = file.records[k];
    const auto idx = geometry.index(r.y / geometry.patch_size_px(),
                                    r.x / geometry.patch_size_px());
    if (first_line[idx] != 0) {
      fail(ErrorCode::kMalformed, "duplicate prediction for a patch",
           at_line(k + 2) + " repeats " + at_line(static_cast<std::size_t>(first_line[idx])));
    }
    first_line[idx] = static_cast<std::int64_t>(k + 2);
  }
  auto map = map_from_predictions(file.records, geometry, file.header.label_kind,
                                  file.header.model_id);
  if (header_out) *header_out = file.header;
  return map;
}

std::string format_probability(double p) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.6f", p);
  std::string s(buf);
  while (s.back() == '0') s.pop_back();
  if (s.back() == '.') s.pop_back();
  return s;
}

std::string serialize_header(const PredictionHeader& h) {
  nlohmann::json j = {{"format_version", h.format_version},
                      {"slide_id", h.slide_id},
                      {"patch_size_px", h.patch_size_px},
                      {"base_width", h.base_width},
                      {"base_height", h.base_height},
                      {"label_kind", to_string(h.label_kind)},
                      {"model_id", h.model_id}};
  return j.dump();
}

std::string serialize_prediction_file(const PredictionHeader& header,
                                      const ProbabilityMap& map) {
  require_same_geometry(header.geometry(), map.geometry(), "prediction export");
  std::string out = serialize_header(header);
  out += '\n';
  const auto& g = map.geometry();
  const auto patch = g.patch_size_px();
  for (std::int64_t i = 0; i < g.rows(); ++i) {
    for (std::int64_t j = 0; j < g.cols(); ++j) {
      if (!map.covered(i, j)) continue;
      out += std::to_string(j * patch);
      out += '\t';
      out += std::to_string(i * patch);
      out += '\t';
      out += format_probability(map.value(i, j));
      out += '\n';
    }
  }
  return out;
}

std::string serialize_prediction_file(const PredictionFile& file) {
  const auto map = map_from_predictions(file.records, file.header.geometry(),
                                        file.header.label_kind, file.header.model_id);
  return serialize_prediction_file(file.header, map);
}

}  // namespace tilatlas
