#pragma once

// Prediction exchange format.
//
//   line 1: JSON header {"base_height":..,"base_width":..,"format_version":1,
//           "label_kind":"cancer|til","model_id":..,"patch_size_px":..,
//           "slide_id":..}
//   then:   x<TAB>y<TAB>prob   (top-left corner in base px, prob with at
//           most 6 fractional digits)
//
// UTF-8, LF line endings. The canonical form written by
// `serialize_prediction_file` has compact sorted-key JSON, rows in row-major
// grid order and probabilities with trailing zeros trimmed.

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include "tilatlas/gridmap.hpp"

namespace tilatlas {

inline constexpr int kPredictionFormatVersion = 1;

struct PredictionHeader {
  int format_version = kPredictionFormatVersion;
  std::string slide_id;
  std::int64_t patch_size_px = 0;
  std::int64_t base_width = 0;
  std::int64_t base_height = 0;
  LabelKind label_kind = LabelKind::kCancer;
  std::string model_id;

  GridGeometry geometry() const {
    return GridGeometry::from_slide(base_width, base_height, patch_size_px);
  }
  bool operator==(const PredictionHeader&) const = default;
};

struct PredictionFile {
  PredictionHeader header;
  std::vector<PredictionRecord> records;
};

/// Errors carry "line N" in their detail.
PredictionFile parse_prediction_file(std::string_view text);

/// Parses and places the records on the header's grid.
ProbabilityMap load_prediction_map(std::string_view text,
                                   PredictionHeader* header_out = nullptr);

/// Shortest decimal with at most 6 fractional digits: 0.5, 1, 0.123457.
std::string format_probability(double p);

std::string serialize_header(const PredictionHeader& h);
std::string serialize_prediction_file(const PredictionHeader& header,
                                      const ProbabilityMap& map);
std::string serialize_prediction_file(const PredictionFile& file);

}  // namespace tilatlas
