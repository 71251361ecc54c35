#pragma once

// key = value configuration with optional [section] headers. Keys inside a
// section are addressed as "section.key".
//
//   [aggregation]
//   window = 4
//   func = max
//   [tissue]
//   white_level = 220
//   max_white_fraction = 0.90
//   [render]
//   cancer_threshold = 0.6
//   til_threshold = 0.5
//   colormap = heat

#include <filesystem>
#include <string_view>

#include "tilatlas/atlas/render.hpp"
#include "tilatlas/gridmap.hpp"

namespace tilatlas {

struct AtlasConfig {
  AggregationConfig aggregation = kDefaultAggregation;
  TissueConfig tissue;
  double cancer_threshold = kDefaultCancerThreshold;
  double til_threshold = kDefaultTilThreshold;
  Colormap colormap = Colormap::kHeat;
};

/// Unknown keys and unparsable values are errors (with the line number).
AtlasConfig parse_config(std::string_view text);
AtlasConfig load_config(const std::filesystem::path& path);

}  // namespace tilatlas
