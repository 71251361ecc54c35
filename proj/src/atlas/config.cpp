#include "tilatlas/atlas/config.hpp"

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>
#include <sstream>

#include "tilatlas/error.hpp"
#include "tilatlas/image.hpp"

namespace tilatlas {

namespace pt = boost::property_tree;

namespace {

template <typename T>
T get_value(const pt::ptree& node, const std::string& key) {
  try {
    return node.get_value<T>();
  } catch (const pt::ptree_bad_data&) {
    fail(ErrorCode::kInvalidArgument, "bad config value",
         key + " = '" + node.data() + "'");
  }
}

}  // namespace

AtlasConfig parse_config(std::string_view text) {
  pt::ptree tree;
  std::istringstream in{std::string(text)};
  try {
    pt::read_ini(in, tree);
  } catch (const pt::ini_parser_error& e) {
    fail(ErrorCode::kMalformed, "cannot parse config",
         "line " + std::to_string(e.line()) + ": " + e.message());
  }

  AtlasConfig cfg;
  auto visit = [&](const std::string& key, const pt::ptree& node) {
    if (key == "aggregation.window") {
      cfg.aggregation.window = get_value<int>(node, key);
    } else if (key == "aggregation.func") {
      cfg.aggregation.func = parse_aggregation_func(node.data());
    } else if (key == "tissue.white_level") {
      cfg.tissue.white_level = get_value<int>(node, key);
    } else if (key == "tissue.max_white_fraction") {
      cfg.tissue.max_white_fraction = get_value<double>(node, key);
    } else if (key == "render.cancer_threshold") {
      cfg.cancer_threshold = get_value<double>(node, key);
    } else if (key == "render.til_threshold") {
      cfg.til_threshold = get_value<double>(node, key);
    } else if (key == "render.colormap") {
      cfg.colormap = parse_colormap(node.data());
    } else {
      fail(ErrorCode::kInvalidArgument, "unknown config key", key);
    }
  };
  for (const auto& [name, node] : tree) {
    if (node.empty()) {
      fail(ErrorCode::kInvalidArgument, "config keys must live in a section", name);
    }
    for (const auto& [key, leaf] : node) visit(name + "." + key, leaf);
  }

  cfg.aggregation.validate();
  if (cfg.tissue.white_level < 0 || cfg.tissue.white_level > 255) {
    fail(ErrorCode::kInvalidArgument, "tissue.white_level outside [0,255]");
  }
  for (double v : {cfg.tissue.max_white_fraction, cfg.cancer_threshold, cfg.til_threshold}) {
    if (!(v >= 0.0 && v <= 1.0)) {
      fail(ErrorCode::kInvalidArgument, "config fraction/threshold outside [0,1]");
    }
  }
  return cfg;
}

AtlasConfig load_config(const std::filesystem::path& path) {
  return parse_config(read_file_text(path));
}

}  // namespace tilatlas
