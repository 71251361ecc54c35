#pragma once

// On-disk catalog of slides and probability maps.
//
// Layout under the data directory:
//   index.json          slides and map records (rewritten atomically)
//   maps/<sha256>.tsv   canonical prediction files, content addressed
//
// Reads take a shared lock; register/ingest take the exclusive lock, write
// the blob first and publish the index last, so readers never see a map
// whose blob is incomplete.

#include <cstdint>
#include <filesystem>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <shared_mutex>
#include <string>
#include <string_view>
#include <vector>

#include "tilatlas/atlas/prediction_file.hpp"
#include "tilatlas/gridmap.hpp"

namespace tilatlas {

struct SlideManifest {
  std::string slide_id;
  std::int64_t width = 0;
  std::int64_t height = 0;
  std::vector<std::int64_t> patch_sizes;
  std::string thumbnail;  // optional path to a low-resolution raster
  int pyramid_levels = 0;  // derived from width/height
  int tile_size = 256;

  bool operator==(const SlideManifest&) const = default;
};

/// Fills the derived pyramid descriptor (levels halve with ceil until one
/// tile).
SlideManifest make_slide_manifest(std::string slide_id, std::int64_t width,
                                  std::int64_t height,
                                  std::vector<std::int64_t> patch_sizes = {},
                                  std::string thumbnail = {});

struct MapRecord {
  std::string map_id;
  std::string slide_id;
  LabelKind label_kind = LabelKind::kCancer;
  std::string provenance;  // model id
  std::string storage_path;  // relative to the data directory
  std::string created;       // UTC, ISO-8601
  std::optional<AggregationConfig> aggregation;
  std::optional<std::string> source_map;  // for derived maps
  std::int64_t patch_size_px = 0;
  std::size_t covered = 0;
  std::size_t cells = 0;
};

struct IngestResult {
  MapRecord record;
  bool created = false;
  std::vector<std::string> warnings;
};

std::string slide_to_json(const SlideManifest& s);
std::string map_record_to_json(const MapRecord& r);

std::string sha256_hex(std::string_view bytes);

class Catalog {
 public:
  explicit Catalog(std::filesystem::path data_dir);

  const std::filesystem::path& data_dir() const { return dir_; }

  /// Idempotent for an identical manifest; conflict otherwise.
  SlideManifest register_slide(const SlideManifest& slide);
  std::vector<SlideManifest> list_slides() const;
  SlideManifest get_slide(const std::string& slide_id) const;

  /// Parses a prediction file, auto-registers its slide from the header
  /// dimensions and stores the canonical form. Re-ingesting the same
  /// content returns the existing record.
  IngestResult ingest(std::string_view prediction_file_text);

  /// Stores a map computed from `source_map_id` (e.g. aggregated).
  IngestResult store_derived(const ProbabilityMap& map,
                             const std::string& source_map_id,
                             const std::optional<AggregationConfig>& aggregation);

  std::vector<MapRecord> list_maps(const std::optional<std::string>& slide_id = {}) const;
  MapRecord get_map(const std::string& map_id) const;
  std::shared_ptr<const ProbabilityMap> load_map(const std::string& map_id) const;
  /// Canonical prediction file text.
  std::string export_map(const std::string& map_id) const;

 private:
  IngestResult store_locked(const PredictionHeader& header, const ProbabilityMap& map,
                            const std::optional<AggregationConfig>& aggregation,
                            const std::optional<std::string>& source_map);
  void load_index();
  void save_index_locked() const;

  std::filesystem::path dir_;
  mutable std::shared_mutex mutex_;
  std::map<std::string, SlideManifest> slides_;
  std::map<std::string, MapRecord> maps_;
  mutable std::mutex cache_mutex_;
  mutable std::map<std::string, std::shared_ptr<const ProbabilityMap>> cache_;
};

}  // namespace tilatlas
