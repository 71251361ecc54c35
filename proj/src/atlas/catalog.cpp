#include "tilatlas/atlas/catalog.hpp"

#include <openssl/evp.h>

#include <chrono>
#include <ctime>
#include <fstream>

#include "json.hpp"
#include "tilatlas/atlas/render.hpp"
#include "tilatlas/error.hpp"
#include "tilatlas/image.hpp"

namespace tilatlas {

using nlohmann::json;
namespace fs = std::filesystem;

std::string sha256_hex(std::string_view bytes) {
  unsigned char digest[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  if (!EVP_Digest(bytes.data(), bytes.size(), digest, &len, EVP_sha256(), nullptr)) {
    fail(ErrorCode::kIo, "sha256 failed");
  }
  static constexpr char kHex[] = "0123456789abcdef";
  std::string out;
  out.reserve(2 * len);
  for (unsigned int k = 0; k < len; ++k) {
    out += kHex[digest[k] >> 4];
    out += kHex[digest[k] & 15];
  }
  return out;
}

SlideManifest make_slide_manifest(std::string slide_id, std::int64_t width,
                                  std::int64_t height,
                                  std::vector<std::int64_t> patch_sizes,
                                  std::string thumbnail) {
  if (slide_id.empty()) fail(ErrorCode::kInvalidArgument, "empty slide_id");
  if (width <= 0 || height <= 0) {
    fail(ErrorCode::kInvalidArgument, "slide dimensions must be positive");
  }
  SlideManifest s;
  s.slide_id = std::move(slide_id);
  s.width = width;
  s.height = height;
  std::sort(patch_sizes.begin(), patch_sizes.end());
  patch_sizes.erase(std::unique(patch_sizes.begin(), patch_sizes.end()), patch_sizes.end());
  s.patch_sizes = std::move(patch_sizes);
  s.thumbnail = std::move(thumbnail);
  s.tile_size = kTileSize;
  // Levels of the base-resolution pyramid, each halving with ceil.
  int levels = 1;
  for (std::int64_t w = width, h = height; w > s.tile_size || h > s.tile_size; ++levels) {
    w = (w + 1) / 2;
    h = (h + 1) / 2;
  }
  s.pyramid_levels = levels;
  return s;
}

namespace {

json slide_json(const SlideManifest& s) {
  return {{"slide_id", s.slide_id},
          {"width", s.width},
          {"height", s.height},
          {"patch_sizes", s.patch_sizes},
          {"thumbnail", s.thumbnail},
          {"pyramid", {{"levels", s.pyramid_levels}, {"tile_size", s.tile_size}}}};
}

SlideManifest slide_from_json(const json& j) {
  return make_slide_manifest(j.at("slide_id").get<std::string>(),
                             j.at("width").get<std::int64_t>(),
                             j.at("height").get<std::int64_t>(),
                             j.at("patch_sizes").get<std::vector<std::int64_t>>(),
                             j.value("thumbnail", ""));
}

json map_json(const MapRecord& r) {
  json j = {{"map_id", r.map_id},
            {"slide_id", r.slide_id},
            {"label_kind", to_string(r.label_kind)},
            {"provenance", r.provenance},
            {"storage_path", r.storage_path},
            {"created", r.created},
            {"patch_size_px", r.patch_size_px},
            {"covered", r.covered},
            {"cells", r.cells}};
  j["aggregation"] = r.aggregation
                         ? json{{"window", r.aggregation->window},
                                {"func", to_string(r.aggregation->func)}}
                         : json(nullptr);
  j["source_map"] = r.source_map ? json(*r.source_map) : json(nullptr);
  return j;
}

MapRecord map_from_json(const json& j) {
  MapRecord r;
  r.map_id = j.at("map_id").get<std::string>();
  r.slide_id = j.at("slide_id").get<std::string>();
  r.label_kind = parse_label_kind(j.at("label_kind").get<std::string>());
  r.provenance = j.at("provenance").get<std::string>();
  r.storage_path = j.at("storage_path").get<std::string>();
  r.created = j.at("created").get<std::string>();
  r.patch_size_px = j.at("patch_size_px").get<std::int64_t>();
  r.covered = j.at("covered").get<std::size_t>();
  r.cells = j.at("cells").get<std::size_t>();
  if (!j.at("aggregation").is_null()) {
    r.aggregation = AggregationConfig{
        j["aggregation"].at("window").get<int>(),
        parse_aggregation_func(j["aggregation"].at("func").get<std::string>())};
  }
  if (j.contains("source_map") && !j["source_map"].is_null()) {
    r.source_map = j["source_map"].get<std::string>();
  }
  return r;
}

std::string utc_now() {
  const auto now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&now, &tm);
  char buf[32];
  std::strftime(buf, sizeof(buf), "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

void write_atomically(const fs::path& path, std::string_view bytes) {
  auto tmp = path;
  tmp += ".tmp";
  write_file(tmp, bytes);
  fs::rename(tmp, path);
}

}  // namespace

std::string slide_to_json(const SlideManifest& s) { return slide_json(s).dump(); }
std::string map_record_to_json(const MapRecord& r) { return map_json(r).dump(); }

Catalog::Catalog(fs::path data_dir) : dir_(std::move(data_dir)) {
  std::error_code ec;
  fs::create_directories(dir_ / "maps", ec);
  if (ec) fail(ErrorCode::kIo, "cannot create data directory", dir_.string());
  load_index();
}

void Catalog::load_index() {
  const auto path = dir_ / "index.json";
  if (!fs::exists(path)) return;
  try {
    const auto j = json::parse(read_file_text(path));
    for (const auto& s : j.at("slides")) {
      auto slide = slide_from_json(s);
      slides_.emplace(slide.slide_id, std::move(slide));
    }
    for (const auto& m : j.at("maps")) {
      auto rec = map_from_json(m);
      maps_.emplace(rec.map_id, std::move(rec));
    }
  } catch (const json::exception& e) {
    fail(ErrorCode::kMalformed, "catalog index is corrupt", e.what());
  }
}

void Catalog::save_index_locked() const {
  json slides = json::array();
  for (const auto& [id, s] : slides_) slides.push_back(slide_json(s));
  json maps = json::array();
  for (const auto& [id, m] : maps_) maps.push_back(map_json(m));
  write_atomically(dir_ / "index.json",
                   json{{"slides", slides}, {"maps", maps}}.dump(1) + "\n");
}

SlideManifest Catalog::register_slide(const SlideManifest& slide) {
  const auto normalized = make_slide_manifest(slide.slide_id, slide.width, slide.height,
                                              slide.patch_sizes, slide.thumbnail);
  std::unique_lock lock(mutex_);
  if (auto it = slides_.find(normalized.slide_id); it != slides_.end()) {
    if (it->second == normalized) return it->second;
    fail(ErrorCode::kConflict, "slide already registered with a different manifest",
         normalized.slide_id);
  }
  slides_.emplace(normalized.slide_id, normalized);
  save_index_locked();
  return normalized;
}

std::vector<SlideManifest> Catalog::list_slides() const {
  std::shared_lock lock(mutex_);
  std::vector<SlideManifest> out;
  for (const auto& [id, s] : slides_) out.push_back(s);
  return out;
}

SlideManifest Catalog::get_slide(const std::string& slide_id) const {
  std::shared_lock lock(mutex_);
  const auto it = slides_.find(slide_id);
  if (it == slides_.end()) fail(ErrorCode::kNotFound, "unknown slide", slide_id);
  return it->second;
}

IngestResult Catalog::ingest(std::string_view prediction_file_text) {
  PredictionHeader header;
  const auto map = load_prediction_map(prediction_file_text, &header);
  return store_locked(header, map, std::nullopt, std::nullopt);
}

IngestResult Catalog::store_derived(const ProbabilityMap& map,
                                    const std::string& source_map_id,
                                    const std::optional<AggregationConfig>& aggregation) {
  const auto source = get_map(source_map_id);
  const auto slide = get_slide(source.slide_id);
  PredictionHeader header;
  header.slide_id = source.slide_id;
  header.patch_size_px = map.geometry().patch_size_px();
  header.base_width = slide.width;
  header.base_height = slide.height;
  header.label_kind = map.label_kind();
  header.model_id = source.provenance;
  if (aggregation) {
    header.model_id += "+agg:w=" + std::to_string(aggregation->window) +
                       ",f=" + std::string(to_string(aggregation->func));
  }
  return store_locked(header, map, aggregation, source_map_id);
}

IngestResult Catalog::store_locked(const PredictionHeader& header,
                                   const ProbabilityMap& map,
                                   const std::optional<AggregationConfig>& aggregation,
                                   const std::optional<std::string>& source_map) {
  const auto canonical = serialize_prediction_file(header, map);
  const auto digest = sha256_hex(canonical);
  const std::string map_id = "m" + digest.substr(0, 16);

  IngestResult result;
  if (map.covered_count() == 0) result.warnings.push_back("map has zero coverage");

  std::unique_lock lock(mutex_);
  if (auto it = maps_.find(map_id); it != maps_.end()) {
    result.record = it->second;
    result.created = false;
    return result;
  }
  auto slide_it = slides_.find(header.slide_id);
  SlideManifest slide;
  if (slide_it != slides_.end()) {
    slide = slide_it->second;
    if (slide.width != header.base_width || slide.height != header.base_height) {
      fail(ErrorCode::kConflict, "slide dimensions conflict with registered slide",
           header.slide_id + ": registered " + std::to_string(slide.width) + "x" +
               std::to_string(slide.height) + ", file " +
               std::to_string(header.base_width) + "x" +
               std::to_string(header.base_height));
    }
  }
  auto sizes = slide.patch_sizes;
  sizes.push_back(header.patch_size_px);
  slide = make_slide_manifest(header.slide_id, header.base_width, header.base_height,
                              std::move(sizes), slide.thumbnail);

  const std::string rel = "maps/" + digest + ".tsv";
  write_atomically(dir_ / rel, canonical);

  MapRecord rec;
  rec.map_id = map_id;
  rec.slide_id = header.slide_id;
  rec.label_kind = header.label_kind;
  rec.provenance = header.model_id;
  rec.storage_path = rel;
  rec.created = utc_now();
  rec.aggregation = aggregation;
  rec.source_map = source_map;
  rec.patch_size_px = header.patch_size_px;
  rec.covered = map.covered_count();
  rec.cells = map.geometry().cell_count();

  slides_[slide.slide_id] = slide;
  maps_.emplace(map_id, rec);
  save_index_locked();

  result.record = rec;
  result.created = true;
  return result;
}

std::vector<MapRecord> Catalog::list_maps(const std::optional<std::string>& slide_id) const {
  std::shared_lock lock(mutex_);
  std::vector<MapRecord> out;
  for (const auto& [id, m] : maps_) {
    if (!slide_id || m.slide_id == *slide_id) out.push_back(m);
  }
  return out;
}

MapRecord Catalog::get_map(const std::string& map_id) const {
  std::shared_lock lock(mutex_);
  const auto it = maps_.find(map_id);
  if (it == maps_.end()) fail(ErrorCode::kNotFound, "unknown map", map_id);
  return it->second;
}

std::string Catalog::export_map(const std::string& map_id) const {
  const auto rec = get_map(map_id);
  return read_file_text(dir_ / rec.storage_path);
}

std::shared_ptr<const ProbabilityMap> Catalog::load_map(const std::string& map_id) const {
  {
    std::lock_guard lock(cache_mutex_);
    if (auto it = cache_.find(map_id); it != cache_.end()) return it->second;
  }
  const auto text = export_map(map_id);
  auto map = std::make_shared<const ProbabilityMap>(load_prediction_map(text));
  std::lock_guard lock(cache_mutex_);
  return cache_.try_emplace(map_id, std::move(map)).first->second;
}

}  // namespace tilatlas
