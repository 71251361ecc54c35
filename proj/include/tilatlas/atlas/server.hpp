#pragma once

// HTTP front end over a Catalog, plus the request-independent pieces it
// shares with the command line tool (render parameter resolution, stats).
//
// Routes (JSON unless noted):
//   GET  /slides
//   GET  /slides/{id}
//   GET  /slides/{id}/maps
//   POST /maps                               body: prediction file
//   GET  /maps
//   GET  /maps/{id}
//   GET  /maps/{id}/export                   text/tab-separated-values
//   GET  /maps/{id}/png?colormap=&threshold=&agg_w=&agg_f=
//   GET  /maps/{id}/combined/{other}/png?encoding=overlay|raw
//   GET  /maps/{id}/tiles/{z}/{x}/{y}.png    same query as /png
//   GET  /maps/{id}/stats?tumor={map}
//
// Errors are {"code", "message", "detail"} with status 400 (bad argument),
// 404, 409, 422 (malformed input or undefined result) or 500.

#include <cstdint>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "tilatlas/atlas/catalog.hpp"
#include "tilatlas/atlas/config.hpp"
#include "tilatlas/atlas/render.hpp"
#include "tilatlas/error.hpp"

namespace tilatlas {

using QueryParams = std::map<std::string, std::string>;

/// Starts from the per-kind defaults (taken from `cfg`) and applies
/// overrides: colormap=<name>, threshold=<t>|none, agg_w=<w> (1 disables
/// aggregation), agg_f=<func>.
RenderParams resolve_render_params(LabelKind kind, const AtlasConfig& cfg,
                                   const QueryParams& query);

int http_status(ErrorCode code);
std::string error_json(const Error& e);

/// Lymphocyte labels at cfg.til_threshold; tumor labels after
/// cfg.aggregation and cfg.cancer_threshold; tissue is the coverage union.
std::string stats_json(const ProbabilityMap& til, const ProbabilityMap& tumor,
                       const AtlasConfig& cfg);

/// Orders a pair of maps as (til, tumor) regardless of argument order.
/// Fails unless exactly one of them is a TIL map.
std::pair<MapRecord, MapRecord> order_til_tumor(const MapRecord& a, const MapRecord& b);

struct ServerOptions {
  AtlasConfig config;
  unsigned render_threads = 1;
  std::size_t pyramid_cache_entries = 32;
};

class AtlasServer {
 public:
  AtlasServer(Catalog& catalog, ServerOptions options = {});
  ~AtlasServer();
  AtlasServer(const AtlasServer&) = delete;
  AtlasServer& operator=(const AtlasServer&) = delete;

  /// Returns the bound port (an ephemeral one when `port` is 0), or -1.
  int bind(const std::string& host, int port);
  /// Blocks until stop().
  bool run();
  void stop();
  void wait_until_ready() const;

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

}  // namespace tilatlas
