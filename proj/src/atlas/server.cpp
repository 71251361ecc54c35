#include "tilatlas/atlas/server.hpp"

#include <charconv>
#include <list>
#include <mutex>

#include "httplib.h"
#include "json.hpp"
#include "tilatlas/image.hpp"

namespace tilatlas {

using nlohmann::json;

namespace {

double parse_double(const std::string& s, const char* name) {
  double v = 0.0;
  const auto res = std::from_chars(s.data(), s.data() + s.size(), v);
  if (s.empty() || res.ec != std::errc() || res.ptr != s.data() + s.size()) {
    fail(ErrorCode::kInvalidArgument, std::string("bad ") + name, s);
  }
  return v;
}

int parse_int(const std::string& s, const char* name) {
  int v = 0;
  const auto res = std::from_chars(s.data(), s.data() + s.size(), v);
  if (s.empty() || res.ec != std::errc() || res.ptr != s.data() + s.size()) {
    fail(ErrorCode::kInvalidArgument, std::string("bad ") + name, s);
  }
  return v;
}

std::string params_key(const RenderParams& p) {
  std::string key(to_string(p.colormap));
  key += p.threshold ? "|t=" + format_probability(*p.threshold) : "|t=none";
  if (p.aggregation) {
    key += "|w=" + std::to_string(p.aggregation->window) + "|f=" +
           std::string(to_string(p.aggregation->func));
  }
  return key;
}

}  // namespace

RenderParams resolve_render_params(LabelKind kind, const AtlasConfig& cfg,
                                   const QueryParams& query) {
  RenderParams p;
  p.colormap = cfg.colormap;
  if (kind == LabelKind::kCancer) {
    p.aggregation = cfg.aggregation;
    p.threshold = cfg.cancer_threshold;
  }
  if (auto it = query.find("colormap"); it != query.end()) {
    p.colormap = parse_colormap(it->second);
  }
  if (auto it = query.find("threshold"); it != query.end()) {
    if (it->second == "none") {
      p.threshold.reset();
    } else {
      p.threshold = parse_double(it->second, "threshold");
      if (!(*p.threshold >= 0.0 && *p.threshold <= 1.0)) {
        fail(ErrorCode::kInvalidArgument, "threshold outside [0,1]", it->second);
      }
    }
  }
  const auto w = query.find("agg_w");
  const auto f = query.find("agg_f");
  if (w != query.end() || f != query.end()) {
    AggregationConfig agg = p.aggregation.value_or(cfg.aggregation);
    if (w != query.end()) agg.window = parse_int(w->second, "agg_w");
    if (f != query.end()) agg.func = parse_aggregation_func(f->second);
    agg.validate();
    p.aggregation = agg;
  }
  if (p.aggregation && p.aggregation->window == 1) p.aggregation.reset();
  return p;
}

int http_status(ErrorCode code) {
  switch (code) {
    case ErrorCode::kInvalidArgument: return 400;
    case ErrorCode::kNotFound: return 404;
    case ErrorCode::kConflict: return 409;
    case ErrorCode::kMalformed:
    case ErrorCode::kUndefined: return 422;
    case ErrorCode::kIo: return 500;
  }
  return 500;
}

std::string error_json(const Error& e) {
  return json{{"code", to_string(e.code())}, {"message", e.what()}, {"detail", e.detail()}}
      .dump();
}

std::string stats_json(const ProbabilityMap& til, const ProbabilityMap& tumor,
                       const AtlasConfig& cfg) {
  require_same_geometry(til.geometry(), tumor.geometry(), "stats");
  const auto til_labels = threshold(til, cfg.til_threshold);
  const auto tumor_labels = threshold(aggregate(tumor, cfg.aggregation), cfg.cancer_threshold);
  const auto r = til_in_tumor_fraction(til_labels, tumor_labels);
  const auto tissue = coverage_tissue_mask(til, tumor);
  json j;
  j["til_in_tumor_fraction"] = r.fraction ? json(*r.fraction) : json(nullptr);
  j["reason"] = r.fraction ? json(nullptr) : json("no tumor-positive patches");
  j["tumor_patch_count"] = r.tumor_cells;
  j["til_patch_count"] = r.til_cells;
  j["overlap_patch_count"] = r.overlap_cells;
  j["tissue_patch_count"] = tissue.tissue_count();
  return j.dump();
}

std::pair<MapRecord, MapRecord> order_til_tumor(const MapRecord& a, const MapRecord& b) {
  if (a.slide_id != b.slide_id) {
    fail(ErrorCode::kInvalidArgument, "maps belong to different slides",
         a.slide_id + " vs " + b.slide_id);
  }
  if (a.label_kind == LabelKind::kTil && b.label_kind == LabelKind::kCancer) return {a, b};
  if (a.label_kind == LabelKind::kCancer && b.label_kind == LabelKind::kTil) return {b, a};
  fail(ErrorCode::kInvalidArgument, "need one til map and one cancer map",
       a.map_id + ", " + b.map_id);
}

struct AtlasServer::Impl {
  Catalog& catalog;
  ServerOptions options;
  httplib::Server http;

  std::mutex cache_mutex;
  std::list<std::pair<std::string, std::shared_ptr<const TilePyramid>>> pyramids;

  Impl(Catalog& c, ServerOptions o) : catalog(c), options(std::move(o)) { routes(); }

  static QueryParams query_of(const httplib::Request& req) {
    QueryParams q;
    for (const auto& [k, v] : req.params) q[k] = v;
    return q;
  }

  static void send_json(httplib::Response& res, const std::string& body, int status = 200) {
    res.status = status;
    res.set_content(body, "application/json");
  }

  static void send_png(httplib::Response& res, const std::vector<std::uint8_t>& png) {
    res.set_content(reinterpret_cast<const char*>(png.data()), png.size(), "image/png");
  }

  RgbaImage render(const std::string& map_id, const QueryParams& q) {
    const auto rec = catalog.get_map(map_id);
    const auto params = resolve_render_params(rec.label_kind, options.config, q);
    return render_heatmap(*catalog.load_map(map_id), params, options.render_threads);
  }

  std::shared_ptr<const TilePyramid> pyramid(const std::string& map_id, const QueryParams& q) {
    const auto rec = catalog.get_map(map_id);
    const auto params = resolve_render_params(rec.label_kind, options.config, q);
    const auto key = map_id + "|" + params_key(params);
    {
      std::lock_guard lock(cache_mutex);
      for (auto it = pyramids.begin(); it != pyramids.end(); ++it) {
        if (it->first == key) {
          pyramids.splice(pyramids.begin(), pyramids, it);
          return it->second;
        }
      }
    }
    auto built = std::make_shared<const TilePyramid>(
        render_heatmap(*catalog.load_map(map_id), params, options.render_threads));
    std::lock_guard lock(cache_mutex);
    pyramids.emplace_front(key, built);
    while (pyramids.size() > options.pyramid_cache_entries) pyramids.pop_back();
    return built;
  }

  void routes() {
    http.set_exception_handler(
        [](const httplib::Request&, httplib::Response& res, std::exception_ptr ep) {
          try {
            std::rethrow_exception(ep);
          } catch (const Error& e) {
            send_json(res, error_json(e), http_status(e.code()));
          } catch (const std::exception& e) {
            send_json(res, error_json(Error(ErrorCode::kIo, "internal error", e.what())), 500);
          }
        });
    http.set_error_handler([](const httplib::Request& req, httplib::Response& res) {
      if (!res.body.empty()) return;
      const auto code = res.status == 404 ? ErrorCode::kNotFound : ErrorCode::kInvalidArgument;
      res.set_content(error_json(Error(code, "no such route", req.method + " " + req.path)),
                      "application/json");
    });

    http.Get("/slides", [this](const httplib::Request&, httplib::Response& res) {
      json out = json::array();
      for (const auto& s : catalog.list_slides()) out.push_back(json::parse(slide_to_json(s)));
      send_json(res, out.dump());
    });
    http.Get(R"(/slides/([^/]+))", [this](const httplib::Request& req, httplib::Response& res) {
      send_json(res, slide_to_json(catalog.get_slide(req.matches[1])));
    });
    http.Get(R"(/slides/([^/]+)/maps)",
             [this](const httplib::Request& req, httplib::Response& res) {
               const std::string slide = req.matches[1];
               catalog.get_slide(slide);
               send_json(res, maps_json(catalog.list_maps(slide)));
             });

    http.Get("/maps", [this](const httplib::Request&, httplib::Response& res) {
      send_json(res, maps_json(catalog.list_maps()));
    });
    http.Post("/maps", [this](const httplib::Request& req, httplib::Response& res) {
      const auto r = catalog.ingest(req.body);
      json j = json::parse(map_record_to_json(r.record));
      j["created"] = r.created;
      j["warnings"] = r.warnings;
      send_json(res, j.dump(), r.created ? 201 : 200);
    });
    http.Get(R"(/maps/([^/]+))", [this](const httplib::Request& req, httplib::Response& res) {
      send_json(res, map_record_to_json(catalog.get_map(req.matches[1])));
    });
    http.Get(R"(/maps/([^/]+)/export)",
             [this](const httplib::Request& req, httplib::Response& res) {
               res.set_content(catalog.export_map(req.matches[1]),
                               "text/tab-separated-values");
             });
    http.Get(R"(/maps/([^/]+)/png)", [this](const httplib::Request& req, httplib::Response& res) {
      send_png(res, encode_png(render(req.matches[1], query_of(req))));
    });
    http.Get(R"(/maps/([^/]+)/combined/([^/]+)/png)",
             [this](const httplib::Request& req, httplib::Response& res) {
               const auto [til_rec, tumor_rec] = order_til_tumor(
                   catalog.get_map(req.matches[1]), catalog.get_map(req.matches[2]));
               const auto til = catalog.load_map(til_rec.map_id);
               const auto tumor = catalog.load_map(tumor_rec.map_id);
               const auto mask = coverage_tissue_mask(*til, *tumor);
               const auto encoding = req.get_param_value("encoding");
               if (encoding == "raw") {
                 send_png(res, encode_png(combined_to_image(combine(*til, *tumor, mask))));
               } else if (encoding.empty() || encoding == "overlay") {
                 OverlayParams p;
                 p.til_threshold = options.config.til_threshold;
                 p.cancer_threshold = options.config.cancer_threshold;
                 p.cancer_aggregation = options.config.aggregation;
                 send_png(res, encode_png(render_overlay(*til, *tumor, mask, p)));
               } else {
                 fail(ErrorCode::kInvalidArgument, "unknown encoding", encoding);
               }
             });
    http.Get(R"(/maps/([^/]+)/tiles/(\d+)/(\d+)/(\d+)\.png)",
             [this](const httplib::Request& req, httplib::Response& res) {
               const auto pyr = pyramid(req.matches[1], query_of(req));
               const int z = parse_int(req.matches[2], "z");
               const int x = parse_int(req.matches[3], "x");
               const int y = parse_int(req.matches[4], "y");
               send_png(res, encode_png(pyr->tile(z, x, y)));
             });
    http.Get(R"(/maps/([^/]+)/stats)", [this](const httplib::Request& req, httplib::Response& res) {
      const auto other = req.get_param_value("tumor");
      if (other.empty()) fail(ErrorCode::kInvalidArgument, "missing ?tumor=<map_id>");
      const auto [til_rec, tumor_rec] =
          order_til_tumor(catalog.get_map(req.matches[1]), catalog.get_map(other));
      send_json(res, stats_json(*catalog.load_map(til_rec.map_id),
                                *catalog.load_map(tumor_rec.map_id), options.config));
    });
  }

  static std::string maps_json(const std::vector<MapRecord>& maps) {
    json out = json::array();
    for (const auto& m : maps) out.push_back(json::parse(map_record_to_json(m)));
    return out.dump();
  }
};

AtlasServer::AtlasServer(Catalog& catalog, ServerOptions options)
    : impl_(std::make_unique<Impl>(catalog, std::move(options))) {}

AtlasServer::~AtlasServer() { stop(); }

int AtlasServer::bind(const std::string& host, int port) {
  if (port == 0) return impl_->http.bind_to_any_port(host);
  return impl_->http.bind_to_port(host, port) ? port : -1;
}

bool AtlasServer::run() { return impl_->http.listen_after_bind(); }

void AtlasServer::stop() {
  if (impl_) impl_->http.stop();
}

void AtlasServer::wait_until_ready() const { impl_->http.wait_until_ready(); }

}  // namespace tilatlas
