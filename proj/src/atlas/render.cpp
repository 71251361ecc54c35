#include "tilatlas/atlas/render.hpp"

#include <algorithm>
#include <cstring>

#include "tilatlas/error.hpp"

namespace tilatlas {

std::string_view to_string(Colormap c) {
  switch (c) {
    case Colormap::kGrayscale: return "grayscale";
    case Colormap::kHeat: return "heat";
    case Colormap::kPaper: return "paper";
  }
  return "heat";
}

Colormap parse_colormap(std::string_view s) {
  if (s == "grayscale" || s == "gray") return Colormap::kGrayscale;
  if (s == "heat") return Colormap::kHeat;
  if (s == "paper") return Colormap::kPaper;
  fail(ErrorCode::kInvalidArgument, "unknown colormap", std::string(s));
}

RenderParams RenderParams::defaults_for(LabelKind kind) {
  RenderParams p;
  if (kind == LabelKind::kCancer) {
    p.aggregation = kDefaultAggregation;
    p.threshold = kDefaultCancerThreshold;
  }
  return p;
}

Rgba colormap_color(Colormap c, double p, LabelKind kind) {
  const std::uint8_t v = quantize_probability(p);
  switch (c) {
    case Colormap::kGrayscale: return {v, v, v, 255};
    case Colormap::kHeat: return {v, 0, static_cast<std::uint8_t>(255 - v), 255};
    case Colormap::kPaper:
      return kind == LabelKind::kTil ? overlay_colors::kLymphocyte
                                     : overlay_colors::kCancer;
  }
  return overlay_colors::kTransparent;
}

RgbaImage render_heatmap(const ProbabilityMap& map, const RenderParams& params,
                         unsigned threads) {
  const ProbabilityMap* src = &map;
  ProbabilityMap aggregated;
  if (params.aggregation && params.aggregation->window > 1) {
    aggregated = aggregate(map, *params.aggregation, threads);
    src = &aggregated;
  }
  std::optional<double> t = params.threshold;
  if (!t && params.colormap == Colormap::kPaper) t = kDefaultTilThreshold;
  if (t && !(*t >= 0.0 && *t <= 1.0)) {
    fail(ErrorCode::kInvalidArgument, "threshold outside [0,1]");
  }
  const auto& g = src->geometry();
  RgbaImage img(static_cast<int>(g.cols()), static_cast<int>(g.rows()));
  const auto values = src->values();
  const auto coverage = src->coverage();
  const auto kind = src->label_kind();
  for (std::size_t k = 0; k < g.cell_count(); ++k) {
    Rgba color = overlay_colors::kTransparent;
    if (coverage[k]) {
      const double p = values[k];
      if (!t || p >= *t) {
        color = colormap_color(params.colormap, p, kind);
      } else if (params.colormap == Colormap::kPaper) {
        color = overlay_colors::kTissue;
      }
    }
    std::memcpy(img.data.data() + 4 * k, color.data(), 4);
  }
  return img;
}

TissueMask coverage_tissue_mask(const ProbabilityMap& a, const ProbabilityMap& b) {
  require_same_geometry(a.geometry(), b.geometry(), "coverage_tissue_mask");
  std::vector<std::uint8_t> tissue(a.geometry().cell_count());
  for (std::size_t k = 0; k < tissue.size(); ++k) {
    tissue[k] = (a.coverage()[k] || b.coverage()[k]) ? 1 : 0;
  }
  return TissueMask(a.geometry(), std::move(tissue));
}

RgbaImage render_overlay(const ProbabilityMap& til, const ProbabilityMap& tumor,
                         const TissueMask& mask, const OverlayParams& params) {
  require_same_geometry(til.geometry(), tumor.geometry(), "render_overlay");
  require_same_geometry(til.geometry(), mask.geometry(), "render_overlay");
  const ProbabilityMap cancer =
      params.cancer_aggregation ? aggregate(tumor, *params.cancer_aggregation) : tumor;
  const auto til_labels = threshold(til, params.til_threshold);
  const auto cancer_labels = threshold(cancer, params.cancer_threshold);
  const auto& g = til.geometry();
  RgbaImage img(static_cast<int>(g.cols()), static_cast<int>(g.rows()));
  for (std::size_t k = 0; k < g.cell_count(); ++k) {
    Rgba color = overlay_colors::kBackground;
    if (til_labels.labels()[k] == PatchLabel::kPositive) {
      color = overlay_colors::kLymphocyte;
    } else if (cancer_labels.labels()[k] == PatchLabel::kPositive) {
      color = overlay_colors::kCancer;
    } else if (mask.cells()[k]) {
      color = overlay_colors::kTissue;
    }
    std::memcpy(img.data.data() + 4 * k, color.data(), 4);
  }
  return img;
}

std::vector<PyramidLevel> pyramid_levels(int width, int height, int tile_size) {
  if (width <= 0 || height <= 0 || tile_size <= 0) {
    fail(ErrorCode::kInvalidArgument, "pyramid needs positive dimensions");
  }
  std::vector<PyramidLevel> out;
  int w = width, h = height;
  while (true) {
    out.push_back({w, h, (w + tile_size - 1) / tile_size,
                   (h + tile_size - 1) / tile_size});
    if (w <= tile_size && h <= tile_size) break;
    w = (w + 1) / 2;
    h = (h + 1) / 2;
  }
  return out;
}

RgbaImage downsample_half(const RgbaImage& img) {
  RgbaImage out((img.width + 1) / 2, (img.height + 1) / 2);
  for (int y = 0; y < out.height; ++y) {
    for (int x = 0; x < out.width; ++x) {
      unsigned alpha_sum = 0, count = 0;
      unsigned weighted[3] = {0, 0, 0};
      for (int dy = 0; dy < 2; ++dy) {
        for (int dx = 0; dx < 2; ++dx) {
          const int sx = 2 * x + dx, sy = 2 * y + dy;
          if (sx >= img.width || sy >= img.height) continue;
          const auto* p = img.pixel(sx, sy);
          ++count;
          alpha_sum += p[3];
          for (int c = 0; c < 3; ++c) weighted[c] += p[c] * p[3];
        }
      }
      auto* o = out.pixel(x, y);
      if (alpha_sum == 0) continue;  // stays transparent
      for (int c = 0; c < 3; ++c) {
        o[c] = static_cast<std::uint8_t>((2 * weighted[c] + alpha_sum) / (2 * alpha_sum));
      }
      o[3] = static_cast<std::uint8_t>((2 * alpha_sum + count) / (2 * count));
    }
  }
  return out;
}

TilePyramid::TilePyramid(RgbaImage base, int tile_size)
    : tile_size_(tile_size), info_(pyramid_levels(base.width, base.height, tile_size)) {
  images_.reserve(info_.size());
  images_.push_back(std::move(base));
  while (images_.size() < info_.size()) {
    images_.push_back(downsample_half(images_.back()));
  }
}

RgbaImage TilePyramid::tile(int z, int x, int y) const {
  if (z < 0 || z >= levels()) {
    fail(ErrorCode::kNotFound, "zoom level out of range",
         "z=" + std::to_string(z) + " levels=" + std::to_string(levels()));
  }
  const auto& info = info_[static_cast<std::size_t>(z)];
  if (x < 0 || y < 0 || x >= info.tiles_x || y >= info.tiles_y) {
    fail(ErrorCode::kNotFound, "tile out of range",
         "z=" + std::to_string(z) + " x=" + std::to_string(x) + " y=" + std::to_string(y));
  }
  const auto& src = images_[static_cast<std::size_t>(z)];
  RgbaImage out(tile_size_, tile_size_);
  const int x0 = x * tile_size_, y0 = y * tile_size_;
  const int w = std::min(tile_size_, src.width - x0);
  const int h = std::min(tile_size_, src.height - y0);
  for (int row = 0; row < h; ++row) {
    std::memcpy(out.pixel(0, row), src.pixel(x0, y0 + row),
                static_cast<std::size_t>(w) * 4);
  }
  return out;
}

}  // namespace tilatlas
