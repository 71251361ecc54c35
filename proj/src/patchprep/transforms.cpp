#include <algorithm>
#include <cmath>
#include <numbers>

#include "tilatlas/error.hpp"
#include "tilatlas/patchprep.hpp"
#include "tilatlas/random.hpp"

namespace tilatlas {

namespace {

FloatImage standardize(int width, int height, std::vector<double> data) {
  const std::size_t n = static_cast<std::size_t>(width) * height;
  if (n == 0) fail(ErrorCode::kInvalidArgument, "empty patch");
  for (int c = 0; c < 3; ++c) {
    double mean = 0.0;
    for (std::size_t k = 0; k < n; ++k) mean += data[3 * k + c];
    mean /= static_cast<double>(n);
    double var = 0.0;
    for (std::size_t k = 0; k < n; ++k) {
      const double d = data[3 * k + c] - mean;
      var += d * d;
    }
    const double sd = std::sqrt(var / static_cast<double>(n));
    for (std::size_t k = 0; k < n; ++k) {
      data[3 * k + c] = sd > 1e-12 ? (data[3 * k + c] - mean) / sd : 0.0;
    }
  }
  return FloatImage{width, height, std::move(data)};
}

std::uint8_t to_byte(double v) {
  return static_cast<std::uint8_t>(std::clamp(std::floor(v + 0.5), 0.0, 255.0));
}

// Mirror index into [0, n) without repeating the edge sample.
int reflect(int idx, int n) {
  if (n == 1) return 0;
  const int period = 2 * (n - 1);
  idx %= period;
  if (idx < 0) idx += period;
  return idx < n ? idx : period - idx;
}

double luma(double r, double g, double b) {
  return 0.299 * r + 0.587 * g + 0.114 * b;
}

}  // namespace

FloatImage normalize_channels(const RgbImage& patch) {
  return standardize(patch.width, patch.height,
                     std::vector<double>(patch.data.begin(), patch.data.end()));
}

FloatImage normalize_channels(const FloatImage& patch) {
  return standardize(patch.width, patch.height, patch.data);
}

void TransformConfig::validate() const {
  if (max_rotation_deg < 0.0 || brightness < 0.0 || contrast < 0.0 ||
      saturation < 0.0) {
    fail(ErrorCode::kInvalidArgument,
         "rotation range and jitter amplitudes must be >= 0");
  }
  if (hflip_prob < 0.0 || hflip_prob > 1.0 || vflip_prob < 0.0 ||
      vflip_prob > 1.0) {
    fail(ErrorCode::kInvalidArgument, "flip probabilities must be in [0,1]");
  }
  if (brightness > 1.0 || contrast > 1.0 || saturation > 1.0) {
    fail(ErrorCode::kInvalidArgument, "jitter amplitudes must be <= 1");
  }
}

TransformConfig TransformConfig::identity() {
  TransformConfig cfg;
  cfg.max_rotation_deg = 0;
  cfg.hflip_prob = 0;
  cfg.vflip_prob = 0;
  cfg.brightness = 0;
  cfg.contrast = 0;
  cfg.saturation = 0;
  return cfg;
}

AugmentParams draw_augment_params(const TransformConfig& cfg,
                                  std::uint64_t draw_seed) {
  cfg.validate();
  SplitMix64 rng(derive_seed(cfg.seed, draw_seed));
  AugmentParams p;
  // Fixed draw order keeps every parameter stable when another amplitude
  // changes.
  const double u_rot = rng.uniform();
  const double u_h = rng.uniform();
  const double u_v = rng.uniform();
  const double u_b = rng.uniform();
  const double u_c = rng.uniform();
  const double u_s = rng.uniform();
  p.angle_deg = u_rot * cfg.max_rotation_deg;
  p.hflip = u_h < cfg.hflip_prob;
  p.vflip = u_v < cfg.vflip_prob;
  p.brightness_factor = 1.0 + (2.0 * u_b - 1.0) * cfg.brightness;
  p.contrast_factor = 1.0 + (2.0 * u_c - 1.0) * cfg.contrast;
  p.saturation_factor = 1.0 + (2.0 * u_s - 1.0) * cfg.saturation;
  return p;
}

RgbImage rotate_reflect(const RgbImage& patch, double angle_deg) {
  if (angle_deg == 0.0) return patch;
  const double theta = angle_deg * std::numbers::pi / 180.0;
  const double cs = std::cos(theta), sn = std::sin(theta);
  const double cx = (patch.width - 1) / 2.0;
  const double cy = (patch.height - 1) / 2.0;
  RgbImage out(patch.width, patch.height);
  for (int y = 0; y < patch.height; ++y) {
    for (int x = 0; x < patch.width; ++x) {
      // Inverse map: rotate the destination point back by -theta.
      const double dx = x - cx, dy = y - cy;
      const double sx = cs * dx + sn * dy + cx;
      const double sy = -sn * dx + cs * dy + cy;
      const int x0 = static_cast<int>(std::floor(sx));
      const int y0 = static_cast<int>(std::floor(sy));
      const double fx = sx - x0, fy = sy - y0;
      const auto* p00 = patch.pixel(reflect(x0, patch.width), reflect(y0, patch.height));
      const auto* p10 = patch.pixel(reflect(x0 + 1, patch.width), reflect(y0, patch.height));
      const auto* p01 = patch.pixel(reflect(x0, patch.width), reflect(y0 + 1, patch.height));
      const auto* p11 = patch.pixel(reflect(x0 + 1, patch.width), reflect(y0 + 1, patch.height));
      auto* o = out.pixel(x, y);
      for (int c = 0; c < 3; ++c) {
        const double top = p00[c] * (1 - fx) + p10[c] * fx;
        const double bottom = p01[c] * (1 - fx) + p11[c] * fx;
        o[c] = to_byte(top * (1 - fy) + bottom * fy);
      }
    }
  }
  return out;
}

RgbImage apply_augment(const RgbImage& patch, const AugmentParams& params) {
  RgbImage img = rotate_reflect(patch, params.angle_deg);
  if (params.hflip) {
    for (int y = 0; y < img.height; ++y) {
      for (int x = 0; x < img.width / 2; ++x) {
        auto* a = img.pixel(x, y);
        auto* b = img.pixel(img.width - 1 - x, y);
        std::swap_ranges(a, a + 3, b);
      }
    }
  }
  if (params.vflip) {
    for (int y = 0; y < img.height / 2; ++y) {
      auto* a = img.pixel(0, y);
      auto* b = img.pixel(0, img.height - 1 - y);
      std::swap_ranges(a, a + 3 * img.width, b);
    }
  }
  if (params.brightness_factor != 1.0) {
    for (auto& v : img.data) v = to_byte(v * params.brightness_factor);
  }
  if (params.contrast_factor != 1.0) {
    double mean = 0.0;
    const std::size_t n = static_cast<std::size_t>(img.width) * img.height;
    for (std::size_t k = 0; k < n; ++k) {
      mean += luma(img.data[3 * k], img.data[3 * k + 1], img.data[3 * k + 2]);
    }
    mean /= static_cast<double>(n);
    for (auto& v : img.data) v = to_byte((v - mean) * params.contrast_factor + mean);
  }
  if (params.saturation_factor != 1.0) {
    const std::size_t n = static_cast<std::size_t>(img.width) * img.height;
    for (std::size_t k = 0; k < n; ++k) {
      auto* p = img.data.data() + 3 * k;
      const double gray = luma(p[0], p[1], p[2]);
      for (int c = 0; c < 3; ++c) {
        p[c] = to_byte((p[c] - gray) * params.saturation_factor + gray);
      }
    }
  }
  return img;
}

RgbImage augment(const RgbImage& patch, const TransformConfig& cfg,
                 std::uint64_t draw_seed) {
  return apply_augment(patch, draw_augment_params(cfg, draw_seed));
}

double dark_purple_fraction(const RgbImage& patch) {
  const std::size_t n = static_cast<std::size_t>(patch.width) * patch.height;
  if (n == 0) fail(ErrorCode::kInvalidArgument, "empty patch");
  std::size_t hits = 0;
  for (std::size_t k = 0; k < n; ++k) {
    const auto* p = patch.data.data() + 3 * k;
    if (luma(p[0], p[1], p[2]) < 120.0 && p[2] > p[0]) ++hits;
  }
  return static_cast<double>(hits) / static_cast<double>(n);
}

namespace {
constexpr double kLogisticSlope = 10.0;
constexpr double kLogisticMidpoint = 0.25;
}  // namespace

double baseline_til_score(const RgbImage& patch) {
  const double f = dark_purple_fraction(patch);
  return 1.0 / (1.0 + std::exp(-kLogisticSlope * (f - kLogisticMidpoint)));
}

std::vector<PredictionRecord> score_slide_baseline(const RgbImage& slide,
                                                   const GridGeometry& geometry,
                                                   const TissueConfig& tissue) {
  const auto stats = patch_stats_from_raster(slide, geometry, tissue);
  const auto mask = tissue_mask_from_patch_stats(stats, geometry, tissue).mask;
  std::vector<PredictionRecord> out;
  for (std::int64_t i = 0; i < geometry.rows(); ++i) {
    for (std::int64_t j = 0; j < geometry.cols(); ++j) {
      if (!mask.tissue(i, j)) continue;
      const auto r = geometry.patch_rect(i, j);
      const auto patch = crop(slide, static_cast<int>(r.x), static_cast<int>(r.y),
                              static_cast<int>(r.width), static_cast<int>(r.height));
      out.push_back({r.x, r.y, baseline_til_score(patch)});
    }
  }
  return out;
}

}  // namespace tilatlas
