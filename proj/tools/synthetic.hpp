#pragma once

// Deterministic stand-in for a scanned slide: glass, an elliptical tissue
// section, a tumor region following the annotation polygons and lymphocyte
// clusters inside and outside it.

#include <cstdint>
#include <string>

#include "tilatlas/atlas/prediction_file.hpp"
#include "tilatlas/image.hpp"
#include "tilatlas/patchprep.hpp"

namespace tilmap {

inline constexpr int kSyntheticSlideSize = 3500;
inline constexpr int kSyntheticPatchSize = 100;

tilatlas::RgbImage synthesize_slide(const tilatlas::AnnotationSet& annotations,
                                    int width, int height, std::uint64_t seed);

/// Noisy cancer probabilities for the tissue patches of `slide`: high inside
/// the annotated regions, low elsewhere.
std::string synthesize_cancer_predictions(const tilatlas::RgbImage& slide,
                                          const tilatlas::AnnotationSet& annotations,
                                          int patch_size, std::uint64_t seed,
                                          const tilatlas::TissueConfig& tissue = {});

}  // namespace tilmap
