#pragma once

#include "pasnet/manifest.hpp"
#include "pasnet/volume.hpp"

namespace pasnet::prep {

inline constexpr Shape3 kTargetShape{128, 128, 64};

/// Per-axis geometry of an aspect-preserving resize into a fixed grid.
struct ResizePlan {
    double scale = 1.0;          // min over axes of target / input
    Shape3 content{};            // extent of the rescaled content
    Shape3 pad_low{};            // zero planes before the content
    Shape3 pad_high{};           // zero planes after (takes the odd voxel)
};

/// Throws PreprocessError when any input extent is below 4.
[[nodiscard]] ResizePlan plan_resize(const Shape3& input, const Shape3& target = kTargetShape);

/// Scales by one uniform factor with cubic (Catmull-Rom) interpolation,
/// clamping samples to the edge and results to the input's value range, then
/// zero-pads symmetrically to `target`.
[[nodiscard]] Volume resize_with_padding(const Volume& v, const Shape3& target = kTargetShape);

/// (v - min) / (max - min); a constant volume maps to all zeros.
[[nodiscard]] Volume minmax_normalize(const Volume& v);

/// read -> to_canonical_orientation -> resize_with_padding -> minmax_normalize.
/// `rec.path` may be a NIfTI file or a DICOM series directory. Errors keep
/// their type and gain the case id in the message.
[[nodiscard]] Volume preprocess_case(const CaseRecord& rec, const Shape3& target = kTargetShape);

}  // namespace pasnet::prep
