#pragma once

#include <array>
#include <string>
#include <string_view>

#include "pasnet/volume.hpp"

namespace pasnet::io {

/// Orientation tags describe what each stored axis means. A tag is either
/// "canonical" or a three-letter code over {H, W, D}, one letter per stored
/// axis in storage order; a lowercase letter marks an axis stored in
/// reverse. "HWD" is the canonical layout:
///   H  rows, increasing toward patient posterior
///   W  columns, increasing toward patient left
///   D  slices, increasing toward superior (first slice inferior-most)
struct AxisCode {
    int target = 0;        // 0 = H, 1 = W, 2 = D
    bool reversed = false;
};

/// Parses a tag; throws OrientationError for anything not described above.
[[nodiscard]] std::array<AxisCode, 3> parse_orientation(std::string_view tag);

[[nodiscard]] bool is_canonical(std::string_view tag);

/// Unit direction in RAS+ patient space of one stored axis.
[[nodiscard]] std::array<double, 3> ras_direction(AxisCode code);

/// Inverse of ras_direction for three (possibly oblique) axis directions:
/// each axis is assigned the anatomical axis of its dominant component.
/// Throws OrientationError when two axes share a dominant component.
[[nodiscard]] std::string orientation_from_ras(const std::array<std::array<double, 3>, 3>& axis_dirs);

/// Permutes and flips `v` into the canonical (H, W, D) layout. The result
/// carries orientation "canonical"; a canonical input is returned as is.
[[nodiscard]] Volume to_canonical_orientation(const Volume& v);

}  // namespace pasnet::io
