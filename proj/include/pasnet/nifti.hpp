#pragma once

#include <filesystem>

#include "pasnet/volume.hpp"

namespace pasnet::io {

/// Reads a single-file NIfTI-1 volume (".nii", either byte order). Stored
/// axes (i, j, k) become the volume's axes in the same order; the
/// orientation tag is derived from the sform, then the qform, then an
/// "orient=" marker in the description field, else it is "unknown".
/// Throws FormatError on malformed or truncated input, IoError when the
/// file cannot be opened.
[[nodiscard]] Volume read_nifti(const std::filesystem::path& path);

/// Writes `v` as float32 NIfTI-1 with sform and qform describing its
/// orientation tag. Returns `path`. Throws IoError when unwritable,
/// OrientationError when the tag is not recognized.
std::filesystem::path write_nifti(const Volume& v, const std::filesystem::path& path);

}  // namespace pasnet::io
