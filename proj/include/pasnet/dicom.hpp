#pragma once

#include <array>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "pasnet/volume.hpp"

namespace pasnet::io {

/// Attributes of one single-frame DICOM image needed to assemble a series.
struct DicomSlice {
    std::filesystem::path file;
    std::string series_uid;
    std::optional<int> instance_number;
    std::optional<std::array<double, 3>> position;      // (0020,0032)
    std::optional<std::array<double, 6>> orientation;   // (0020,0037)
    int rows = 0;
    int columns = 0;
    std::array<double, 2> pixel_spacing{1.0, 1.0};      // row spacing, column spacing
    std::optional<double> slice_thickness;
    std::optional<double> spacing_between_slices;
    std::vector<float> pixels;                          // rows * columns, row-major, rescaled
};

/// Parses one DICOM Part-10 file with an uncompressed little-endian transfer
/// syntax (implicit or explicit VR). Throws IngestError for anything else,
/// including multi-frame, multi-sample and pixel-less objects.
[[nodiscard]] DicomSlice read_dicom_slice(const std::filesystem::path& file);

/// Loads every regular file in `dir` as one series and stacks the slices
/// along depth. Slices are ordered by their position projected onto the
/// slice normal, or by instance number when positions are absent or
/// repeated. The orientation tag is "canonical" when the first slice is the
/// inferior-most and "HWd" otherwise.
[[nodiscard]] Volume load_dicom_series(const std::filesystem::path& dir);

/// Loads `dir` and writes it as a NIfTI volume at `out`. Returns `out`.
std::filesystem::path convert_series_to_nifti(const std::filesystem::path& dir,
                                              const std::filesystem::path& out);

}  // namespace pasnet::io
