#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "pasnet/manifest.hpp"
#include "pasnet/volume.hpp"

namespace pasnet::data {

struct SplitSpec {
    double train = 0.70;
    double val = 0.10;
    double test = 0.20;
    std::uint64_t seed = 0;

    /// Throws ConfigError unless all ratios are positive and sum to 1 (1e-9).
    void validate() const;
};

/// Per-class case targets for each split, by largest-remainder apportionment
/// of the class total (ties go to the earlier split: train, val, test).
[[nodiscard]] std::array<std::size_t, 3> split_targets(std::size_t class_total, const SplitSpec& spec);

/// Assigns whole patients to train/val/test. Patients are visited in a seeded
/// random order (larger patients first) and each goes to the split whose
/// target for the patient's class is least filled, relatively. Throws
/// DataError for a patient whose scans carry different labels, or when the
/// manifest already holds augmented records.
[[nodiscard]] Manifest stratified_split(const Manifest& manifest, const SplitSpec& spec);

struct AugmentationSpec {
    bool flip_h = true;
    bool flip_w = true;
    std::vector<int> rotations_deg{90, 180, 270};
    double zoom_min = 1.1;
    double zoom_max = 1.3;
    double probability = 0.5;
    std::uint64_t seed = 0;

    /// Throws ConfigError for rotations outside {90,180,270} or zoom <= 1.
    void validate() const;
};

/// One concrete draw; persisted so the augmented volume can be rebuilt.
struct AugmentationParams {
    bool flip_h = false;
    bool flip_w = false;
    int rot_deg = 0;      // 0, 90, 180 or 270, counter-clockwise in the H-W plane
    double zoom = 1.0;    // 1.0 = no zoom

    [[nodiscard]] bool is_identity() const noexcept { return !flip_h && !flip_w && rot_deg == 0 && zoom == 1.0; }
    friend bool operator==(const AugmentationParams&, const AugmentationParams&) = default;
};

struct AugmentationRecord {
    std::string case_id;
    std::string source_id;
    AugmentationParams params;
    friend bool operator==(const AugmentationRecord&, const AugmentationRecord&) = default;
};

/// Each enabled component is applied independently with spec.probability;
/// when none is selected one component is forced so the draw is never the
/// identity.
[[nodiscard]] AugmentationParams draw_augmentation(const AugmentationSpec& spec, std::uint64_t stream);

/// H-flip, W-flip, in-plane rotation, then centred zoom-in (trilinear) cropped
/// back to the input shape. Rotation by 90/270 requires H == W (DataError).
[[nodiscard]] Volume augment(const Volume& v, const AugmentationParams& params);

[[nodiscard]] Volume flip(const Volume& v, int axis);
[[nodiscard]] Volume rotate90(const Volume& v, int quarter_turns);
[[nodiscard]] Volume zoom(const Volume& v, double factor);

struct OversampleResult {
    Manifest manifest;
    std::vector<AugmentationRecord> augmentations;
};

/// Adds augmented copies of minority-class training originals until both
/// classes have equal training counts. Copies are sourced round-robin in
/// manifest order and written as `<augment_dir>/<case_id>.nii`. A balanced
/// training split is returned unchanged. Throws DataError when the minority
/// class has no training originals.
[[nodiscard]] OversampleResult oversample_minority(const Manifest& manifest, const AugmentationSpec& spec,
                                                   const std::filesystem::path& augment_dir);

/// Reads each source volume, applies its recorded transform and writes the
/// augmented NIfTI to the path its manifest record names.
void materialize_augmentations(const Manifest& manifest, const std::vector<AugmentationRecord>& augmentations);

/// Sidecar CSV `case_id,source_id,flip_h,flip_w,rot_deg,zoom`.
void write_augmentation_sidecar(const std::vector<AugmentationRecord>& augmentations,
                                const std::filesystem::path& csv);
[[nodiscard]] std::vector<AugmentationRecord> read_augmentation_sidecar(const std::filesystem::path& csv);

/// Record indices (into manifest.records()) of one epoch over `split`,
/// grouped into batches of `batch_size`; the last batch may be short.
/// With shuffle, the order is a function of (seed, epoch) only.
[[nodiscard]] std::vector<std::vector<std::size_t>> plan_epoch(const Manifest& manifest, Split split,
                                                               std::size_t batch_size, bool shuffle,
                                                               std::uint64_t seed, std::uint64_t epoch);

}  // namespace pasnet::data
