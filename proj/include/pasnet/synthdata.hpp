#pragma once

#include <cstdint>
#include <filesystem>
#include <vector>

#include "pasnet/manifest.hpp"
#include "pasnet/volume.hpp"

namespace pasnet::synth {

inline constexpr Shape3 kDefaultPhantomShape{64, 64, 32};

struct PhantomOptions {
    double noise_sigma = 0.03;      // background/tissue noise; raises difficulty
    double band_intensity = 0.15;   // dark band level (class 1)
    double tissue_intensity = 0.5;
    double ring_intensity = 0.9;
};

/// Smooth ellipsoidal tissue over noise with a bright boundary shell. Label 1
/// adds 2-4 dark planar bands through the ellipsoid and a gap in the shell.
/// Values are clamped to [0, 1]. Throws ConfigError when any extent < 32.
[[nodiscard]] Volume generate_phantom(int label, Shape3 size, std::uint64_t seed, const PhantomOptions& opts = {});

/// Voxels covered by the (label-independent) band planes inside the
/// ellipsoid; 1 = in band.
[[nodiscard]] std::vector<std::uint8_t> band_mask(Shape3 size, std::uint64_t seed);

struct DatasetOptions {
    Shape3 size = kDefaultPhantomShape;
    std::size_t scans_per_patient = 1;
    PhantomOptions phantom{};
};

/// Writes `<out_dir>/volumes/<case_id>.nii` per case and returns the manifest
/// (also written to `<out_dir>/manifest.csv`). Consecutive same-label cases
/// share a patient id when scans_per_patient > 1.
Manifest generate_dataset(std::size_t n_normal, std::size_t n_pas, std::uint64_t seed,
                          const std::filesystem::path& out_dir, const DatasetOptions& opts = {});

}  // namespace pasnet::synth
