#include "pasnet/synthdata.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdio>
#include <numbers>

#include "pasnet/errors.hpp"
#include "pasnet/nifti.hpp"
#include "pasnet/random.hpp"

namespace pasnet::synth {

namespace {

constexpr std::int64_t kMinExtent = 32;
constexpr double kShellWidth = 0.14;   // in normalized ellipsoid radius
constexpr double kBandHalfWidth = 1.25; // voxels

struct Plane {
    std::array<double, 3> normal{};
    double offset = 0.0;
};

struct Layout {
    std::array<double, 3> center{};
    std::array<double, 3> semi{};
    std::vector<Plane> bands;
    double gap_azimuth = 0.0;
    double gap_half_width = 0.0;
    std::array<double, 3> texture_phase{};
};

Layout draw_layout(Shape3 size, Rng& rng)
{
    Layout l;
    for (int a = 0; a < 3; ++a) {
        const double n = static_cast<double>(size[a]);
        l.center[static_cast<std::size_t>(a)] = (n - 1.0) / 2.0 + rng.uniform(-0.05, 0.05) * n;
        l.semi[static_cast<std::size_t>(a)] = n * rng.uniform(0.28, 0.34);
    }
    const auto count = 2 + static_cast<int>(rng.below(3));
    for (int b = 0; b < count; ++b) {
        // Mostly through-plane bands: normals close to the H-W plane.
        const double theta = rng.uniform(0.0, std::numbers::pi);
        const double tilt = rng.uniform(-0.3, 0.3);
        Plane p;
        p.normal = {std::cos(theta), std::sin(theta), tilt};
        const double norm = std::sqrt(1.0 + tilt * tilt);
        for (auto& x : p.normal) x /= norm;
        // Offset from the centre, within the inner half of the ellipsoid.
        const double reach = std::min(l.semi[0], l.semi[1]);
        p.offset = rng.uniform(-0.45, 0.45) * reach;
        l.bands.push_back(p);
    }
    l.gap_azimuth = rng.uniform(0.0, 2.0 * std::numbers::pi);
    l.gap_half_width = rng.uniform(0.45, 0.7);
    for (auto& ph : l.texture_phase) ph = rng.uniform(0.0, 2.0 * std::numbers::pi);
    return l;
}

void check_size(Shape3 size)
{
    if (size.h < kMinExtent || size.w < kMinExtent || size.d < kMinExtent) {
        throw ConfigError("phantom extents must all be >= 32");
    }
}

struct VoxelGeometry {
    double radius = 0.0;     // normalized ellipsoid radius
    double azimuth = 0.0;    // angle in the H-W plane about the centre
    bool in_band = false;
};

VoxelGeometry locate(const Layout& l, std::int64_t i, std::int64_t j, std::int64_t k)
{
    const std::array<double, 3> p{static_cast<double>(i) - l.center[0], static_cast<double>(j) - l.center[1],
                                  static_cast<double>(k) - l.center[2]};
    VoxelGeometry g;
    g.radius = std::sqrt((p[0] / l.semi[0]) * (p[0] / l.semi[0]) + (p[1] / l.semi[1]) * (p[1] / l.semi[1])
                         + (p[2] / l.semi[2]) * (p[2] / l.semi[2]));
    g.azimuth = std::atan2(p[1], p[0]);
    if (g.radius < 1.0) {
        for (const auto& b : l.bands) {
            const double dist = p[0] * b.normal[0] + p[1] * b.normal[1] + p[2] * b.normal[2] - b.offset;
            if (std::abs(dist) <= kBandHalfWidth) {
                g.in_band = true;
                break;
            }
        }
    }
    return g;
}

double angular_distance(double a, double b)
{
    double d = std::fmod(std::abs(a - b), 2.0 * std::numbers::pi);
    return d > std::numbers::pi ? 2.0 * std::numbers::pi - d : d;
}

}  // namespace

Volume generate_phantom(int label, Shape3 size, std::uint64_t seed, const PhantomOptions& opts)
{
    check_size(size);
    if (label != kLabelNormal && label != kLabelPas) throw ConfigError("phantom label must be 0 or 1");
    Rng rng(mix_seed(seed, 0xFA7));
    const Layout l = draw_layout(size, rng);
    Rng noise(mix_seed(seed, 0x401));

    std::vector<float> data(static_cast<std::size_t>(size.voxels()));
    std::size_t o = 0;
    for (std::int64_t i = 0; i < size.h; ++i) {
        for (std::int64_t j = 0; j < size.w; ++j) {
            for (std::int64_t k = 0; k < size.d; ++k) {
                const VoxelGeometry g = locate(l, i, j, k);
                double v = 0.08;
                if (g.radius < 1.0) {
                    const double texture = 0.04 * std::sin(0.35 * static_cast<double>(i) + l.texture_phase[0])
                                         * std::sin(0.3 * static_cast<double>(j) + l.texture_phase[1])
                                         * std::cos(0.5 * static_cast<double>(k) + l.texture_phase[2]);
                    v = opts.tissue_intensity + texture;
                    if (label == kLabelPas && g.in_band) v = opts.band_intensity;
                } else if (g.radius < 1.0 + kShellWidth) {
                    const bool gap = label == kLabelPas && angular_distance(g.azimuth, l.gap_azimuth) < l.gap_half_width;
                    v = gap ? opts.tissue_intensity : opts.ring_intensity;
                }
                v += opts.noise_sigma * noise.normal();
                data[o++] = static_cast<float>(std::clamp(v, 0.0, 1.0));
            }
        }
    }
    return Volume(size, std::move(data));
}

std::vector<std::uint8_t> band_mask(Shape3 size, std::uint64_t seed)
{
    check_size(size);
    Rng rng(mix_seed(seed, 0xFA7));
    const Layout l = draw_layout(size, rng);
    std::vector<std::uint8_t> mask(static_cast<std::size_t>(size.voxels()), 0);
    std::size_t o = 0;
    for (std::int64_t i = 0; i < size.h; ++i) {
        for (std::int64_t j = 0; j < size.w; ++j) {
            for (std::int64_t k = 0; k < size.d; ++k) mask[o++] = locate(l, i, j, k).in_band ? 1 : 0;
        }
    }
    return mask;
}

Manifest generate_dataset(std::size_t n_normal, std::size_t n_pas, std::uint64_t seed,
                          const std::filesystem::path& out_dir, const DatasetOptions& opts)
{
    check_size(opts.size);
    if (opts.scans_per_patient == 0) throw ConfigError("scans_per_patient must be >= 1");
    const auto vol_dir = out_dir / "volumes";
    std::filesystem::create_directories(vol_dir);

    std::vector<CaseRecord> records;
    std::size_t patient = 0;
    std::size_t index = 0;
    const auto emit = [&](int label, std::size_t count) {
        for (std::size_t n = 0; n < count; ++n, ++index) {
            if (n % opts.scans_per_patient == 0) ++patient;
            char id[32];
            std::snprintf(id, sizeof(id), "synth_%05zu", index);
            char pid[32];
            std::snprintf(pid, sizeof(pid), "P%05zu", patient);
            CaseRecord r;
            r.case_id = id;
            r.patient_id = pid;
            r.label = label;
            r.path = vol_dir / (r.case_id + ".nii");
            io::write_nifti(generate_phantom(label, opts.size, mix_seed(seed, index), opts.phantom), r.path);
            records.push_back(std::move(r));
        }
    };
    emit(kLabelNormal, n_normal);
    emit(kLabelPas, n_pas);

    Manifest m(std::move(records), seed);
    write_manifest(m, out_dir / "manifest.csv");
    return m;
}

}  // namespace pasnet::synth
