#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

namespace pasnet {

/// Extent of a volume along (height, width, depth) = (rows, columns, slices).
struct Shape3 {
    std::int64_t h = 0;
    std::int64_t w = 0;
    std::int64_t d = 0;

    [[nodiscard]] constexpr std::int64_t voxels() const noexcept { return h * w * d; }
    [[nodiscard]] constexpr std::int64_t operator[](int axis) const noexcept
    {
        return axis == 0 ? h : (axis == 1 ? w : d);
    }
    friend constexpr bool operator==(const Shape3&, const Shape3&) = default;
};

/// Physical voxel size in millimetres, same axis order as Shape3.
struct Spacing {
    double h = 1.0;
    double w = 1.0;
    double d = 1.0;

    [[nodiscard]] constexpr double operator[](int axis) const noexcept
    {
        return axis == 0 ? h : (axis == 1 ? w : d);
    }
    friend constexpr bool operator==(const Spacing&, const Spacing&) = default;
};

inline constexpr const char* kCanonicalOrientation = "canonical";

/// A 3D scalar field. Storage is row-major over (h, w, d) with depth
/// fastest, which is also the memory order of an (N, C, H, W, D) tensor.
/// The volume never changes after construction.
class Volume {
public:
    Volume() = default;

    /// Zero-filled volume.
    Volume(Shape3 shape, Spacing spacing = {}, std::string orientation = kCanonicalOrientation);

    /// Takes ownership of `data`; throws std::invalid_argument when the
    /// element count does not match `shape` or any extent is < 1.
    Volume(Shape3 shape, std::vector<float> data, Spacing spacing = {},
           std::string orientation = kCanonicalOrientation);

    [[nodiscard]] const Shape3& shape() const noexcept { return shape_; }
    [[nodiscard]] const Spacing& spacing() const noexcept { return spacing_; }
    [[nodiscard]] const std::string& orientation() const noexcept { return orientation_; }
    [[nodiscard]] std::span<const float> data() const noexcept { return data_; }
    [[nodiscard]] std::size_t size() const noexcept { return data_.size(); }
    [[nodiscard]] bool empty() const noexcept { return data_.empty(); }

    [[nodiscard]] std::size_t index(std::int64_t i, std::int64_t j, std::int64_t k) const noexcept
    {
        return static_cast<std::size_t>((i * shape_.w + j) * shape_.d + k);
    }
    [[nodiscard]] float at(std::int64_t i, std::int64_t j, std::int64_t k) const noexcept
    {
        return data_[index(i, j, k)];
    }
    [[nodiscard]] float& at(std::int64_t i, std::int64_t j, std::int64_t k) noexcept { return data_[index(i, j, k)]; }

    [[nodiscard]] bool all_finite() const noexcept;
    [[nodiscard]] float min() const;
    [[nodiscard]] float max() const;

    /// Copies the voxel buffer for building a modified volume.
    [[nodiscard]] std::vector<float> copy_data() const { return data_; }

    [[nodiscard]] Volume with_orientation(std::string orientation) const;
    [[nodiscard]] Volume with_spacing(Spacing spacing) const;

    friend bool operator==(const Volume&, const Volume&) = default;

private:
    Shape3 shape_{};
    Spacing spacing_{};
    std::string orientation_ = kCanonicalOrientation;
    std::vector<float> data_;
};

}  // namespace pasnet
