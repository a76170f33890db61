#include "pasnet/volume.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace pasnet {

namespace {

void check_shape(const Shape3& s)
{
    if (s.h < 1 || s.w < 1 || s.d < 1) {
        throw std::invalid_argument("volume extents must all be >= 1");
    }
}

}  // namespace

Volume::Volume(Shape3 shape, Spacing spacing, std::string orientation)
    : shape_(shape), spacing_(spacing), orientation_(std::move(orientation))
{
    check_shape(shape_);
    data_.assign(static_cast<std::size_t>(shape_.voxels()), 0.0F);
}

Volume::Volume(Shape3 shape, std::vector<float> data, Spacing spacing, std::string orientation)
    : shape_(shape), spacing_(spacing), orientation_(std::move(orientation)), data_(std::move(data))
{
    check_shape(shape_);
    if (data_.size() != static_cast<std::size_t>(shape_.voxels())) {
        throw std::invalid_argument("voxel count does not match volume shape");
    }
}

bool Volume::all_finite() const noexcept
{
    return std::all_of(data_.begin(), data_.end(), [](float v) { return std::isfinite(v); });
}

float Volume::min() const
{
    if (data_.empty()) throw std::logic_error("min() of empty volume");
    return *std::min_element(data_.begin(), data_.end());
}

float Volume::max() const
{
    if (data_.empty()) throw std::logic_error("max() of empty volume");
    return *std::max_element(data_.begin(), data_.end());
}

Volume Volume::with_orientation(std::string orientation) const
{
    Volume out = *this;
    out.orientation_ = std::move(orientation);
    return out;
}

Volume Volume::with_spacing(Spacing spacing) const
{
    Volume out = *this;
    out.spacing_ = spacing;
    return out;
}

}  // namespace pasnet
