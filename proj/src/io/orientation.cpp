#include "pasnet/orientation.hpp"

#include <cctype>
#include <cmath>

#include "pasnet/errors.hpp"

namespace pasnet::io {

std::array<AxisCode, 3> parse_orientation(std::string_view tag)
{
    if (tag == kCanonicalOrientation) {
        return {AxisCode{0, false}, AxisCode{1, false}, AxisCode{2, false}};
    }
    if (tag.size() != 3) {
        throw OrientationError("unknown orientation tag '" + std::string(tag) + "'");
    }
    std::array<AxisCode, 3> codes{};
    std::array<bool, 3> seen{};
    for (std::size_t a = 0; a < 3; ++a) {
        const char c = tag[a];
        const char up = static_cast<char>(std::toupper(static_cast<unsigned char>(c)));
        int target = -1;
        if (up == 'H') target = 0;
        else if (up == 'W') target = 1;
        else if (up == 'D') target = 2;
        if (target < 0 || seen[static_cast<std::size_t>(target)]) {
            throw OrientationError("unknown orientation tag '" + std::string(tag) + "'");
        }
        seen[static_cast<std::size_t>(target)] = true;
        codes[a] = AxisCode{target, c != up};
    }
    return codes;
}

bool is_canonical(std::string_view tag)
{
    return tag == kCanonicalOrientation || tag == "HWD";
}

std::array<double, 3> ras_direction(AxisCode code)
{
    std::array<double, 3> dir{0.0, 0.0, 0.0};
    switch (code.target) {
    case 0: dir[1] = -1.0; break;  // posterior
    case 1: dir[0] = -1.0; break;  // left
    default: dir[2] = 1.0; break;  // superior
    }
    if (code.reversed) {
        for (auto& x : dir) x = -x;
    }
    return dir;
}

std::string orientation_from_ras(const std::array<std::array<double, 3>, 3>& axis_dirs)
{
    std::string tag(3, '?');
    std::array<bool, 3> used{};
    for (std::size_t a = 0; a < 3; ++a) {
        const auto& v = axis_dirs[a];
        std::size_t dom = 0;
        for (std::size_t c = 1; c < 3; ++c) {
            if (std::abs(v[c]) > std::abs(v[dom])) dom = c;
        }
        if (v[dom] == 0.0 || used[dom]) {
            throw OrientationError("degenerate or ambiguous axis directions");
        }
        used[dom] = true;
        // RAS x -> W (forward = left = -x), y -> H (forward = posterior = -y), z -> D (+z)
        char letter = 'D';
        bool forward = v[dom] > 0;
        if (dom == 0) {
            letter = 'W';
            forward = v[dom] < 0;
        } else if (dom == 1) {
            letter = 'H';
            forward = v[dom] < 0;
        }
        tag[a] = forward ? letter : static_cast<char>(std::tolower(letter));
    }
    return tag;
}

Volume to_canonical_orientation(const Volume& v)
{
    if (v.orientation() == kCanonicalOrientation) return v;
    const auto codes = parse_orientation(v.orientation());

    const Shape3& in = v.shape();
    std::array<std::int64_t, 3> out_ext{};
    std::array<double, 3> out_sp{};
    for (int a = 0; a < 3; ++a) {
        out_ext[static_cast<std::size_t>(codes[static_cast<std::size_t>(a)].target)] = in[a];
        out_sp[static_cast<std::size_t>(codes[static_cast<std::size_t>(a)].target)] = v.spacing()[a];
    }
    const Shape3 out_shape{out_ext[0], out_ext[1], out_ext[2]};
    const Spacing out_spacing{out_sp[0], out_sp[1], out_sp[2]};

    if (v.orientation() == "HWD") {
        return v.with_orientation(kCanonicalOrientation);
    }

    std::vector<float> out(static_cast<std::size_t>(out_shape.voxels()));
    const auto src = v.data();
    std::array<std::int64_t, 3> c{};
    std::size_t o = 0;
    for (c[0] = 0; c[0] < out_shape.h; ++c[0]) {
        for (c[1] = 0; c[1] < out_shape.w; ++c[1]) {
            for (c[2] = 0; c[2] < out_shape.d; ++c[2]) {
                std::array<std::int64_t, 3> r{};
                for (std::size_t a = 0; a < 3; ++a) {
                    const auto t = static_cast<std::size_t>(codes[a].target);
                    r[a] = codes[a].reversed ? in[static_cast<int>(a)] - 1 - c[t] : c[t];
                }
                out[o++] = src[v.index(r[0], r[1], r[2])];
            }
        }
    }
    return Volume(out_shape, std::move(out), out_spacing, kCanonicalOrientation);
}

}  // namespace pasnet::io
