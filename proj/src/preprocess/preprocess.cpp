#include "pasnet/preprocess.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <filesystem>

#include "pasnet/dicom.hpp"
#include "pasnet/errors.hpp"
#include "pasnet/nifti.hpp"
#include "pasnet/orientation.hpp"

namespace pasnet::prep {

namespace {

constexpr std::int64_t kMinExtent = 4;

/// Catmull-Rom weights for fractional offset t in [0, 1).
std::array<double, 4> cubic_weights(double t)
{
    constexpr double a = -0.5;
    const auto w = [](double x) {
        x = std::abs(x);
        if (x <= 1.0) return ((a + 2.0) * x - (a + 3.0)) * x * x + 1.0;
        if (x < 2.0) return ((a * x - 5.0 * a) * x + 8.0 * a) * x - 4.0 * a;
        return 0.0;
    };
    return {w(1.0 + t), w(t), w(1.0 - t), w(2.0 - t)};
}

struct Tap {
    std::array<std::int64_t, 4> index{};
    std::array<double, 4> weight{};
};

/// Sampling taps for every output position along one axis.
std::vector<Tap> axis_taps(std::int64_t in, std::int64_t out)
{
    std::vector<Tap> taps(static_cast<std::size_t>(out));
    const double ratio = static_cast<double>(in) / static_cast<double>(out);
    for (std::int64_t o = 0; o < out; ++o) {
        const double x = (static_cast<double>(o) + 0.5) * ratio - 0.5;
        const double base = std::floor(x);
        const auto w = cubic_weights(x - base);
        Tap& tap = taps[static_cast<std::size_t>(o)];
        for (int m = 0; m < 4; ++m) {
            const auto idx = static_cast<std::int64_t>(base) - 1 + m;
            tap.index[static_cast<std::size_t>(m)] = std::clamp<std::int64_t>(idx, 0, in - 1);
            tap.weight[static_cast<std::size_t>(m)] = w[static_cast<std::size_t>(m)];
        }
    }
    return taps;
}

/// Resamples one axis of a dense (n0, n1, n2) buffer.
std::vector<double> resample_axis(const std::vector<double>& src, std::array<std::int64_t, 3> ext, int axis,
                                  std::int64_t out_len)
{
    const auto taps = axis_taps(ext[static_cast<std::size_t>(axis)], out_len);
    std::array<std::int64_t, 3> oext = ext;
    oext[static_cast<std::size_t>(axis)] = out_len;
    std::vector<double> dst(static_cast<std::size_t>(oext[0] * oext[1] * oext[2]));
    std::array<std::int64_t, 3> stride{ext[1] * ext[2], ext[2], 1};
    std::size_t o = 0;
    for (std::int64_t i = 0; i < oext[0]; ++i) {
        for (std::int64_t j = 0; j < oext[1]; ++j) {
            for (std::int64_t k = 0; k < oext[2]; ++k) {
                std::array<std::int64_t, 3> c{i, j, k};
                const Tap& tap = taps[static_cast<std::size_t>(c[static_cast<std::size_t>(axis)])];
                double acc = 0.0;
                for (std::size_t m = 0; m < 4; ++m) {
                    c[static_cast<std::size_t>(axis)] = tap.index[m];
                    acc += tap.weight[m] * src[static_cast<std::size_t>(c[0] * stride[0] + c[1] * stride[1] + c[2])];
                }
                dst[o++] = acc;
            }
        }
    }
    return dst;
}

template <typename E>
[[noreturn]] void rethrow_with_case(const E& e, const std::string& case_id)
{
    throw E("case '" + case_id + "': " + e.what());
}

}  // namespace

ResizePlan plan_resize(const Shape3& input, const Shape3& target)
{
    if (input.h < kMinExtent || input.w < kMinExtent || input.d < kMinExtent) {
        throw PreprocessError("input extents must all be >= 4 for cubic interpolation, got "
                              + std::to_string(input.h) + "x" + std::to_string(input.w) + "x"
                              + std::to_string(input.d));
    }
    ResizePlan p;
    p.scale = std::min({static_cast<double>(target.h) / static_cast<double>(input.h),
                        static_cast<double>(target.w) / static_cast<double>(input.w),
                        static_cast<double>(target.d) / static_cast<double>(input.d)});
    std::array<std::int64_t, 3> content{};
    for (int a = 0; a < 3; ++a) {
        const auto n = std::llround(static_cast<double>(input[a]) * p.scale);
        content[static_cast<std::size_t>(a)] = std::clamp<std::int64_t>(n, 1, target[a]);
    }
    p.content = {content[0], content[1], content[2]};
    const Shape3 pad{target.h - p.content.h, target.w - p.content.w, target.d - p.content.d};
    p.pad_low = {pad.h / 2, pad.w / 2, pad.d / 2};
    p.pad_high = {pad.h - p.pad_low.h, pad.w - p.pad_low.w, pad.d - p.pad_low.d};
    return p;
}

Volume resize_with_padding(const Volume& v, const Shape3& target)
{
    const ResizePlan plan = plan_resize(v.shape(), target);
    const auto src = v.data();
    std::vector<double> buf(src.begin(), src.end());
    std::array<std::int64_t, 3> ext{v.shape().h, v.shape().w, v.shape().d};
    for (int axis = 0; axis < 3; ++axis) {
        const std::int64_t len = plan.content[axis];
        if (len == ext[static_cast<std::size_t>(axis)]) continue;
        buf = resample_axis(buf, ext, axis, len);
        ext[static_cast<std::size_t>(axis)] = len;
    }

    const double lo = v.min();
    const double hi = v.max();
    std::vector<float> out(static_cast<std::size_t>(target.voxels()), 0.0F);
    std::size_t s = 0;
    for (std::int64_t i = 0; i < plan.content.h; ++i) {
        for (std::int64_t j = 0; j < plan.content.w; ++j) {
            const auto row = static_cast<std::size_t>(((i + plan.pad_low.h) * target.w + (j + plan.pad_low.w)) * target.d
                                                      + plan.pad_low.d);
            for (std::int64_t k = 0; k < plan.content.d; ++k) {
                out[row + static_cast<std::size_t>(k)] = static_cast<float>(std::clamp(buf[s++], lo, hi));
            }
        }
    }
    const Spacing sp{v.spacing().h / plan.scale, v.spacing().w / plan.scale, v.spacing().d / plan.scale};
    return Volume(target, std::move(out), sp, v.orientation());
}

Volume minmax_normalize(const Volume& v)
{
    const double lo = v.min();
    const double hi = v.max();
    std::vector<float> out(v.size(), 0.0F);
    if (hi > lo) {
        const auto src = v.data();
        const double range = hi - lo;
        for (std::size_t i = 0; i < out.size(); ++i) {
            out[i] = static_cast<float>((static_cast<double>(src[i]) - lo) / range);
        }
    }
    return Volume(v.shape(), std::move(out), v.spacing(), v.orientation());
}

Volume preprocess_case(const CaseRecord& rec, const Shape3& target)
{
    try {
        const Volume raw = std::filesystem::is_directory(rec.path) ? io::load_dicom_series(rec.path)
                                                                   : io::read_nifti(rec.path);
        return minmax_normalize(resize_with_padding(io::to_canonical_orientation(raw), target));
    } catch (const IngestError& e) {
        rethrow_with_case(e, rec.case_id);
    } catch (const FormatError& e) {
        rethrow_with_case(e, rec.case_id);
    } catch (const IoError& e) {
        rethrow_with_case(e, rec.case_id);
    } catch (const OrientationError& e) {
        rethrow_with_case(e, rec.case_id);
    } catch (const PreprocessError& e) {
        rethrow_with_case(e, rec.case_id);
    }
}

}  // namespace pasnet::prep
