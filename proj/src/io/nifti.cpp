#include "pasnet/nifti.hpp"

#include <algorithm>
#include <array>
#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <iterator>
#include <string>
#include <vector>

#include "pasnet/errors.hpp"
#include "pasnet/orientation.hpp"

namespace pasnet::io {

namespace {

constexpr std::size_t kHeaderSize = 348;
constexpr std::size_t kVoxOffset = 352;

enum DataType : std::int16_t {
    kUInt8 = 2,
    kInt16 = 4,
    kInt32 = 8,
    kFloat32 = 16,
    kFloat64 = 64,
    kInt8 = 256,
    kUInt16 = 512,
    kUInt32 = 768,
};

class HeaderView {
public:
    HeaderView(const std::vector<char>& bytes, bool swap) : bytes_(bytes), swap_(swap) {}

    template <typename T>
    [[nodiscard]] T get(std::size_t offset) const
    {
        T value{};
        std::memcpy(&value, bytes_.data() + offset, sizeof(T));
        if (swap_) value = byteswap(value);
        return value;
    }

    template <typename T>
    static T byteswap(T value)
    {
        std::array<unsigned char, sizeof(T)> raw{};
        std::memcpy(raw.data(), &value, sizeof(T));
        std::reverse(raw.begin(), raw.end());
        std::memcpy(&value, raw.data(), sizeof(T));
        return value;
    }

private:
    const std::vector<char>& bytes_;
    bool swap_;
};

template <typename T>
void put(std::vector<char>& buf, std::size_t offset, T value)
{
    std::memcpy(buf.data() + offset, &value, sizeof(T));
}

std::array<std::array<double, 3>, 3> quaternion_to_axes(double b, double c, double d, double qfac)
{
    double a = 1.0 - (b * b + c * c + d * d);
    if (a < 1.0e-7) {
        const double norm = 1.0 / std::sqrt(b * b + c * c + d * d);
        b *= norm;
        c *= norm;
        d *= norm;
        a = 0.0;
    } else {
        a = std::sqrt(a);
    }
    // Rows of the rotation matrix; column n is the direction of stored axis n.
    const std::array<std::array<double, 3>, 3> r = {{
        {a * a + b * b - c * c - d * d, 2 * (b * c - a * d), 2 * (b * d + a * c)},
        {2 * (b * c + a * d), a * a + c * c - b * b - d * d, 2 * (c * d - a * b)},
        {2 * (b * d - a * c), 2 * (c * d + a * b), a * a + d * d - c * c - b * b},
    }};
    const double q = qfac < 0 ? -1.0 : 1.0;
    return {{{r[0][0], r[1][0], r[2][0]}, {r[0][1], r[1][1], r[2][1]}, {q * r[0][2], q * r[1][2], q * r[2][2]}}};
}

/// Quaternion (b, c, d) and qfac of a signed permutation matrix whose
/// columns are the stored-axis directions.
std::array<double, 4> axes_to_quaternion(std::array<std::array<double, 3>, 3> cols)
{
    const auto det = cols[0][0] * (cols[1][1] * cols[2][2] - cols[2][1] * cols[1][2])
                   - cols[1][0] * (cols[0][1] * cols[2][2] - cols[2][1] * cols[0][2])
                   + cols[2][0] * (cols[0][1] * cols[1][2] - cols[1][1] * cols[0][2]);
    double qfac = 1.0;
    if (det < 0) {
        qfac = -1.0;
        for (auto& x : cols[2]) x = -x;
    }
    // r[row][col]
    const double r11 = cols[0][0], r12 = cols[1][0], r13 = cols[2][0];
    const double r21 = cols[0][1], r22 = cols[1][1], r23 = cols[2][1];
    const double r31 = cols[0][2], r32 = cols[1][2], r33 = cols[2][2];
    double a = r11 + r22 + r33 + 1.0;
    double b = 0, c = 0, d = 0;
    if (a > 0.5) {
        a = 0.5 * std::sqrt(a);
        b = 0.25 * (r32 - r23) / a;
        c = 0.25 * (r13 - r31) / a;
        d = 0.25 * (r21 - r12) / a;
    } else {
        const double xd = 1.0 + r11 - (r22 + r33);
        const double yd = 1.0 + r22 - (r11 + r33);
        const double zd = 1.0 + r33 - (r11 + r22);
        if (xd > 1.0) {
            b = 0.5 * std::sqrt(xd);
            c = 0.25 * (r12 + r21) / b;
            d = 0.25 * (r13 + r31) / b;
            a = 0.25 * (r32 - r23) / b;
        } else if (yd > 1.0) {
            c = 0.5 * std::sqrt(yd);
            b = 0.25 * (r12 + r21) / c;
            d = 0.25 * (r23 + r32) / c;
            a = 0.25 * (r13 - r31) / c;
        } else {
            d = 0.5 * std::sqrt(zd);
            b = 0.25 * (r13 + r31) / d;
            c = 0.25 * (r23 + r32) / d;
            a = 0.25 * (r21 - r12) / d;
        }
        if (a < 0.0) {
            b = -b;
            c = -c;
            d = -d;
        }
    }
    return {b, c, d, qfac};
}

std::string orientation_from_description(const std::string& descrip)
{
    const auto pos = descrip.find("orient=");
    if (pos == std::string::npos) return "unknown";
    std::string tag = descrip.substr(pos + 7);
    const auto end = tag.find_first_of(" ;");
    if (end != std::string::npos) tag.resize(end);
    return tag;
}

template <typename T>
void decode(const char* raw, std::size_t n, bool swap, std::vector<double>& out)
{
    out.resize(n);
    for (std::size_t i = 0; i < n; ++i) {
        T v{};
        std::memcpy(&v, raw + i * sizeof(T), sizeof(T));
        if (swap) v = HeaderView::byteswap(v);
        out[i] = static_cast<double>(v);
    }
}

}  // namespace

Volume read_nifti(const std::filesystem::path& path)
{
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open NIfTI file " + path.string());
    std::vector<char> bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());

    const std::string where = " in " + path.string();
    if (bytes.size() < kHeaderSize) throw FormatError("truncated NIfTI header" + where);

    std::int32_t sizeof_hdr = 0;
    std::memcpy(&sizeof_hdr, bytes.data(), 4);
    bool swap = false;
    if (sizeof_hdr != static_cast<std::int32_t>(kHeaderSize)) {
        if (HeaderView::byteswap(sizeof_hdr) != static_cast<std::int32_t>(kHeaderSize)) {
            throw FormatError("not a NIfTI-1 header" + where);
        }
        swap = true;
    }
    const HeaderView hdr(bytes, swap);
    if (std::memcmp(bytes.data() + 344, "n+1\0", 4) != 0) {
        throw FormatError("unsupported NIfTI magic (single-file n+1 required)" + where);
    }

    const auto ndim = hdr.get<std::int16_t>(40);
    if (ndim < 1 || ndim > 7) throw FormatError("invalid dim[0]" + where);
    std::array<std::int64_t, 3> ext{1, 1, 1};
    for (int a = 0; a < ndim; ++a) {
        const auto n = hdr.get<std::int16_t>(42 + 2 * static_cast<std::size_t>(a));
        if (n < 1) throw FormatError("non-positive dimension" + where);
        if (a < 3) ext[static_cast<std::size_t>(a)] = n;
        else if (n != 1) throw FormatError("only 3D scalar volumes are supported" + where);
    }

    const auto datatype = hdr.get<std::int16_t>(70);
    std::size_t elem = 0;
    switch (datatype) {
    case kUInt8: case kInt8: elem = 1; break;
    case kInt16: case kUInt16: elem = 2; break;
    case kInt32: case kUInt32: case kFloat32: elem = 4; break;
    case kFloat64: elem = 8; break;
    default: throw FormatError("unsupported NIfTI datatype " + std::to_string(datatype) + where);
    }

    const auto vox_offset_f = hdr.get<float>(108);
    if (!(vox_offset_f >= static_cast<float>(kHeaderSize))) throw FormatError("invalid vox_offset" + where);
    const auto vox_offset = static_cast<std::size_t>(vox_offset_f);
    const std::size_t n = static_cast<std::size_t>(ext[0] * ext[1] * ext[2]);
    if (bytes.size() < vox_offset + n * elem) throw FormatError("truncated NIfTI voxel data" + where);

    std::vector<double> values;
    const char* raw = bytes.data() + vox_offset;
    switch (datatype) {
    case kUInt8: decode<std::uint8_t>(raw, n, swap, values); break;
    case kInt8: decode<std::int8_t>(raw, n, swap, values); break;
    case kInt16: decode<std::int16_t>(raw, n, swap, values); break;
    case kUInt16: decode<std::uint16_t>(raw, n, swap, values); break;
    case kInt32: decode<std::int32_t>(raw, n, swap, values); break;
    case kUInt32: decode<std::uint32_t>(raw, n, swap, values); break;
    case kFloat32: decode<float>(raw, n, swap, values); break;
    default: decode<double>(raw, n, swap, values); break;
    }

    const double slope = hdr.get<float>(112);
    const double inter = hdr.get<float>(116);
    const bool scaled = slope != 0.0 && std::isfinite(slope) && !(slope == 1.0 && inter == 0.0);

    // NIfTI stores i fastest; the volume keeps (i, j, k) with k fastest.
    const Shape3 shape{ext[0], ext[1], ext[2]};
    std::vector<float> data(n);
    for (std::int64_t k = 0; k < shape.d; ++k) {
        for (std::int64_t j = 0; j < shape.w; ++j) {
            for (std::int64_t i = 0; i < shape.h; ++i) {
                double v = values[static_cast<std::size_t>(i + shape.h * (j + shape.w * k))];
                if (scaled) v = v * slope + inter;
                const auto f = static_cast<float>(v);
                if (!std::isfinite(f)) throw FormatError("non-finite voxel value" + where);
                data[static_cast<std::size_t>((i * shape.w + j) * shape.d + k)] = f;
            }
        }
    }

    Spacing spacing{std::abs(hdr.get<float>(80)), std::abs(hdr.get<float>(84)), std::abs(hdr.get<float>(88))};
    if (spacing.h <= 0) spacing.h = 1.0;
    if (spacing.w <= 0) spacing.w = 1.0;
    if (spacing.d <= 0) spacing.d = 1.0;

    std::string tag;
    const auto qform_code = hdr.get<std::int16_t>(252);
    const auto sform_code = hdr.get<std::int16_t>(254);
    if (sform_code > 0) {
        std::array<std::array<double, 3>, 3> axes{};
        for (std::size_t a = 0; a < 3; ++a) {
            for (std::size_t r = 0; r < 3; ++r) axes[a][r] = hdr.get<float>(280 + 16 * r + 4 * a);
        }
        tag = orientation_from_ras(axes);
    } else if (qform_code > 0) {
        const double qfac = hdr.get<float>(76);
        tag = orientation_from_ras(
            quaternion_to_axes(hdr.get<float>(256), hdr.get<float>(260), hdr.get<float>(264), qfac));
    } else {
        std::string descrip(bytes.data() + 148, 80);
        descrip.resize(std::strlen(descrip.c_str()));
        tag = orientation_from_description(descrip);
    }
    if (tag == "HWD") tag = kCanonicalOrientation;

    return Volume(shape, std::move(data), spacing, tag);
}

std::filesystem::path write_nifti(const Volume& v, const std::filesystem::path& path)
{
    const auto codes = parse_orientation(v.orientation());
    const Shape3& s = v.shape();
    if (s.h > 32767 || s.w > 32767 || s.d > 32767) throw FormatError("volume too large for NIfTI-1");

    std::vector<char> hdr(kVoxOffset, 0);
    put<std::int32_t>(hdr, 0, static_cast<std::int32_t>(kHeaderSize));
    hdr[38] = 'r';
    put<std::int16_t>(hdr, 40, 3);
    put<std::int16_t>(hdr, 42, static_cast<std::int16_t>(s.h));
    put<std::int16_t>(hdr, 44, static_cast<std::int16_t>(s.w));
    put<std::int16_t>(hdr, 46, static_cast<std::int16_t>(s.d));
    for (std::size_t a = 4; a < 8; ++a) put<std::int16_t>(hdr, 40 + 2 * a, 1);
    put<std::int16_t>(hdr, 70, kFloat32);
    put<std::int16_t>(hdr, 72, 32);

    std::array<std::array<double, 3>, 3> axes{};
    for (std::size_t a = 0; a < 3; ++a) axes[a] = ras_direction(codes[a]);
    const auto quat = axes_to_quaternion(axes);

    put<float>(hdr, 76, static_cast<float>(quat[3]));
    put<float>(hdr, 80, static_cast<float>(v.spacing().h));
    put<float>(hdr, 84, static_cast<float>(v.spacing().w));
    put<float>(hdr, 88, static_cast<float>(v.spacing().d));
    put<float>(hdr, 108, static_cast<float>(kVoxOffset));
    put<float>(hdr, 112, 1.0F);
    put<float>(hdr, 116, 0.0F);
    hdr[123] = 2;  // millimetres

    const std::string descrip = "orient=" + v.orientation();
    std::memcpy(hdr.data() + 148, descrip.data(), std::min<std::size_t>(descrip.size(), 79));

    put<std::int16_t>(hdr, 252, 1);
    put<std::int16_t>(hdr, 254, 1);
    put<float>(hdr, 256, static_cast<float>(quat[0]));
    put<float>(hdr, 260, static_cast<float>(quat[1]));
    put<float>(hdr, 264, static_cast<float>(quat[2]));
    for (std::size_t r = 0; r < 3; ++r) {
        for (std::size_t a = 0; a < 3; ++a) {
            put<float>(hdr, 280 + 16 * r + 4 * a, static_cast<float>(axes[a][r] * v.spacing()[static_cast<int>(a)]));
        }
    }
    std::memcpy(hdr.data() + 344, "n+1\0", 4);

    std::vector<float> payload(v.size());
    for (std::int64_t i = 0; i < s.h; ++i) {
        for (std::int64_t j = 0; j < s.w; ++j) {
            for (std::int64_t k = 0; k < s.d; ++k) {
                payload[static_cast<std::size_t>(i + s.h * (j + s.w * k))] = v.at(i, j, k);
            }
        }
    }

    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot write NIfTI file " + path.string());
    out.write(hdr.data(), static_cast<std::streamsize>(hdr.size()));
    out.write(reinterpret_cast<const char*>(payload.data()),
              static_cast<std::streamsize>(payload.size() * sizeof(float)));
    if (!out) throw IoError("short write to " + path.string());
    return path;
}

}  // namespace pasnet::io
