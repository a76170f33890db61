#include "pasnet/dicom.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <iterator>
#include <set>
#include <sstream>
#include <string_view>

#include "pasnet/errors.hpp"
#include "pasnet/nifti.hpp"

namespace pasnet::io {

namespace {

constexpr std::uint32_t kUndefinedLength = 0xFFFFFFFFu;
constexpr std::string_view kImplicitLittle = "1.2.840.10008.1.2";
constexpr std::string_view kExplicitLittle = "1.2.840.10008.1.2.1";

constexpr std::uint32_t tag(std::uint16_t group, std::uint16_t element)
{
    return (static_cast<std::uint32_t>(group) << 16) | element;
}

constexpr std::uint32_t kItem = tag(0xFFFE, 0xE000);
constexpr std::uint32_t kItemDelimiter = tag(0xFFFE, 0xE00D);
constexpr std::uint32_t kSequenceDelimiter = tag(0xFFFE, 0xE0DD);
constexpr std::uint32_t kPixelData = tag(0x7FE0, 0x0010);

bool long_form_vr(std::string_view vr)
{
    return vr == "OB" || vr == "OW" || vr == "OF" || vr == "SQ" || vr == "UT" || vr == "UN"
        || vr == "OD" || vr == "OL" || vr == "OV" || vr == "UC" || vr == "UR" || vr == "SV" || vr == "UV";
}

struct Element {
    std::uint32_t tag = 0;
    std::string vr;
    std::uint32_t length = 0;
    std::size_t value_offset = 0;
};

class Reader {
public:
    Reader(const std::vector<char>& bytes, std::string where) : bytes_(bytes), where_(std::move(where)) {}

    [[nodiscard]] bool at_end() const { return pos_ >= bytes_.size(); }
    [[nodiscard]] std::size_t pos() const { return pos_; }
    void seek(std::size_t p) { pos_ = p; }

    std::uint16_t u16()
    {
        need(2);
        std::uint16_t v = 0;
        std::memcpy(&v, bytes_.data() + pos_, 2);
        pos_ += 2;
        return v;
    }
    std::uint32_t u32()
    {
        need(4);
        std::uint32_t v = 0;
        std::memcpy(&v, bytes_.data() + pos_, 4);
        pos_ += 4;
        return v;
    }

    Element next(bool explicit_vr)
    {
        Element e;
        const auto group = u16();
        const auto elem = u16();
        e.tag = tag(group, elem);
        if (group == 0xFFFE) {
            e.length = u32();
        } else if (explicit_vr) {
            need(2);
            e.vr.assign(bytes_.data() + pos_, 2);
            pos_ += 2;
            if (long_form_vr(e.vr)) {
                u16();
                e.length = u32();
            } else {
                e.length = u16();
            }
        } else {
            e.length = u32();
        }
        e.value_offset = pos_;
        return e;
    }

    void skip_value(const Element& e, bool explicit_vr)
    {
        if (e.length != kUndefinedLength) {
            need(e.length);
            pos_ += e.length;
            return;
        }
        // Undefined length: a sequence (or encapsulated data) terminated by a
        // sequence delimiter; items inside may themselves be undefined length.
        while (true) {
            const Element item = next(explicit_vr);
            if (item.tag == kSequenceDelimiter) return;
            if (item.tag != kItem) throw IngestError("malformed sequence" + where_);
            if (item.length != kUndefinedLength) {
                need(item.length);
                pos_ += item.length;
                continue;
            }
            while (true) {
                const Element inner = next(explicit_vr);
                if (inner.tag == kItemDelimiter) break;
                skip_value(inner, explicit_vr);
            }
        }
    }

    [[nodiscard]] std::string text(const Element& e) const
    {
        std::string s(bytes_.data() + e.value_offset, e.length);
        while (!s.empty() && (s.back() == ' ' || s.back() == '\0')) s.pop_back();
        const auto first = s.find_first_not_of(' ');
        return first == std::string::npos ? std::string{} : s.substr(first);
    }

    void need(std::size_t n) const
    {
        if (pos_ + n > bytes_.size()) throw IngestError("truncated DICOM element" + where_);
    }

private:
    const std::vector<char>& bytes_;
    std::string where_;
    std::size_t pos_ = 0;
};

std::vector<double> parse_decimals(const std::string& s)
{
    std::vector<double> out;
    std::stringstream ss(s);
    std::string part;
    while (std::getline(ss, part, '\\')) {
        try {
            out.push_back(std::stod(part));
        } catch (const std::exception&) {
            return {};
        }
    }
    return out;
}

std::optional<int> parse_int(const std::string& s)
{
    try {
        return std::stoi(s);
    } catch (const std::exception&) {
        return std::nullopt;
    }
}

std::array<double, 3> slice_normal(const std::array<double, 6>& o)
{
    return {o[1] * o[5] - o[2] * o[4], o[2] * o[3] - o[0] * o[5], o[0] * o[4] - o[1] * o[3]};
}

}  // namespace

DicomSlice read_dicom_slice(const std::filesystem::path& file)
{
    std::ifstream in(file, std::ios::binary);
    if (!in) throw IngestError("cannot open DICOM file " + file.string());
    const std::vector<char> bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    const std::string where = " in " + file.string();
    if (bytes.size() < 132 || std::memcmp(bytes.data() + 128, "DICM", 4) != 0) {
        throw IngestError("not a DICOM Part-10 file" + where);
    }

    Reader r(bytes, where);
    r.seek(132);

    // File meta group is always explicit VR little endian.
    std::string transfer_syntax;
    while (!r.at_end()) {
        const auto save = r.pos();
        const auto group = r.u16();
        r.seek(save);
        if (group != 0x0002) break;
        const Element e = r.next(true);
        if (e.tag == tag(0x0002, 0x0010)) {
            r.need(e.length);
            transfer_syntax = r.text(e);
        }
        r.skip_value(e, true);
    }
    bool explicit_vr = true;
    if (transfer_syntax == kImplicitLittle) explicit_vr = false;
    else if (transfer_syntax != kExplicitLittle) {
        throw IngestError("unsupported transfer syntax '" + transfer_syntax + "'" + where);
    }

    DicomSlice s;
    s.file = file;
    int bits_allocated = 0;
    int pixel_representation = 0;
    int samples_per_pixel = 1;
    int frames = 1;
    double slope = 1.0;
    double intercept = 0.0;
    std::optional<Element> pixel_element;

    while (!r.at_end()) {
        const Element e = r.next(explicit_vr);
        if (e.tag == kPixelData) {
            if (e.length == kUndefinedLength) throw IngestError("encapsulated pixel data is not supported" + where);
            r.need(e.length);
            pixel_element = e;
            r.skip_value(e, explicit_vr);
            continue;
        }
        const bool interesting = e.length != kUndefinedLength && e.length < 4096;
        if (interesting) {
            r.need(e.length);
            const auto u16_value = [&] {
                std::uint16_t v = 0;
                if (e.length >= 2) std::memcpy(&v, bytes.data() + e.value_offset, 2);
                return static_cast<int>(v);
            };
            switch (e.tag) {
            case tag(0x0020, 0x000E): s.series_uid = r.text(e); break;
            case tag(0x0020, 0x0013): s.instance_number = parse_int(r.text(e)); break;
            case tag(0x0020, 0x0032): {
                const auto v = parse_decimals(r.text(e));
                if (v.size() == 3) s.position = std::array<double, 3>{v[0], v[1], v[2]};
                break;
            }
            case tag(0x0020, 0x0037): {
                const auto v = parse_decimals(r.text(e));
                if (v.size() == 6) s.orientation = std::array<double, 6>{v[0], v[1], v[2], v[3], v[4], v[5]};
                break;
            }
            case tag(0x0028, 0x0002): samples_per_pixel = u16_value(); break;
            case tag(0x0028, 0x0008): frames = parse_int(r.text(e)).value_or(1); break;
            case tag(0x0028, 0x0010): s.rows = u16_value(); break;
            case tag(0x0028, 0x0011): s.columns = u16_value(); break;
            case tag(0x0028, 0x0030): {
                const auto v = parse_decimals(r.text(e));
                if (v.size() == 2) s.pixel_spacing = {v[0], v[1]};
                break;
            }
            case tag(0x0018, 0x0050): {
                const auto v = parse_decimals(r.text(e));
                if (v.size() == 1) s.slice_thickness = v[0];
                break;
            }
            case tag(0x0018, 0x0088): {
                const auto v = parse_decimals(r.text(e));
                if (v.size() == 1) s.spacing_between_slices = v[0];
                break;
            }
            case tag(0x0028, 0x0100): bits_allocated = u16_value(); break;
            case tag(0x0028, 0x0103): pixel_representation = u16_value(); break;
            case tag(0x0028, 0x1052): {
                const auto v = parse_decimals(r.text(e));
                if (v.size() == 1) intercept = v[0];
                break;
            }
            case tag(0x0028, 0x1053): {
                const auto v = parse_decimals(r.text(e));
                if (v.size() == 1) slope = v[0];
                break;
            }
            default: break;
            }
        }
        r.skip_value(e, explicit_vr);
    }

    if (!pixel_element) throw IngestError("DICOM object has no pixel data" + where);
    if (frames != 1) throw IngestError("multi-frame DICOM is not supported" + where);
    if (samples_per_pixel != 1) throw IngestError("only single-sample (grayscale) pixels are supported" + where);
    if (s.rows < 1 || s.columns < 1) throw IngestError("missing image dimensions" + where);
    if (bits_allocated != 8 && bits_allocated != 16 && bits_allocated != 32) {
        throw IngestError("unsupported BitsAllocated " + std::to_string(bits_allocated) + where);
    }
    const std::size_t n = static_cast<std::size_t>(s.rows) * static_cast<std::size_t>(s.columns);
    const std::size_t bytes_per = static_cast<std::size_t>(bits_allocated / 8);
    if (pixel_element->length < n * bytes_per) throw IngestError("pixel data shorter than rows*columns" + where);

    s.pixels.resize(n);
    const char* raw = bytes.data() + pixel_element->value_offset;
    for (std::size_t i = 0; i < n; ++i) {
        double v = 0.0;
        const char* p = raw + i * bytes_per;
        if (bits_allocated == 8) {
            v = pixel_representation ? static_cast<double>(static_cast<std::int8_t>(*p))
                                     : static_cast<double>(static_cast<std::uint8_t>(*p));
        } else if (bits_allocated == 16) {
            std::uint16_t u = 0;
            std::memcpy(&u, p, 2);
            v = pixel_representation ? static_cast<double>(static_cast<std::int16_t>(u)) : static_cast<double>(u);
        } else {
            std::uint32_t u = 0;
            std::memcpy(&u, p, 4);
            v = pixel_representation ? static_cast<double>(static_cast<std::int32_t>(u)) : static_cast<double>(u);
        }
        s.pixels[i] = static_cast<float>(v * slope + intercept);
    }
    return s;
}

Volume load_dicom_series(const std::filesystem::path& dir)
{
    if (!std::filesystem::is_directory(dir)) throw IngestError("not a directory: " + dir.string());
    std::vector<std::filesystem::path> files;
    for (const auto& entry : std::filesystem::directory_iterator(dir)) {
        if (entry.is_regular_file()) files.push_back(entry.path());
    }
    std::sort(files.begin(), files.end());
    if (files.empty()) throw IngestError("no DICOM files in " + dir.string());

    std::vector<DicomSlice> slices;
    slices.reserve(files.size());
    for (const auto& f : files) slices.push_back(read_dicom_slice(f));

    const std::string where = " in " + dir.string();
    std::set<std::string> series;
    for (const auto& s : slices) series.insert(s.series_uid);
    if (series.size() != 1) throw IngestError("directory mixes " + std::to_string(series.size()) + " series" + where);

    const auto& first = slices.front();
    for (const auto& s : slices) {
        if (s.rows != first.rows || s.columns != first.columns) {
            throw IngestError("slice dimensions differ within series" + where);
        }
    }

    // Sort key: projection of the position onto the slice normal.
    std::array<double, 3> normal{0.0, 0.0, 1.0};
    if (first.orientation) normal = slice_normal(*first.orientation);
    const bool have_positions = std::all_of(slices.begin(), slices.end(), [](const auto& s) { return s.position.has_value(); });
    std::vector<double> keys(slices.size());
    bool positions_usable = have_positions;
    if (have_positions) {
        for (std::size_t i = 0; i < slices.size(); ++i) {
            const auto& p = *slices[i].position;
            keys[i] = p[0] * normal[0] + p[1] * normal[1] + p[2] * normal[2];
        }
        std::vector<double> sorted = keys;
        std::sort(sorted.begin(), sorted.end());
        positions_usable = std::adjacent_find(sorted.begin(), sorted.end(), [](double a, double b) {
                               return std::abs(a - b) < 1e-6;
                           }) == sorted.end();
    }

    std::vector<std::size_t> order(slices.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    double slice_spacing = 0.0;
    if (positions_usable) {
        std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return keys[a] < keys[b]; });
        if (order.size() > 1) {
            std::vector<double> gaps;
            for (std::size_t i = 1; i < order.size(); ++i) gaps.push_back(keys[order[i]] - keys[order[i - 1]]);
            std::nth_element(gaps.begin(), gaps.begin() + static_cast<std::ptrdiff_t>(gaps.size() / 2), gaps.end());
            slice_spacing = gaps[gaps.size() / 2];
        }
    } else {
        std::set<int> numbers;
        for (const auto& s : slices) {
            if (!s.instance_number) throw IngestError("slice order cannot be determined (no positions or instance numbers)" + where);
            numbers.insert(*s.instance_number);
        }
        if (numbers.size() != slices.size()) throw IngestError("duplicate slice positions and instance numbers" + where);
        std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
            return *slices[a].instance_number < *slices[b].instance_number;
        });
    }
    if (slice_spacing <= 0.0) {
        slice_spacing = first.spacing_between_slices.value_or(first.slice_thickness.value_or(1.0));
    }

    const Shape3 shape{first.rows, first.columns, static_cast<std::int64_t>(slices.size())};
    std::vector<float> data(static_cast<std::size_t>(shape.voxels()));
    for (std::size_t k = 0; k < order.size(); ++k) {
        const auto& px = slices[order[k]].pixels;
        for (std::int64_t i = 0; i < shape.h; ++i) {
            for (std::int64_t j = 0; j < shape.w; ++j) {
                data[static_cast<std::size_t>((i * shape.w + j) * shape.d) + k] =
                    px[static_cast<std::size_t>(i * shape.w + j)];
            }
        }
    }

    // Ascending along a normal that points inferior means superior-first.
    const bool superior_first = positions_usable && normal[2] < 0.0 && std::abs(normal[2]) >= std::abs(normal[0])
                             && std::abs(normal[2]) >= std::abs(normal[1]);
    const Spacing spacing{first.pixel_spacing[0], first.pixel_spacing[1], std::abs(slice_spacing)};
    Volume v(shape, std::move(data), spacing, superior_first ? "HWd" : kCanonicalOrientation);
    if (!v.all_finite()) throw IngestError("non-finite voxel values" + where);
    return v;
}

std::filesystem::path convert_series_to_nifti(const std::filesystem::path& dir, const std::filesystem::path& out)
{
    const Volume v = load_dicom_series(dir);
    return write_nifti(v, out);
}

}  // namespace pasnet::io
