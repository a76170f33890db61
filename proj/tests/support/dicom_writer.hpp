#pragma once

// Minimal DICOM Part-10 writer for test fixtures. Independent of the reader
// under test: it only knows how to lay out the handful of elements a
// single-frame grayscale slice needs.

#include <array>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <optional>
#include <string>
#include <vector>

namespace pasnet::testing {

struct FixtureSlice {
    std::string series_uid = "1.2.3.4.5";
    std::optional<int> instance_number;
    std::optional<std::array<double, 3>> position;
    std::array<double, 6> orientation{1, 0, 0, 0, 1, 0};
    int rows = 0;
    int columns = 0;
    std::array<double, 2> pixel_spacing{0.75, 0.8};
    double slice_thickness = 3.0;
    std::vector<std::int16_t> pixels;   // row-major rows x columns
    bool explicit_vr = true;
    bool include_pixels = true;
    int frames = 1;
    bool include_sequence = true;
};

class DicomFixtureWriter {
public:
    static void write(const FixtureSlice& s, const std::filesystem::path& file)
    {
        std::vector<char> out(128, 0);
        out.insert(out.end(), {'D', 'I', 'C', 'M'});
        const std::string ts = s.explicit_vr ? "1.2.840.10008.1.2.1" : "1.2.840.10008.1.2";
        element(out, 0x0002, 0x0010, "UI", padded(ts, '\0'), true);

        const bool ex = s.explicit_vr;
        element(out, 0x0008, 0x0016, "UI", padded("1.2.840.10008.5.1.4.1.1.4", '\0'), ex);
        if (s.include_sequence) sequence(out, ex);
        element(out, 0x0018, 0x0050, "DS", padded(num(s.slice_thickness), ' '), ex);
        element(out, 0x0020, 0x000E, "UI", padded(s.series_uid, '\0'), ex);
        if (s.instance_number) element(out, 0x0020, 0x0013, "IS", padded(std::to_string(*s.instance_number), ' '), ex);
        if (s.position) {
            const auto& p = *s.position;
            element(out, 0x0020, 0x0032, "DS", padded(num(p[0]) + "\\" + num(p[1]) + "\\" + num(p[2]), ' '), ex);
        }
        std::string o;
        for (std::size_t i = 0; i < 6; ++i) o += (i ? "\\" : "") + num(s.orientation[i]);
        element(out, 0x0020, 0x0037, "DS", padded(o, ' '), ex);
        element(out, 0x0028, 0x0002, "US", u16(1), ex);
        if (s.frames != 1) element(out, 0x0028, 0x0008, "IS", padded(std::to_string(s.frames), ' '), ex);
        element(out, 0x0028, 0x0010, "US", u16(static_cast<std::uint16_t>(s.rows)), ex);
        element(out, 0x0028, 0x0011, "US", u16(static_cast<std::uint16_t>(s.columns)), ex);
        element(out, 0x0028, 0x0030, "DS", padded(num(s.pixel_spacing[0]) + "\\" + num(s.pixel_spacing[1]), ' '), ex);
        element(out, 0x0028, 0x0100, "US", u16(16), ex);
        element(out, 0x0028, 0x0101, "US", u16(16), ex);
        element(out, 0x0028, 0x0102, "US", u16(15), ex);
        element(out, 0x0028, 0x0103, "US", u16(1), ex);
        if (s.include_pixels) {
            std::string px(s.pixels.size() * 2, '\0');
            std::memcpy(px.data(), s.pixels.data(), px.size());
            element(out, 0x7FE0, 0x0010, "OW", px, ex);
        }
        std::ofstream f(file, std::ios::binary);
        f.write(out.data(), static_cast<std::streamsize>(out.size()));
    }

private:
    static std::string num(double v)
    {
        char buf[32];
        std::snprintf(buf, sizeof(buf), "%g", v);
        return buf;
    }
    static std::string padded(std::string s, char pad)
    {
        if (s.size() % 2) s += pad;
        return s;
    }
    static std::string u16(std::uint16_t v)
    {
        std::string s(2, '\0');
        std::memcpy(s.data(), &v, 2);
        return s;
    }
    static void put16(std::vector<char>& out, std::uint16_t v)
    {
        out.push_back(static_cast<char>(v & 0xFF));
        out.push_back(static_cast<char>(v >> 8));
    }
    static void put32(std::vector<char>& out, std::uint32_t v)
    {
        for (int i = 0; i < 4; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xFF));
    }
    static void element(std::vector<char>& out, std::uint16_t g, std::uint16_t e, const std::string& vr,
                        const std::string& value, bool explicit_vr)
    {
        put16(out, g);
        put16(out, e);
        if (explicit_vr) {
            out.insert(out.end(), vr.begin(), vr.end());
            if (vr == "OB" || vr == "OW" || vr == "SQ" || vr == "UN") {
                put16(out, 0);
                put32(out, static_cast<std::uint32_t>(value.size()));
            } else {
                put16(out, static_cast<std::uint16_t>(value.size()));
            }
        } else {
            put32(out, static_cast<std::uint32_t>(value.size()));
        }
        out.insert(out.end(), value.begin(), value.end());
    }
    /// Referenced image sequence with undefined lengths, one nested item.
    static void sequence(std::vector<char>& out, bool explicit_vr)
    {
        put16(out, 0x0008);
        put16(out, 0x1140);
        if (explicit_vr) {
            out.insert(out.end(), {'S', 'Q'});
            put16(out, 0);
        }
        put32(out, 0xFFFFFFFFu);
        put16(out, 0xFFFE);
        put16(out, 0xE000);
        put32(out, 0xFFFFFFFFu);
        element(out, 0x0008, 0x1150, "UI", padded("1.2.3", '\0'), explicit_vr);
        element(out, 0x0008, 0x1155, "UI", padded("9.8.7.6", '\0'), explicit_vr);
        put16(out, 0xFFFE);
        put16(out, 0xE00D);
        put32(out, 0);
        put16(out, 0xFFFE);
        put16(out, 0xE0DD);
        put32(out, 0);
    }
};

}  // namespace pasnet::testing
