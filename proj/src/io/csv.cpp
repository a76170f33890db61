#include "pasnet/csv.hpp"

#include <fcntl.h>
#include <sys/file.h>
#include <unistd.h>

#include <charconv>
#include <cmath>
#include <fstream>
#include <limits>
#include <sstream>

#include "pasnet/errors.hpp"

namespace pasnet {

std::optional<std::size_t> CsvTable::column(const std::string& name) const
{
    for (std::size_t i = 0; i < header.size(); ++i) {
        if (header[i] == name) return i;
    }
    return std::nullopt;
}

std::size_t CsvTable::require_column(const std::string& name, const std::string& source) const
{
    const auto c = column(name);
    if (!c) throw FormatError(source + ": missing column '" + name + "'");
    return *c;
}

std::string csv_escape(const std::string& field)
{
    if (field.find_first_of(",\"\n") == std::string::npos) return field;
    std::string out = "\"";
    for (char c : field) {
        if (c == '"') out += '"';
        out += c;
    }
    out += '"';
    return out;
}

std::vector<std::string> csv_split(const std::string& line)
{
    std::vector<std::string> out;
    std::string cur;
    bool quoted = false;
    for (std::size_t i = 0; i < line.size(); ++i) {
        const char c = line[i];
        if (quoted) {
            if (c == '"' && i + 1 < line.size() && line[i + 1] == '"') {
                cur += '"';
                ++i;
            } else if (c == '"') {
                quoted = false;
            } else {
                cur += c;
            }
        } else if (c == '"') {
            quoted = true;
        } else if (c == ',') {
            out.push_back(std::move(cur));
            cur.clear();
        } else if (c != '\r') {
            cur += c;
        }
    }
    out.push_back(std::move(cur));
    return out;
}

CsvTable read_csv(const std::filesystem::path& path)
{
    std::ifstream in(path);
    if (!in) throw IoError("cannot read " + path.string());
    CsvTable t;
    std::string line;
    bool have_header = false;
    while (std::getline(in, line)) {
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (!have_header && !line.empty() && line[0] == '#') {
            std::istringstream ss(line.substr(1));
            std::string kv;
            while (ss >> kv) {
                const auto eq = kv.find('=');
                if (eq != std::string::npos) t.meta[kv.substr(0, eq)] = kv.substr(eq + 1);
            }
            continue;
        }
        if (line.empty()) continue;
        auto fields = csv_split(line);
        if (!have_header) {
            t.header = std::move(fields);
            have_header = true;
            continue;
        }
        if (fields.size() != t.header.size()) {
            throw FormatError(path.string() + ": row has " + std::to_string(fields.size()) + " fields, header has "
                              + std::to_string(t.header.size()));
        }
        t.rows.push_back(std::move(fields));
    }
    if (!have_header) throw FormatError(path.string() + ": no header line");
    if (const auto it = t.meta.find("format_version"); it != t.meta.end()) {
        if (std::stoi(it->second) > kFormatVersion) {
            throw FormatError(path.string() + ": unsupported format_version " + it->second);
        }
    }
    return t;
}

namespace {

std::string join_row(const std::vector<std::string>& row)
{
    std::string out;
    for (std::size_t i = 0; i < row.size(); ++i) {
        if (i) out += ',';
        out += csv_escape(row[i]);
    }
    return out;
}

}  // namespace

void write_csv(const std::filesystem::path& path, const std::vector<std::string>& header,
               const std::vector<std::vector<std::string>>& rows, const std::map<std::string, std::string>& meta)
{
    if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
    const auto tmp = std::filesystem::path(path.string() + ".tmp");
    {
        std::ofstream out(tmp, std::ios::trunc);
        if (!out) throw IoError("cannot write " + path.string());
        out << "# format_version=" << kFormatVersion;
        for (const auto& [k, v] : meta) out << ' ' << k << '=' << v;
        out << '\n' << join_row(header) << '\n';
        for (const auto& r : rows) out << join_row(r) << '\n';
        if (!out) throw IoError("short write to " + path.string());
    }
    std::filesystem::rename(tmp, path);
}

void append_csv_row_locked(const std::filesystem::path& path, const std::vector<std::string>& header,
                           const std::vector<std::string>& row)
{
    if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
    const int fd = ::open(path.c_str(), O_WRONLY | O_CREAT | O_APPEND, 0644);
    if (fd < 0) throw IoError("cannot open " + path.string() + " for append");
    if (::flock(fd, LOCK_EX) != 0) {
        ::close(fd);
        throw IoError("cannot lock " + path.string());
    }
    std::string text;
    if (::lseek(fd, 0, SEEK_END) == 0) {
        text += "# format_version=" + std::to_string(kFormatVersion) + "\n" + join_row(header) + "\n";
    }
    text += join_row(row) + "\n";
    const auto written = ::write(fd, text.data(), text.size());
    ::flock(fd, LOCK_UN);
    ::close(fd);
    if (written != static_cast<ssize_t>(text.size())) throw IoError("short append to " + path.string());
}

std::string format_double(double v)
{
    if (std::isnan(v)) return "nan";
    char buf[64];
    const auto res = std::to_chars(buf, buf + sizeof(buf), v);
    return std::string(buf, res.ptr);
}

double parse_double(const std::string& s)
{
    if (s.empty() || s == "nan" || s == "NA") return std::numeric_limits<double>::quiet_NaN();
    double v = 0.0;
    const auto res = std::from_chars(s.data(), s.data() + s.size(), v);
    if (res.ec != std::errc{} || res.ptr != s.data() + s.size()) throw FormatError("not a number: '" + s + "'");
    return v;
}

}  // namespace pasnet
