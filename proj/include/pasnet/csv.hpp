#pragma once

#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

namespace pasnet {

inline constexpr int kFormatVersion = 1;

/// A parsed CSV table addressed by column name. Lines starting with '#'
/// before the header carry "key=value" metadata (e.g. format_version).
struct CsvTable {
    std::vector<std::string> header;
    std::vector<std::vector<std::string>> rows;
    std::map<std::string, std::string> meta;

    /// Column index, or nullopt when absent.
    [[nodiscard]] std::optional<std::size_t> column(const std::string& name) const;
    /// Column index; throws FormatError naming `source` when absent.
    [[nodiscard]] std::size_t require_column(const std::string& name, const std::string& source) const;
};

/// Throws IoError when unreadable, FormatError on ragged rows or a
/// format_version newer than this build understands.
[[nodiscard]] CsvTable read_csv(const std::filesystem::path& path);

/// Writes header + rows, preceded by "# format_version=1" and any `meta`.
/// The write goes to a temporary sibling that is renamed into place.
void write_csv(const std::filesystem::path& path, const std::vector<std::string>& header,
               const std::vector<std::vector<std::string>>& rows, const std::map<std::string, std::string>& meta = {});

/// Appends one row under an exclusive advisory lock, writing the versioned
/// header first when the file is new or empty.
void append_csv_row_locked(const std::filesystem::path& path, const std::vector<std::string>& header,
                           const std::vector<std::string>& row);

[[nodiscard]] std::string csv_escape(const std::string& field);
[[nodiscard]] std::vector<std::string> csv_split(const std::string& line);

/// Shortest round-tripping text for a double ("nan" for missing values).
[[nodiscard]] std::string format_double(double v);
[[nodiscard]] double parse_double(const std::string& s);

}  // namespace pasnet
