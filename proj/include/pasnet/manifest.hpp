#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

namespace pasnet {

enum class Split { Train, Val, Test, Unassigned };
enum class Provenance { Original, Augmented };

inline constexpr int kLabelNormal = 0;
inline constexpr int kLabelPas = 1;

[[nodiscard]] std::string_view to_string(Split s) noexcept;
[[nodiscard]] std::string_view to_string(Provenance p) noexcept;
/// Throws DataError for unknown names.
[[nodiscard]] Split parse_split(std::string_view s);
[[nodiscard]] Provenance parse_provenance(std::string_view s);

struct CaseRecord {
    std::string case_id;
    std::string patient_id;
    std::filesystem::path path;
    int label = kLabelNormal;
    Split split = Split::Unassigned;
    Provenance provenance = Provenance::Original;

    friend bool operator==(const CaseRecord&, const CaseRecord&) = default;
};

/// Ordered dataset index. Every constructor and mutation path re-checks:
/// unique case ids, labels in {0,1}, augmented records only in train, and
/// no patient spread over two assigned splits.
class Manifest {
public:
    Manifest() = default;
    /// Throws DataError when the records violate an invariant.
    Manifest(std::vector<CaseRecord> records, std::uint64_t seed = 0);

    [[nodiscard]] const std::vector<CaseRecord>& records() const noexcept { return records_; }
    [[nodiscard]] std::uint64_t seed() const noexcept { return seed_; }
    [[nodiscard]] std::size_t size() const noexcept { return records_.size(); }

    [[nodiscard]] std::vector<const CaseRecord*> in_split(Split s) const;
    [[nodiscard]] std::size_t count(Split s) const;
    [[nodiscard]] std::size_t count(Split s, int label) const;
    [[nodiscard]] const CaseRecord& find(std::string_view case_id) const;

    /// Copy of this manifest with a new record list (re-validated).
    [[nodiscard]] Manifest with_records(std::vector<CaseRecord> records) const;

    friend bool operator==(const Manifest&, const Manifest&) = default;

private:
    void validate() const;

    std::vector<CaseRecord> records_;
    std::uint64_t seed_ = 0;
};

/// CSV with header `case_id,patient_id,path,label,split,provenance`.
/// Relative paths are resolved against the manifest's directory on read.
[[nodiscard]] Manifest read_manifest(const std::filesystem::path& csv);
void write_manifest(const Manifest& m, const std::filesystem::path& csv);

}  // namespace pasnet
