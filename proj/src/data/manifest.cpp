#include "pasnet/manifest.hpp"

#include <algorithm>
#include <map>
#include <unordered_map>
#include <unordered_set>

#include "pasnet/csv.hpp"
#include "pasnet/errors.hpp"

namespace pasnet {

std::string_view to_string(Split s) noexcept
{
    switch (s) {
    case Split::Train: return "train";
    case Split::Val: return "val";
    case Split::Test: return "test";
    default: return "unassigned";
    }
}

std::string_view to_string(Provenance p) noexcept
{
    return p == Provenance::Original ? "original" : "augmented";
}

Split parse_split(std::string_view s)
{
    if (s == "train") return Split::Train;
    if (s == "val") return Split::Val;
    if (s == "test") return Split::Test;
    if (s == "unassigned" || s.empty()) return Split::Unassigned;
    throw DataError("unknown split '" + std::string(s) + "'");
}

Provenance parse_provenance(std::string_view s)
{
    if (s == "original" || s.empty()) return Provenance::Original;
    if (s == "augmented") return Provenance::Augmented;
    throw DataError("unknown provenance '" + std::string(s) + "'");
}

Manifest::Manifest(std::vector<CaseRecord> records, std::uint64_t seed) : records_(std::move(records)), seed_(seed)
{
    validate();
}

void Manifest::validate() const
{
    std::unordered_set<std::string> ids;
    std::unordered_map<std::string, Split> patient_split;
    for (const auto& r : records_) {
        if (r.case_id.empty()) throw DataError("record with empty case_id");
        if (!ids.insert(r.case_id).second) throw DataError("duplicate case_id '" + r.case_id + "'");
        if (r.label != kLabelNormal && r.label != kLabelPas) {
            throw DataError("case '" + r.case_id + "' has label " + std::to_string(r.label) + " (expected 0 or 1)");
        }
        if (r.provenance == Provenance::Augmented && r.split != Split::Train) {
            throw DataError("augmented case '" + r.case_id + "' is outside the training split");
        }
        if (r.split == Split::Unassigned) continue;
        const auto [it, inserted] = patient_split.emplace(r.patient_id, r.split);
        if (!inserted && it->second != r.split) {
            throw DataError("patient '" + r.patient_id + "' appears in both " + std::string(to_string(it->second))
                            + " and " + std::string(to_string(r.split)));
        }
    }
}

std::vector<const CaseRecord*> Manifest::in_split(Split s) const
{
    std::vector<const CaseRecord*> out;
    for (const auto& r : records_) {
        if (r.split == s) out.push_back(&r);
    }
    return out;
}

std::size_t Manifest::count(Split s) const
{
    return static_cast<std::size_t>(
        std::count_if(records_.begin(), records_.end(), [s](const CaseRecord& r) { return r.split == s; }));
}

std::size_t Manifest::count(Split s, int label) const
{
    std::size_t n = 0;
    for (const auto& r : records_) n += (r.split == s && r.label == label) ? 1 : 0;
    return n;
}

const CaseRecord& Manifest::find(std::string_view case_id) const
{
    for (const auto& r : records_) {
        if (r.case_id == case_id) return r;
    }
    throw DataError("unknown case '" + std::string(case_id) + "'");
}

Manifest Manifest::with_records(std::vector<CaseRecord> records) const
{
    return Manifest(std::move(records), seed_);
}

Manifest read_manifest(const std::filesystem::path& csv)
{
    const CsvTable t = read_csv(csv);
    const std::string src = csv.string();
    const auto c_id = t.require_column("case_id", src);
    const auto c_patient = t.require_column("patient_id", src);
    const auto c_path = t.require_column("path", src);
    const auto c_label = t.require_column("label", src);
    const auto c_split = t.column("split");
    const auto c_prov = t.column("provenance");
    const auto base = csv.parent_path();

    std::vector<CaseRecord> records;
    records.reserve(t.rows.size());
    for (const auto& row : t.rows) {
        CaseRecord r;
        r.case_id = row[c_id];
        r.patient_id = row[c_patient];
        r.path = row[c_path];
        if (!r.path.empty() && r.path.is_relative()) r.path = base / r.path;
        try {
            r.label = std::stoi(row[c_label]);
        } catch (const std::exception&) {
            throw DataError(src + ": case '" + r.case_id + "' has a non-integer label");
        }
        if (c_split) r.split = parse_split(row[*c_split]);
        if (c_prov) r.provenance = parse_provenance(row[*c_prov]);
        records.push_back(std::move(r));
    }
    std::uint64_t seed = 0;
    if (const auto it = t.meta.find("seed"); it != t.meta.end()) seed = std::stoull(it->second);
    return Manifest(std::move(records), seed);
}

void write_manifest(const Manifest& m, const std::filesystem::path& csv)
{
    // Paths under the manifest's directory are stored relative to it so the
    // tree can be moved; anything else is stored absolute.
    namespace fs = std::filesystem;
    const auto base = fs::absolute(csv).parent_path().lexically_normal();
    const auto stored = [&](const fs::path& p) {
        if (p.empty()) return std::string();
        const auto abs = fs::absolute(p).lexically_normal();
        const auto rel = abs.lexically_relative(base);
        if (!rel.empty() && *rel.begin() != "..") return rel.string();
        return abs.string();
    };
    std::vector<std::vector<std::string>> rows;
    rows.reserve(m.size());
    for (const auto& r : m.records()) {
        rows.push_back({r.case_id, r.patient_id, stored(r.path), std::to_string(r.label),
                        std::string(to_string(r.split)), std::string(to_string(r.provenance))});
    }
    write_csv(csv, {"case_id", "patient_id", "path", "label", "split", "provenance"}, rows,
              {{"seed", std::to_string(m.seed())}});
}

}  // namespace pasnet
