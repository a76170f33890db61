#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <numeric>

#include "pasnet/datamodule.hpp"
#include "pasnet/errors.hpp"
#include "pasnet/random.hpp"

namespace pasnet::data {

void SplitSpec::validate() const
{
    if (!(train > 0 && val > 0 && test > 0)) throw ConfigError("split ratios must all be positive");
    if (std::abs(train + val + test - 1.0) > 1e-9) throw ConfigError("split ratios must sum to 1");
}

std::array<std::size_t, 3> split_targets(std::size_t class_total, const SplitSpec& spec)
{
    const std::array<double, 3> ratios{spec.train, spec.val, spec.test};
    std::array<std::size_t, 3> out{};
    std::array<double, 3> remainder{};
    std::size_t assigned = 0;
    for (std::size_t s = 0; s < 3; ++s) {
        const double exact = static_cast<double>(class_total) * ratios[s];
        out[s] = static_cast<std::size_t>(std::floor(exact + 1e-9));
        remainder[s] = exact - static_cast<double>(out[s]);
        assigned += out[s];
    }
    std::array<std::size_t, 3> order{0, 1, 2};
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return remainder[a] > remainder[b]; });
    for (std::size_t i = 0; assigned < class_total; ++i, ++assigned) ++out[order[i % 3]];
    return out;
}

namespace {

struct Patient {
    std::string id;
    int label = 0;
    std::vector<std::size_t> records;
};

constexpr std::array<Split, 3> kSplits{Split::Train, Split::Val, Split::Test};

}  // namespace

Manifest stratified_split(const Manifest& manifest, const SplitSpec& spec)
{
    spec.validate();
    std::vector<Patient> patients;
    std::map<std::string, std::size_t> by_id;
    std::array<std::size_t, 2> class_total{};
    const auto& records = manifest.records();
    for (std::size_t i = 0; i < records.size(); ++i) {
        const auto& r = records[i];
        if (r.provenance == Provenance::Augmented) {
            throw DataError("cannot split a manifest that already contains augmented case '" + r.case_id + "'");
        }
        const auto [it, inserted] = by_id.emplace(r.patient_id, patients.size());
        if (inserted) patients.push_back(Patient{r.patient_id, r.label, {}});
        Patient& p = patients[it->second];
        if (p.label != r.label) {
            throw DataError("patient '" + r.patient_id + "' has scans with conflicting labels");
        }
        p.records.push_back(i);
        ++class_total[static_cast<std::size_t>(r.label)];
    }

    std::array<std::array<std::size_t, 3>, 2> target{};
    for (std::size_t c = 0; c < 2; ++c) target[c] = split_targets(class_total[c], spec);

    Rng rng(mix_seed(spec.seed, 0x5B17));
    rng.shuffle(patients);
    std::stable_sort(patients.begin(), patients.end(),
                     [](const Patient& a, const Patient& b) { return a.records.size() > b.records.size(); });

    std::array<std::array<std::size_t, 3>, 2> filled{};
    std::vector<CaseRecord> out = records;
    for (const auto& p : patients) {
        const auto c = static_cast<std::size_t>(p.label);
        std::size_t best = 0;
        double best_room = -std::numeric_limits<double>::infinity();
        for (std::size_t s = 0; s < 3; ++s) {
            const double t = static_cast<double>(target[c][s]);
            const double room = t > 0 ? (t - static_cast<double>(filled[c][s])) / t
                                      : -static_cast<double>(filled[c][s]) - 1.0;
            if (room > best_room) {
                best_room = room;
                best = s;
            }
        }
        filled[c][best] += p.records.size();
        for (const auto idx : p.records) out[idx].split = kSplits[best];
    }
    return Manifest(std::move(out), spec.seed);
}

std::vector<std::vector<std::size_t>> plan_epoch(const Manifest& manifest, Split split, std::size_t batch_size,
                                                 bool shuffle, std::uint64_t seed, std::uint64_t epoch)
{
    if (batch_size == 0) throw ConfigError("batch size must be >= 1");
    std::vector<std::size_t> idx;
    const auto& records = manifest.records();
    for (std::size_t i = 0; i < records.size(); ++i) {
        if (records[i].split == split) idx.push_back(i);
    }
    if (shuffle) {
        Rng rng(mix_seed(seed, 0xBA7C0000ULL + epoch));
        rng.shuffle(idx);
    }
    std::vector<std::vector<std::size_t>> batches;
    for (std::size_t start = 0; start < idx.size(); start += batch_size) {
        const auto end = std::min(idx.size(), start + batch_size);
        batches.emplace_back(idx.begin() + static_cast<std::ptrdiff_t>(start), idx.begin() + static_cast<std::ptrdiff_t>(end));
    }
    return batches;
}

}  // namespace pasnet::data
