#include <algorithm>
#include <cmath>
#include <map>
#include <set>

#include "pasnet/csv.hpp"
#include "pasnet/datamodule.hpp"
#include "pasnet/errors.hpp"
#include "pasnet/nifti.hpp"
#include "pasnet/random.hpp"

namespace pasnet::data {

void AugmentationSpec::validate() const
{
    for (const int r : rotations_deg) {
        if (r != 90 && r != 180 && r != 270) throw ConfigError("rotations must be drawn from {90, 180, 270}");
    }
    if (!(zoom_min > 1.0 && zoom_max >= zoom_min)) throw ConfigError("zoom range must lie in (1, inf)");
    if (!(probability > 0.0 && probability <= 1.0)) throw ConfigError("component probability must be in (0, 1]");
    if (!flip_h && !flip_w && rotations_deg.empty() && zoom_max <= 1.0) {
        throw ConfigError("augmentation spec enables no transform");
    }
}

AugmentationParams draw_augmentation(const AugmentationSpec& spec, std::uint64_t stream)
{
    Rng rng(mix_seed(spec.seed, stream));
    const auto draw_rotation = [&] {
        return spec.rotations_deg[static_cast<std::size_t>(rng.below(spec.rotations_deg.size()))];
    };
    AugmentationParams p;
    // Fixed draw order keeps the stream layout stable.
    const bool h = rng.coin(spec.probability);
    const bool w = rng.coin(spec.probability);
    const bool r = rng.coin(spec.probability);
    const bool z = rng.coin(spec.probability);
    p.flip_h = spec.flip_h && h;
    p.flip_w = spec.flip_w && w;
    if (!spec.rotations_deg.empty() && r) p.rot_deg = draw_rotation();
    if (z) p.zoom = rng.uniform(spec.zoom_min, spec.zoom_max);

    if (p.is_identity()) {
        std::vector<int> enabled;
        if (spec.flip_h) enabled.push_back(0);
        if (spec.flip_w) enabled.push_back(1);
        if (!spec.rotations_deg.empty()) enabled.push_back(2);
        enabled.push_back(3);
        switch (enabled[static_cast<std::size_t>(rng.below(enabled.size()))]) {
        case 0: p.flip_h = true; break;
        case 1: p.flip_w = true; break;
        case 2: p.rot_deg = draw_rotation(); break;
        default: p.zoom = rng.uniform(spec.zoom_min, spec.zoom_max); break;
        }
    }
    // Both flips followed by a half turn compose to the identity.
    if (p.flip_h && p.flip_w && p.rot_deg == 180 && p.zoom == 1.0) p.rot_deg = 0;
    return p;
}

Volume flip(const Volume& v, int axis)
{
    const Shape3& s = v.shape();
    std::vector<float> out(v.size());
    std::size_t o = 0;
    for (std::int64_t i = 0; i < s.h; ++i) {
        for (std::int64_t j = 0; j < s.w; ++j) {
            for (std::int64_t k = 0; k < s.d; ++k) {
                const auto si = axis == 0 ? s.h - 1 - i : i;
                const auto sj = axis == 1 ? s.w - 1 - j : j;
                const auto sk = axis == 2 ? s.d - 1 - k : k;
                out[o++] = v.at(si, sj, sk);
            }
        }
    }
    return Volume(s, std::move(out), v.spacing(), v.orientation());
}

Volume rotate90(const Volume& v, int quarter_turns)
{
    const int q = ((quarter_turns % 4) + 4) % 4;
    if (q == 0) return v;
    const Shape3& s = v.shape();
    if (q % 2 == 1 && s.h != s.w) {
        throw DataError("in-plane rotation by 90/270 degrees needs a square H-W plane");
    }
    std::vector<float> out(v.size());
    std::size_t o = 0;
    for (std::int64_t i = 0; i < s.h; ++i) {
        for (std::int64_t j = 0; j < s.w; ++j) {
            std::int64_t si = i;
            std::int64_t sj = j;
            switch (q) {
            case 1: si = j; sj = s.w - 1 - i; break;
            case 2: si = s.h - 1 - i; sj = s.w - 1 - j; break;
            default: si = s.h - 1 - j; sj = i; break;
            }
            for (std::int64_t k = 0; k < s.d; ++k) out[o++] = v.at(si, sj, k);
        }
    }
    return Volume(s, std::move(out), v.spacing(), v.orientation());
}

Volume zoom(const Volume& v, double factor)
{
    if (factor == 1.0) return v;
    const Shape3& s = v.shape();
    struct Lerp {
        std::int64_t lo = 0;
        std::int64_t hi = 0;
        double t = 0.0;
    };
    const auto axis = [&](std::int64_t n) {
        std::vector<Lerp> out(static_cast<std::size_t>(n));
        const double c = (static_cast<double>(n) - 1.0) / 2.0;
        for (std::int64_t o = 0; o < n; ++o) {
            const double x = std::clamp(c + (static_cast<double>(o) - c) / factor, 0.0, static_cast<double>(n - 1));
            const auto lo = static_cast<std::int64_t>(std::floor(x));
            out[static_cast<std::size_t>(o)] = {lo, std::min(lo + 1, n - 1), x - static_cast<double>(lo)};
        }
        return out;
    };
    const auto ah = axis(s.h);
    const auto aw = axis(s.w);
    const auto ad = axis(s.d);
    std::vector<float> out(v.size());
    std::size_t o = 0;
    for (const auto& li : ah) {
        for (const auto& lj : aw) {
            for (const auto& lk : ad) {
                double acc = 0.0;
                for (int di = 0; di < 2; ++di) {
                    const double wi = di ? li.t : 1.0 - li.t;
                    if (wi == 0.0) continue;
                    const auto i = di ? li.hi : li.lo;
                    for (int dj = 0; dj < 2; ++dj) {
                        const double wj = dj ? lj.t : 1.0 - lj.t;
                        if (wj == 0.0) continue;
                        const auto j = dj ? lj.hi : lj.lo;
                        acc += wi * wj * ((1.0 - lk.t) * v.at(i, j, lk.lo) + lk.t * v.at(i, j, lk.hi));
                    }
                }
                out[o++] = static_cast<float>(acc);
            }
        }
    }
    return Volume(s, std::move(out), v.spacing(), v.orientation());
}

Volume augment(const Volume& v, const AugmentationParams& params)
{
    Volume out = v;
    if (params.flip_h) out = flip(out, 0);
    if (params.flip_w) out = flip(out, 1);
    if (params.rot_deg != 0) out = rotate90(out, params.rot_deg / 90);
    if (params.zoom != 1.0) out = zoom(out, params.zoom);
    return out;
}

OversampleResult oversample_minority(const Manifest& manifest, const AugmentationSpec& spec,
                                     const std::filesystem::path& augment_dir)
{
    spec.validate();
    const std::size_t normal = manifest.count(Split::Train, kLabelNormal);
    const std::size_t pas = manifest.count(Split::Train, kLabelPas);
    if (normal == pas) {
        if (normal == 0) throw DataError("training split is empty");
        return {manifest, {}};
    }
    const int minority = normal < pas ? kLabelNormal : kLabelPas;
    const std::size_t deficit = normal < pas ? pas - normal : normal - pas;

    std::vector<const CaseRecord*> sources;
    for (const auto& r : manifest.records()) {
        if (r.split == Split::Train && r.label == minority && r.provenance == Provenance::Original) {
            sources.push_back(&r);
        }
    }
    if (sources.empty()) {
        throw DataError("minority class " + std::to_string(minority) + " has no original training cases to augment");
    }

    std::set<std::string> taken;
    for (const auto& r : manifest.records()) taken.insert(r.case_id);

    std::vector<CaseRecord> records = manifest.records();
    std::vector<AugmentationRecord> augs;
    std::map<std::string, std::size_t> copies;
    for (std::size_t n = 0; n < deficit; ++n) {
        const CaseRecord& src = *sources[n % sources.size()];
        std::string id;
        do {
            id = src.case_id + "_aug" + std::to_string(++copies[src.case_id]);
        } while (!taken.insert(id).second);
        CaseRecord rec;
        rec.case_id = id;
        rec.patient_id = src.patient_id;
        rec.path = augment_dir / (rec.case_id + ".nii");
        rec.label = src.label;
        rec.split = Split::Train;
        rec.provenance = Provenance::Augmented;
        augs.push_back({rec.case_id, src.case_id, draw_augmentation(spec, manifest.records().size() + n)});
        records.push_back(std::move(rec));
    }
    return {manifest.with_records(std::move(records)), std::move(augs)};
}

void materialize_augmentations(const Manifest& manifest, const std::vector<AugmentationRecord>& augmentations)
{
    for (const auto& a : augmentations) {
        const CaseRecord& target = manifest.find(a.case_id);
        const CaseRecord& source = manifest.find(a.source_id);
        const Volume src = io::read_nifti(source.path);
        if (target.path.has_parent_path()) std::filesystem::create_directories(target.path.parent_path());
        io::write_nifti(augment(src, a.params), target.path);
    }
}

void write_augmentation_sidecar(const std::vector<AugmentationRecord>& augmentations, const std::filesystem::path& csv)
{
    std::vector<std::vector<std::string>> rows;
    for (const auto& a : augmentations) {
        rows.push_back({a.case_id, a.source_id, a.params.flip_h ? "1" : "0", a.params.flip_w ? "1" : "0",
                        std::to_string(a.params.rot_deg), format_double(a.params.zoom)});
    }
    write_csv(csv, {"case_id", "source_id", "flip_h", "flip_w", "rot_deg", "zoom"}, rows);
}

std::vector<AugmentationRecord> read_augmentation_sidecar(const std::filesystem::path& csv)
{
    const CsvTable t = read_csv(csv);
    const auto src = csv.string();
    const auto c_id = t.require_column("case_id", src);
    const auto c_src = t.require_column("source_id", src);
    const auto c_fh = t.require_column("flip_h", src);
    const auto c_fw = t.require_column("flip_w", src);
    const auto c_rot = t.require_column("rot_deg", src);
    const auto c_zoom = t.require_column("zoom", src);
    std::vector<AugmentationRecord> out;
    for (const auto& row : t.rows) {
        AugmentationRecord a;
        a.case_id = row[c_id];
        a.source_id = row[c_src];
        a.params.flip_h = row[c_fh] == "1";
        a.params.flip_w = row[c_fw] == "1";
        a.params.rot_deg = std::stoi(row[c_rot]);
        a.params.zoom = parse_double(row[c_zoom]);
        out.push_back(std::move(a));
    }
    return out;
}

}  // namespace pasnet::data
