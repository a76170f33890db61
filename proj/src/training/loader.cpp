#include "pasnet/errors.hpp"
#include "pasnet/nifti.hpp"
#include "pasnet/training.hpp"

namespace pasnet::train {

BatchLoader::BatchLoader(const Manifest& manifest, std::size_t cache_bytes) : manifest_(manifest), budget_(cache_bytes) {}

BatchLoader::Batch BatchLoader::load(const std::vector<std::size_t>& indices)
{
    std::vector<torch::Tensor> xs;
    std::vector<std::int64_t> ys;
    xs.reserve(indices.size());
    for (const auto idx : indices) {
        const CaseRecord& rec = manifest_.records().at(idx);
        ys.push_back(rec.label);
        if (auto it = cache_.find(idx); it != cache_.end()) {
            xs.push_back(it->second);
            continue;
        }
        Volume v;
        try {
            v = io::read_nifti(rec.path);
        } catch (const Error& e) {
            throw DataError("case " + rec.case_id + ": cannot load volume: " + e.what());
        }
        const auto& s = v.shape();
        auto t = torch::from_blob(const_cast<float*>(v.data().data()), {1, s.h, s.w, s.d}, torch::kFloat32).clone();
        const auto bytes = static_cast<std::size_t>(t.numel()) * sizeof(float);
        if (used_ + bytes <= budget_) {
            cache_.emplace(idx, t);
            used_ += bytes;
        }
        xs.push_back(std::move(t));
    }
    Batch b;
    try {
        b.x = torch::stack(xs);
    } catch (const c10::Error&) {
        throw DataError("volumes in one batch differ in shape; run preprocess first");
    }
    b.y = torch::tensor(ys, torch::kInt64);
    return b;
}

}  // namespace pasnet::train
