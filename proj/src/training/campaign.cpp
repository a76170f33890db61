#include <cmath>
#include <set>

#include "pasnet/csv.hpp"
#include "pasnet/errors.hpp"
#include "pasnet/training.hpp"

namespace pasnet::train {

std::filesystem::path run_dir_for(const std::filesystem::path& out, const std::string& arch, int seed)
{
    return out / arch / ("seed_" + std::to_string(seed));
}

void append_result(const std::filesystem::path& results_csv, const eval::RunRecord& r)
{
    if (results_csv.has_parent_path()) std::filesystem::create_directories(results_csv.parent_path());
    append_csv_row_locked(results_csv, eval::run_csv_header(), eval::run_csv_row(r));
}

CellResult run_cell(const ExperimentConfig& base, const std::string& arch, int seed, const Manifest& manifest,
                    const std::filesystem::path& run_dir, const EpochCallback& on_epoch)
{
    auto mcfg = base.model;
    mcfg.arch = arch;
    auto tcfg = base.train;
    tcfg.seed = static_cast<std::uint64_t>(seed);

    CellResult out;
    out.record.model = arch;
    out.record.seed = seed;
    std::filesystem::create_directories(run_dir);
    try {
        auto model = models::build_model(mcfg, tcfg.seed);
        auto outcome = train(model, mcfg, manifest, tcfg, run_dir, on_epoch);
        auto ev = evaluate_checkpoint(outcome.checkpoint, manifest, Split::Test, tcfg.batch_size);
        write_predictions(ev.predictions, run_dir / "predictions.csv");
        out.record.metrics = ev.metrics;
        out.record.checkpoint = std::filesystem::absolute(outcome.checkpoint);
        out.log = std::move(outcome.log);
    } catch (const TrainingDiverged& e) {
        out.record.status = "failed";
        const double nan = std::nan("");
        out.record.metrics = {nan, std::nullopt, nan, nan, nan};
    }
    eval::write_runs({out.record}, run_dir / "result.csv");
    return out;
}

std::vector<std::pair<std::string, int>> pending_cells(const std::vector<std::string>& archs,
                                                       const std::vector<int>& seeds,
                                                       const std::filesystem::path& results_csv)
{
    std::set<std::pair<std::string, int>> done;
    if (std::filesystem::exists(results_csv)) {
        for (const auto& r : eval::read_runs(results_csv)) done.emplace(r.model, r.seed);
    }
    std::vector<std::pair<std::string, int>> out;
    for (const auto& a : archs) {
        for (const int s : seeds) {
            if (!done.count({a, s})) out.emplace_back(a, s);
        }
    }
    return out;
}

std::vector<eval::RunRecord> run_experiment(const ExperimentConfig& base, const std::vector<std::string>& archs,
                                            const std::vector<int>& seeds, const Manifest& manifest,
                                            const std::filesystem::path& out_dir,
                                            const std::filesystem::path& results_csv, const EpochCallback& on_epoch)
{
    for (const auto& [arch, seed] : pending_cells(archs, seeds, results_csv)) {
        const auto cell = run_cell(base, arch, seed, manifest, run_dir_for(out_dir, arch, seed), on_epoch);
        append_result(results_csv, cell.record);
    }
    std::vector<eval::RunRecord> out;
    for (const auto& r : eval::read_runs(results_csv)) {
        for (const auto& a : archs) {
            if (r.model == a && std::find(seeds.begin(), seeds.end(), r.seed) != seeds.end()) {
                out.push_back(r);
                break;
            }
        }
    }
    return out;
}

}  // namespace pasnet::train
