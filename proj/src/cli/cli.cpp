#include "pasnet/cli.hpp"

#include <CLI11.hpp>

#include <spawn.h>
#include <sys/wait.h>

#include <algorithm>
#include <array>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <set>
#include <sstream>

#include "pasnet/datamodule.hpp"
#include "pasnet/dicom.hpp"
#include "pasnet/errors.hpp"
#include "pasnet/evaluation.hpp"
#include "pasnet/log.hpp"
#include "pasnet/nifti.hpp"
#include "pasnet/orientation.hpp"
#include "pasnet/preprocess.hpp"
#include "pasnet/stats.hpp"
#include "pasnet/synthdata.hpp"
#include "pasnet/training.hpp"

extern char** environ;

namespace pasnet::cli {

namespace fs = std::filesystem;

namespace {

// ---- shared helpers -----------------------------------------------------

std::optional<Shape3> parse_shape(const std::string& s)
{
    Shape3 out;
    char x1 = 0, x2 = 0, rest = 0;
    std::istringstream in(s);
    if (!(in >> out.h >> x1 >> out.w >> x2 >> out.d) || x1 != 'x' || x2 != 'x' || (in >> rest)) return std::nullopt;
    if (out.h < 1 || out.w < 1 || out.d < 1) return std::nullopt;
    return out;
}

const CLI::Validator kShape(
    [](const std::string& s) { return parse_shape(s) ? std::string{} : "expected HxWxD, got '" + s + "'"; },
    "HxWxD");

std::string shape_string(const Shape3& s)
{
    return std::to_string(s.h) + "x" + std::to_string(s.w) + "x" + std::to_string(s.d);
}

/// "0..4" (inclusive) or "0,2,5".
std::vector<int> parse_seeds(const std::string& s)
{
    std::vector<int> out;
    if (const auto dots = s.find(".."); dots != std::string::npos) {
        const int lo = std::stoi(s.substr(0, dots));
        const int hi = std::stoi(s.substr(dots + 2));
        for (int i = lo; i <= hi; ++i) out.push_back(i);
    } else {
        std::istringstream in(s);
        std::string item;
        while (std::getline(in, item, ',')) out.push_back(std::stoi(item));
    }
    return out;
}

const CLI::Validator kSeeds(
    [](const std::string& s) {
        try {
            if (!parse_seeds(s).empty()) return std::string{};
        } catch (const std::exception&) {
        }
        return "expected seeds like 0..4 or 0,1,2, got '" + s + "'";
    },
    "SEEDS");

/// True when `out` exists and --force was not given; logs the skip.
bool keep_existing(const fs::path& out, bool force)
{
    if (force || !fs::exists(out)) return false;
    log::info("skip: " + out.string() + " exists (pass --force to rebuild)");
    return true;
}

fs::path parent_or_dot(const fs::path& p) { return p.has_parent_path() ? p.parent_path() : fs::path("."); }

std::string fmt_num(double v)
{
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.6g", v);
    return buf;
}

// ---- experiment configuration flags ------------------------------------

constexpr std::array kDirectKeys{"epochs", "lr", "batch_size", "width_multiplier", "input_shape", "dropout"};

struct ConfigFlags {
    std::optional<fs::path> file;
    std::map<std::string, std::optional<std::string>> direct;
    std::vector<std::string> sets;

    void add_to(CLI::App* app)
    {
        app->add_option("--config", file, "key = value experiment config")->check(CLI::ExistingFile);
        for (const std::string key : kDirectKeys) {
            std::string flag = "--" + key;
            std::replace(flag.begin(), flag.end(), '_', '-');
            app->add_option(flag, direct[key], "overrides '" + key + "' from the config file");
        }
        app->add_option("--set", sets, "any config key as key=value; repeatable");
    }

    /// Flag values override the file, --set overrides both.
    [[nodiscard]] std::vector<std::pair<std::string, std::string>> overrides() const
    {
        std::vector<std::pair<std::string, std::string>> out;
        for (const auto& [key, value] : direct) {
            if (value) out.emplace_back(key, *value);
        }
        for (const auto& s : sets) {
            const auto eq = s.find('=');
            if (eq == std::string::npos) throw ConfigError("--set expects key=value, got '" + s + "'");
            out.emplace_back(s.substr(0, eq), s.substr(eq + 1));
        }
        return out;
    }

    [[nodiscard]] train::ExperimentConfig resolve() const
    {
        auto cfg = file ? train::read_config_file(*file) : train::ExperimentConfig{};
        for (const auto& [key, value] : overrides()) train::apply_config_value(cfg, key, value);
        return cfg;
    }
};

train::EpochCallback epoch_logger(const std::string& arch, int seed)
{
    return [arch, seed](const train::EpochRecord& e, bool improved) {
        log::info("epoch arch=" + arch + " seed=" + std::to_string(seed) + " epoch=" + std::to_string(e.epoch) +
                  " train_loss=" + fmt_num(e.train_loss) + " train_acc=" + fmt_num(e.train_accuracy) +
                  " val_loss=" + fmt_num(e.val_loss) + " val_acc=" + fmt_num(e.val_accuracy) + " lr=" +
                  fmt_num(e.lr) + (improved ? " best=1" : " best=0"));
    };
}

void log_cell(const eval::RunRecord& r)
{
    log::info("result arch=" + r.model + " seed=" + std::to_string(r.seed) + " status=" + r.status +
              " accuracy=" + fmt_num(r.metrics.accuracy) +
              " auc=" + (r.metrics.auc ? fmt_num(*r.metrics.auc) : std::string("na")) +
              " f1=" + fmt_num(r.metrics.f1_macro));
}

// ---- subcommands --------------------------------------------------------

struct IngestOpts {
    fs::path input;
    fs::path out_dir;
    bool force = false;
};

// The input list is a manifest CSV whose paths name either a DICOM series
// directory or a NIfTI file. Every case becomes <out>/volumes/<id>.nii in
// canonical orientation.
int run_ingest(const IngestOpts& o)
{
    const auto manifest_out = o.out_dir / "manifest.csv";
    if (keep_existing(manifest_out, o.force)) return 0;
    const auto input = read_manifest(o.input);
    fs::create_directories(o.out_dir / "volumes");
    std::vector<CaseRecord> records;
    for (auto rec : input.records()) {
        const auto dest = o.out_dir / "volumes" / (rec.case_id + ".nii");
        if (o.force || !fs::exists(dest)) {
            try {
                if (fs::is_directory(rec.path)) {
                    (void)io::convert_series_to_nifti(rec.path, dest);
                } else {
                    (void)io::write_nifti(io::to_canonical_orientation(io::read_nifti(rec.path)), dest);
                }
            } catch (const Error& e) {
                throw IngestError("case " + rec.case_id + " (" + rec.path.string() + "): " + e.what());
            }
        }
        rec.path = dest;
        rec.split = Split::Unassigned;
        rec.provenance = Provenance::Original;
        records.push_back(std::move(rec));
    }
    write_manifest(Manifest(std::move(records)), manifest_out);
    log::info("ingest cases=" + std::to_string(input.size()) + " manifest=" + manifest_out.string());
    return 0;
}

struct PreprocessOpts {
    fs::path manifest;
    fs::path out_dir;
    std::string shape = shape_string(prep::kTargetShape);
    bool force = false;
};

int run_preprocess(const PreprocessOpts& o)
{
    const auto manifest_out = o.out_dir / "manifest.csv";
    if (keep_existing(manifest_out, o.force)) return 0;
    const auto target = *parse_shape(o.shape);
    const auto input = read_manifest(o.manifest);
    fs::create_directories(o.out_dir / "volumes");
    std::vector<CaseRecord> records;
    for (auto rec : input.records()) {
        const auto dest = o.out_dir / "volumes" / (rec.case_id + ".nii");
        if (o.force || !fs::exists(dest)) {
            try {
                (void)io::write_nifti(prep::preprocess_case(rec, target), dest);
            } catch (const Error& e) {
                throw PreprocessError("case " + rec.case_id + " (" + rec.path.string() + "): " + e.what());
            }
        }
        rec.path = dest;
        records.push_back(std::move(rec));
    }
    write_manifest(input.with_records(std::move(records)), manifest_out);
    log::info("preprocess cases=" + std::to_string(input.size()) + " shape=" + o.shape +
              " manifest=" + manifest_out.string());
    return 0;
}

struct SplitOpts {
    fs::path manifest;
    fs::path out;
    std::uint64_t seed = 0;
    std::vector<double> ratios{0.70, 0.10, 0.20};
    bool force = false;
};

int run_split(const SplitOpts& o)
{
    if (keep_existing(o.out, o.force)) return 0;
    const data::SplitSpec spec{o.ratios[0], o.ratios[1], o.ratios[2], o.seed};
    const auto m = data::stratified_split(read_manifest(o.manifest), spec);
    write_manifest(m, o.out);
    std::string counts;
    for (const auto s : {Split::Train, Split::Val, Split::Test}) {
        counts += " " + std::string(to_string(s)) + "=" + std::to_string(m.count(s, kLabelNormal)) + "/" +
                  std::to_string(m.count(s, kLabelPas));
    }
    log::info("split seed=" + std::to_string(o.seed) + counts + " manifest=" + o.out.string());
    return 0;
}

struct AugmentOpts {
    fs::path manifest;
    fs::path out;
    std::optional<fs::path> augment_dir;
    std::optional<fs::path> sidecar;
    std::uint64_t seed = 0;
    bool force = false;
};

int run_augment(const AugmentOpts& o)
{
    if (keep_existing(o.out, o.force)) return 0;
    const auto dir = o.augment_dir.value_or(parent_or_dot(o.out) / "augmented");
    const auto sidecar = o.sidecar.value_or(parent_or_dot(o.out) / "augmentations.csv");
    data::AugmentationSpec spec;
    spec.seed = o.seed;
    const auto result = data::oversample_minority(read_manifest(o.manifest), spec, dir);
    data::materialize_augmentations(result.manifest, result.augmentations);
    data::write_augmentation_sidecar(result.augmentations, sidecar);
    write_manifest(result.manifest, o.out);
    log::info("augment seed=" + std::to_string(o.seed) + " copies=" + std::to_string(result.augmentations.size()) +
              " train=" + std::to_string(result.manifest.count(Split::Train, kLabelNormal)) + "/" +
              std::to_string(result.manifest.count(Split::Train, kLabelPas)) + " manifest=" + o.out.string());
    return 0;
}

struct SynthOpts {
    std::size_t normal = 120;
    std::size_t pas = 80;
    std::uint64_t seed = 0;
    fs::path out_dir;
    std::string shape = shape_string(synth::kDefaultPhantomShape);
    std::size_t scans_per_patient = 1;
    double noise = synth::PhantomOptions{}.noise_sigma;
    bool force = false;
};

int run_synth(const SynthOpts& o)
{
    if (keep_existing(o.out_dir / "manifest.csv", o.force)) return 0;
    synth::DatasetOptions opts;
    opts.size = *parse_shape(o.shape);
    opts.scans_per_patient = o.scans_per_patient;
    opts.phantom.noise_sigma = o.noise;
    const auto m = synth::generate_dataset(o.normal, o.pas, o.seed, o.out_dir, opts);
    log::info("synth cases=" + std::to_string(m.size()) + " pas=" + std::to_string(o.pas) +
              " seed=" + std::to_string(o.seed) + " manifest=" + (o.out_dir / "manifest.csv").string());
    return 0;
}

struct TrainOpts {
    std::optional<std::string> arch;
    int seed = 0;
    fs::path manifest;
    fs::path out_dir;
    std::optional<fs::path> results;
    ConfigFlags config;
    bool force = false;
};

int run_train(const TrainOpts& o)
{
    if (keep_existing(o.out_dir / "result.csv", o.force)) return 0;
    const auto cfg = o.config.resolve();
    const auto arch = o.arch.value_or(cfg.model.arch);
    const auto m = read_manifest(o.manifest);
    log::info("train arch=" + arch + " seed=" + std::to_string(o.seed) + " run_dir=" + o.out_dir.string());
    const auto cell = train::run_cell(cfg, arch, o.seed, m, o.out_dir, epoch_logger(arch, o.seed));
    if (o.results) train::append_result(*o.results, cell.record);
    log_cell(cell.record);
    return 0;
}

struct CampaignOpts {
    std::vector<std::string> archs;
    std::string seeds;
    fs::path manifest;
    fs::path out_dir;
    std::optional<fs::path> results;
    int jobs = 1;
    ConfigFlags config;
    bool force = false;
};

/// Spawns `<self> train ...` for each pending cell, at most `jobs` at once.
/// Workers append their own rows under the results-file lock.
void run_workers(const CampaignOpts& o, const std::vector<std::pair<std::string, int>>& cells,
                 const fs::path& results)
{
    const auto self = fs::read_symlink("/proc/self/exe");
    std::map<pid_t, std::string> running;
    std::vector<std::string> failed;

    const auto reap_one = [&] {
        int status = 0;
        const pid_t pid = ::waitpid(-1, &status, 0);
        const auto it = running.find(pid);
        if (it == running.end()) return;
        if (!WIFEXITED(status) || WEXITSTATUS(status) != 0) {
            log::error("worker failed cell=" + it->second);
            failed.push_back(it->second);
        }
        running.erase(it);
    };

    for (const auto& [arch, seed] : cells) {
        while (static_cast<int>(running.size()) >= o.jobs) reap_one();
        std::vector<std::string> args{self.string(),
                                      "train",
                                      "--arch", arch,
                                      "--seed", std::to_string(seed),
                                      "--manifest", o.manifest.string(),
                                      "--out-dir", train::run_dir_for(o.out_dir, arch, seed).string(),
                                      "--results", results.string(),
                                      "--force"};
        if (o.config.file) args.insert(args.end(), {"--config", o.config.file->string()});
        for (const auto& [key, value] : o.config.overrides()) args.insert(args.end(), {"--set", key + "=" + value});

        std::vector<char*> argv;
        for (auto& a : args) argv.push_back(a.data());
        argv.push_back(nullptr);
        pid_t pid = 0;
        if (::posix_spawn(&pid, self.c_str(), nullptr, nullptr, argv.data(), environ) != 0) {
            throw Error("cannot spawn a worker for " + arch + "/seed_" + std::to_string(seed));
        }
        running.emplace(pid, arch + "/seed_" + std::to_string(seed));
        log::info("worker started pid=" + std::to_string(pid) + " arch=" + arch + " seed=" + std::to_string(seed));
    }
    while (!running.empty()) reap_one();
    if (!failed.empty()) throw Error(std::to_string(failed.size()) + " campaign worker(s) failed, first " + failed[0]);
}

int run_campaign(const CampaignOpts& o)
{
    const auto results = o.results.value_or(o.out_dir / "results.csv");
    const auto seeds = parse_seeds(o.seeds);
    if (o.force && fs::exists(results)) {
        log::warn("removing " + results.string() + " (--force)");
        fs::remove(results);
    }
    const auto cfg = o.config.resolve();
    const auto m = read_manifest(o.manifest);
    for (const auto& a : o.archs) {
        auto probe = cfg.model;
        probe.arch = a;
        probe.validate();
    }
    const auto cells = train::pending_cells(o.archs, seeds, results);
    log::info("campaign cells=" + std::to_string(o.archs.size() * seeds.size()) +
              " pending=" + std::to_string(cells.size()) + " jobs=" + std::to_string(o.jobs) +
              " results=" + results.string());

    if (o.jobs > 1 && cells.size() > 1) {
        run_workers(o, cells, results);
    } else {
        for (const auto& [arch, seed] : cells) {
            const auto cell = train::run_cell(cfg, arch, seed, m, train::run_dir_for(o.out_dir, arch, seed),
                                              epoch_logger(arch, seed));
            train::append_result(results, cell.record);
            log_cell(cell.record);
        }
    }
    std::size_t failed = 0;
    for (const auto& r : eval::read_runs(results)) failed += r.status != "ok";
    log::info("campaign done results=" + results.string() + " failed=" + std::to_string(failed));
    return 0;
}

struct EvaluateOpts {
    fs::path checkpoint;
    fs::path manifest;
    std::string split = "test";
    fs::path out;
    std::optional<fs::path> roc;
    std::optional<std::string> model;
    int seed = 0;
    int batch_size = 8;
    bool force = false;
};

int run_evaluate(const EvaluateOpts& o)
{
    if (keep_existing(o.out, o.force)) return 0;
    const auto split = parse_split(o.split);
    const auto ev = train::evaluate_checkpoint(o.checkpoint, read_manifest(o.manifest), split, o.batch_size);

    eval::RunRecord r;
    r.model = o.model.value_or(ev.meta.config.arch);
    r.seed = o.seed;
    r.metrics = ev.metrics;
    r.checkpoint = fs::absolute(o.checkpoint);
    eval::write_runs({r}, o.out);

    auto stem = o.out;
    stem.replace_extension();
    train::write_predictions(ev.predictions, stem.string() + "_predictions.csv");
    if (ev.metrics.auc) {
        const auto svg = o.roc.value_or(stem.string() + "_roc.svg");
        (void)eval::emit_roc_plot({{r.model, ev.roc, *ev.metrics.auc}}, svg);
        log::info("roc svg=" + svg.string());
    } else {
        log::warn("AUC undefined on the " + o.split + " split (one class only); no ROC written");
    }
    log::info("evaluate split=" + o.split + " n=" + std::to_string(ev.predictions.labels.size()) + " report=" +
              o.out.string());
    log_cell(r);
    return 0;
}

struct CompareOpts {
    fs::path runs;
    std::string metric = "accuracy";
    double alpha = 0.05;
    fs::path out;
    bool force = false;
};

int run_compare(const CompareOpts& o)
{
    if (keep_existing(o.out, o.force)) return 0;
    std::vector<int> dropped;
    const auto m = stats::run_matrix(eval::read_runs(o.runs), o.metric, &dropped);
    for (const int s : dropped) log::warn("seed " + std::to_string(s) + " dropped: missing or failed for some model");
    const auto report = stats::compare_models(m, o.alpha);
    stats::write_pairwise_csv(report, o.out);
    std::cout << stats::render_pairwise(report, m) << std::flush;
    log::info("compare metric=" + o.metric + " models=" + std::to_string(m.models.size()) +
              " seeds=" + std::to_string(m.seeds.size()) + " pairs=" + std::to_string(report.cells.size()) +
              " out=" + o.out.string());
    return 0;
}

struct ReportOpts {
    fs::path runs;
    std::optional<fs::path> out_dir;
    bool force = false;
};

// Table text and CSV over all runs, plus one ROC curve per model taken from
// its best run's test predictions.
int run_report(const ReportOpts& o)
{
    const auto dir = o.out_dir.value_or(parent_or_dot(o.runs));
    if (keep_existing(dir / "table4.csv", o.force)) return 0;
    const auto runs = eval::read_runs(o.runs);
    const auto rows = eval::aggregate_runs(runs);
    fs::create_directories(dir);
    const auto text = eval::render_table(rows);
    std::ofstream(dir / "table4.txt") << text;
    eval::write_table_csv(rows, dir / "table4.csv");
    std::cout << text << std::flush;

    std::vector<eval::NamedCurve> curves;
    std::set<std::string> seen;
    for (const auto& r : runs) {
        if (!seen.insert(r.model).second) continue;
        const auto best = eval::best_run(runs, r.model);
        if (!best) continue;
        const auto pred_csv = runs[*best].checkpoint.parent_path() / "predictions.csv";
        if (!fs::exists(pred_csv)) {
            log::warn("no predictions for " + r.model + " at " + pred_csv.string() + "; ROC skipped");
            continue;
        }
        const auto p = train::read_predictions(pred_csv);
        try {
            auto roc = eval::roc_auc(p.labels, p.p_pas);
            curves.push_back({r.model, std::move(roc.curve), roc.auc});
        } catch (const MetricUndefined& e) {
            log::warn(r.model + ": " + e.what() + "; ROC skipped");
        }
    }
    if (!curves.empty()) (void)eval::emit_roc_plot(curves, dir / "roc.svg");
    log::info("report models=" + std::to_string(seen.size()) + " runs=" + std::to_string(runs.size()) +
              " curves=" + std::to_string(curves.size()) + " out_dir=" + dir.string());
    return 0;
}

}  // namespace

int dispatch(int argc, char** argv)
{
    CLI::App app{"PAS MRI classification pipeline"};
    app.name("pasnet");
    app.require_subcommand(1);
    bool quiet = false, verbose = false;
    app.add_flag("-q,--quiet", quiet, "log warnings and errors only");
    app.add_flag("-v,--verbose", verbose, "log debug records");

    IngestOpts ingest;
    auto* c_ingest = app.add_subcommand("ingest", "convert DICOM series / NIfTI files into canonical NIfTI");
    c_ingest->add_option("--input", ingest.input, "CSV case_id,patient_id,path,label")->required()->check(CLI::ExistingFile);
    c_ingest->add_option("--out-dir", ingest.out_dir)->required();
    c_ingest->add_flag("--force", ingest.force);

    PreprocessOpts pre;
    auto* c_pre = app.add_subcommand("preprocess", "resize with padding and min-max normalise every case");
    c_pre->add_option("--manifest", pre.manifest)->required()->check(CLI::ExistingFile);
    c_pre->add_option("--out-dir", pre.out_dir)->required();
    c_pre->add_option("--shape", pre.shape, "target extents")->check(kShape)->capture_default_str();
    c_pre->add_flag("--force", pre.force);

    SplitOpts split;
    auto* c_split = app.add_subcommand("split", "patient-level stratified train/val/test split");
    c_split->add_option("--manifest", split.manifest)->required()->check(CLI::ExistingFile);
    c_split->add_option("--out", split.out, "split manifest CSV")->required();
    c_split->add_option("--seed", split.seed)->required();
    c_split->add_option("--ratios", split.ratios, "train,val,test")->delimiter(',')->expected(3);
    c_split->add_flag("--force", split.force);

    AugmentOpts aug;
    auto* c_aug = app.add_subcommand("augment", "oversample the minority training class with augmented copies");
    c_aug->add_option("--manifest", aug.manifest)->required()->check(CLI::ExistingFile);
    c_aug->add_option("--out", aug.out, "augmented manifest CSV")->required();
    c_aug->add_option("--augment-dir", aug.augment_dir, "default: <out dir>/augmented");
    c_aug->add_option("--sidecar", aug.sidecar, "default: <out dir>/augmentations.csv");
    c_aug->add_option("--seed", aug.seed)->required();
    c_aug->add_flag("--force", aug.force);

    SynthOpts syn;
    auto* c_syn = app.add_subcommand("synth", "generate a labelled phantom dataset");
    c_syn->add_option("--normal", syn.normal)->capture_default_str();
    c_syn->add_option("--pas", syn.pas)->capture_default_str();
    c_syn->add_option("--seed", syn.seed)->required();
    c_syn->add_option("--out-dir", syn.out_dir)->required();
    c_syn->add_option("--shape", syn.shape)->check(kShape)->capture_default_str();
    c_syn->add_option("--scans-per-patient", syn.scans_per_patient)->check(CLI::PositiveNumber)->capture_default_str();
    c_syn->add_option("--noise", syn.noise)->check(CLI::NonNegativeNumber)->capture_default_str();
    c_syn->add_flag("--force", syn.force);

    TrainOpts tr;
    auto* c_tr = app.add_subcommand("train", "train one architecture/seed and evaluate it on the test split");
    c_tr->add_option("--arch", tr.arch, "default: 'arch' from the config");
    c_tr->add_option("--seed", tr.seed)->required();
    c_tr->add_option("--manifest", tr.manifest)->required()->check(CLI::ExistingFile);
    c_tr->add_option("--out-dir", tr.out_dir, "run directory")->required();
    c_tr->add_option("--results", tr.results, "results CSV to append to");
    tr.config.add_to(c_tr);
    c_tr->add_flag("--force", tr.force);

    CampaignOpts camp;
    auto* c_camp = app.add_subcommand("campaign", "train every architecture x seed; resumes from the results CSV");
    c_camp->add_option("--archs", camp.archs)->required()->delimiter(',');
    c_camp->add_option("--seeds", camp.seeds, "0..4 or 0,1,2")->required()->check(kSeeds);
    c_camp->add_option("--manifest", camp.manifest)->required()->check(CLI::ExistingFile);
    c_camp->add_option("--out-dir", camp.out_dir)->required();
    c_camp->add_option("--results", camp.results, "default: <out-dir>/results.csv");
    c_camp->add_option("--jobs", camp.jobs, "parallel worker processes")->check(CLI::PositiveNumber);
    camp.config.add_to(c_camp);
    c_camp->add_flag("--force", camp.force, "discard existing results and retrain every cell");

    EvaluateOpts ev;
    auto* c_ev = app.add_subcommand("evaluate", "score a checkpoint on one split");
    c_ev->add_option("--checkpoint", ev.checkpoint)->required()->check(CLI::ExistingFile);
    c_ev->add_option("--manifest", ev.manifest)->required()->check(CLI::ExistingFile);
    c_ev->add_option("--split", ev.split)->check(CLI::IsMember({"train", "val", "test"}))->capture_default_str();
    c_ev->add_option("--out", ev.out, "report CSV")->required();
    c_ev->add_option("--roc", ev.roc, "ROC SVG; default: <out stem>_roc.svg");
    c_ev->add_option("--model", ev.model, "name in the report; default: the checkpoint's arch");
    c_ev->add_option("--seed", ev.seed, "seed recorded in the report")->capture_default_str();
    c_ev->add_option("--batch-size", ev.batch_size)->check(CLI::PositiveNumber)->capture_default_str();
    c_ev->add_flag("--force", ev.force);

    CompareOpts cmp;
    auto* c_cmp = app.add_subcommand("compare", "repeated-measures ANOVA and corrected pairwise t-tests");
    c_cmp->add_option("--runs", cmp.runs)->required()->check(CLI::ExistingFile);
    c_cmp->add_option("--metric", cmp.metric)
        ->check(CLI::IsMember({"accuracy", "auc", "precision_macro", "recall_macro", "f1_macro"}))
        ->capture_default_str();
    c_cmp->add_option("--alpha", cmp.alpha)->check(CLI::Range(0.0, 1.0))->capture_default_str();
    c_cmp->add_option("--out", cmp.out, "pairwise CSV")->required();
    c_cmp->add_flag("--force", cmp.force);

    ReportOpts rep;
    auto* c_rep = app.add_subcommand("report", "best (mean ± sd) table and ROC curves of the best runs");
    c_rep->add_option("--runs", rep.runs)->required()->check(CLI::ExistingFile);
    c_rep->add_option("--out-dir", rep.out_dir, "default: the runs file's directory");
    c_rep->add_flag("--force", rep.force);

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e) == 0 ? 0 : 2;
    } catch (const CLI::CallForAllHelp& e) {
        return app.exit(e) == 0 ? 0 : 2;
    } catch (const CLI::ParseError& e) {
        std::cerr << "pasnet: " << e.what() << "\n\n" << app.help();
        return 2;
    }
    log::set_level(quiet ? log::Level::Warn : (verbose ? log::Level::Debug : log::Level::Info));

    try {
        if (*c_ingest) return run_ingest(ingest);
        if (*c_pre) return run_preprocess(pre);
        if (*c_split) return run_split(split);
        if (*c_aug) return run_augment(aug);
        if (*c_syn) return run_synth(syn);
        if (*c_tr) return run_train(tr);
        if (*c_camp) return run_campaign(camp);
        if (*c_ev) return run_evaluate(ev);
        if (*c_cmp) return run_compare(cmp);
        if (*c_rep) return run_report(rep);
    } catch (const Error& e) {
        log::error(e.what());
        return 1;
    } catch (const std::exception& e) {
        log::error(std::string("internal error: ") + e.what());
        return 1;
    }
    return 2;
}

int dispatch(const std::vector<std::string>& args)
{
    std::vector<std::string> owned{"pasnet"};
    owned.insert(owned.end(), args.begin(), args.end());
    std::vector<char*> argv;
    for (auto& a : owned) argv.push_back(a.data());
    argv.push_back(nullptr);
    return dispatch(static_cast<int>(owned.size()), argv.data());
}

}  // namespace pasnet::cli
