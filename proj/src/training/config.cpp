#include <fstream>
#include <sstream>

#include "pasnet/csv.hpp"
#include "pasnet/errors.hpp"
#include "pasnet/training.hpp"

namespace pasnet::train {

namespace {

std::string trim(const std::string& s)
{
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string::npos) return {};
    const auto e = s.find_last_not_of(" \t\r");
    return s.substr(b, e - b + 1);
}

double as_double(const std::string& key, const std::string& v)
{
    const double d = parse_double(v);
    if (!std::isfinite(d)) throw ConfigError("config key '" + key + "' needs a number, got '" + v + "'");
    return d;
}

long long as_int(const std::string& key, const std::string& v)
{
    try {
        std::size_t used = 0;
        const long long n = std::stoll(v, &used);
        if (used == v.size()) return n;
    } catch (const std::exception&) {
    }
    throw ConfigError("config key '" + key + "' needs an integer, got '" + v + "'");
}

}  // namespace

void apply_config_value(ExperimentConfig& cfg, const std::string& key, const std::string& value)
{
    auto& m = cfg.model;
    auto& t = cfg.train;
    try {
        if (key == "arch") m.arch = value;
        else if (key == "dropout") m.dropout = as_double(key, value);
        else if (key == "width_multiplier") m.width_multiplier = as_double(key, value);
        else if (key == "pretrained_path") m.pretrained_path = value;
        else if (key == "in_channels") m.in_channels = static_cast<int>(as_int(key, value));
        else if (key == "input_shape") m.input_shape = models::ModelConfig::parse("input_shape=" + value).input_shape;
        else if (key == "lr") t.lr = as_double(key, value);
        else if (key == "batch_size") t.batch_size = static_cast<int>(as_int(key, value));
        else if (key == "epochs") t.epochs = static_cast<int>(as_int(key, value));
        else if (key == "seed") t.seed = static_cast<std::uint64_t>(as_int(key, value));
        else if (key == "plateau_factor") t.plateau.factor = as_double(key, value);
        else if (key == "plateau_patience") t.plateau.patience = static_cast<int>(as_int(key, value));
        else if (key == "min_lr") t.plateau.min_lr = as_double(key, value);
        else if (key == "grad_clip") t.grad_clip = as_double(key, value);
        else if (key == "weight_decay") t.weight_decay = as_double(key, value);
        else if (key == "stop_at_train_accuracy") t.stop_at_train_accuracy = as_double(key, value);
        else if (key == "cache_mb") t.cache_mb = static_cast<std::size_t>(as_int(key, value));
        else throw ConfigError("unknown config key '" + key + "'");
    } catch (const FormatError& e) {
        throw ConfigError(e.what());
    }
}

ExperimentConfig read_config_file(const std::filesystem::path& path)
{
    std::ifstream in(path);
    if (!in) throw IoError("cannot open config file " + path.string());
    ExperimentConfig cfg;
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
        line = trim(line);
        if (line.empty()) continue;
        const auto eq = line.find('=');
        if (eq == std::string::npos) {
            throw ConfigError(path.string() + ":" + std::to_string(lineno) + ": expected 'key = value'");
        }
        try {
            apply_config_value(cfg, trim(line.substr(0, eq)), trim(line.substr(eq + 1)));
        } catch (const ConfigError& e) {
            throw ConfigError(path.string() + ":" + std::to_string(lineno) + ": " + e.what());
        }
    }
    return cfg;
}

}  // namespace pasnet::train
