#include <CLI11.hpp>

#include <chrono>
#include <cstdio>
#include <exception>
#include <vector>

#include "criteria.hpp"

using namespace pasnet::acceptance;

int main(int argc, char** argv)
{
    const std::vector<Criterion> all{
        {1, "metric oracle", 1.0, metric_oracle},
        {2, "dataset bookkeeping", 5.0, dataset_bookkeeping},
        {3, "architecture contract", 120.0, architecture_contract},
        {4, "learnability", 900.0, learnability},
        {5, "gradient checks", 60.0, gradient_checks},
        {6, "AUC oracle", 5.0, auc_oracle},
        {7, "statistics oracles", 10.0, statistics_oracles},
        {8, "preprocessing properties", 60.0, preprocessing_properties},
        {9, "determinism", 300.0, determinism},
        {10, "end-to-end smoke", 1200.0, end_to_end},
    };

    CLI::App app{"Acceptance criteria; prints one PASS/FAIL line per criterion"};
    std::vector<int> selected;
    app.add_option("-c,--criterion", selected, "criterion number(s); all when omitted")->check(CLI::Range(1, 10));
    CLI11_PARSE(app, argc, argv);

    bool ok = true;
    for (const auto& c : all) {
        if (!selected.empty() && std::find(selected.begin(), selected.end(), c.id) == selected.end()) continue;
        const auto t0 = std::chrono::steady_clock::now();
        Outcome o;
        try {
            o = c.run();
        } catch (const std::exception& e) {
            o = {false, std::string("exception: ") + e.what()};
        }
        const double s = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        const bool in_time = s <= c.budget_s;
        const bool pass = o.pass && in_time;
        std::printf("criterion %d (%s): %s  %s  [%.2f s of %.0f s%s]\n", c.id, c.name.c_str(), pass ? "PASS" : "FAIL",
                    o.detail.c_str(), s, c.budget_s, in_time ? "" : ", over budget");
        std::fflush(stdout);
        ok = ok && pass;
    }
    return ok ? 0 : 1;
}
