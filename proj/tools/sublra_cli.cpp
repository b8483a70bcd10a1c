#include <algorithm>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "sublra/harness.hpp"
#include "sublra/matrix_market.hpp"

namespace {

constexpr int kExitOk = 0;
constexpr int kExitFailure = 1;
constexpr int kExitBudget = 2;
constexpr int kExitConfig = 3;

sublra::Json read_json(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw sublra::ConfigError("cannot open config '" + path + "'");
    try {
        return sublra::Json::parse(in);
    } catch (const nlohmann::json::parse_error& e) {
        throw sublra::ConfigError(std::string("config is not valid JSON: ") + e.what());
    }
}

void write_text(const std::string& out, const std::string& text) {
    if (out.empty() || out == "-") {
        std::cout << text;
        return;
    }
    std::ofstream f(out);
    if (!f) throw std::runtime_error("cannot write '" + out + "'");
    f << text;
}

struct RunArgs {
    std::string config;
    std::string out;
    std::string format = "json";
    std::optional<double> budget;
    std::optional<std::size_t> trials;
    std::optional<std::uint64_t> master_seed;
    unsigned jobs = 1;
};

int do_run(const RunArgs& a) {
    auto cfg = sublra::load_config(a.config);
    if (a.budget) cfg.budget = *a.budget;
    if (a.trials) cfg.trials = *a.trials;
    if (a.master_seed) cfg.master_seed = *a.master_seed;
    if (!(cfg.budget > 0.0 && cfg.budget <= 1.0)) throw sublra::ConfigError("budget must lie in (0, 1]");
    if (cfg.trials == 0) throw sublra::ConfigError("trials must be positive");
    const auto fmt = sublra::output_format_from_string(a.format);
    const auto rec = sublra::run(cfg, a.jobs);
    std::ostringstream os;
    if (fmt == sublra::OutputFormat::json) os << sublra::to_json(rec).dump(2) << '\n';
    else sublra::write_csv(os, rec);
    write_text(a.out, os.str());
    if (rec.budget_violation) {
        std::cerr << "budget exceeded: read fraction above " << cfg.budget << " in at least one trial\n";
        return kExitBudget;
    }
    return kExitOk;
}

int do_sweep(const RunArgs& a, bool shifted_flag) {
    const auto j = read_json(a.config);
    for (const auto& [key, _] : j.items()) {
        static const std::vector<std::string> allowed{"schema_version", "m", "n", "shifted", "pipeline", "master_seed", "budget"};
        if (std::find(allowed.begin(), allowed.end(), key) == allowed.end())
            throw sublra::ConfigError("sweep config: unknown key '" + key + "'");
    }
    try {
        const auto m = j.value("m", std::size_t{16});
        const auto n = j.value("n", std::size_t{16});
        const bool shifted = shifted_flag || j.value("shifted", false);
        const auto pipeline = sublra::parse_pipeline(j.value("pipeline", sublra::Json::object()));
        const auto seed = a.master_seed.value_or(j.value("master_seed", std::uint64_t{0}));
        const double budget = a.budget.value_or(j.value("budget", 1.0));
        if (m * n == 0 || m * n > sublra::kMaxSweepEntries) throw sublra::ConfigError("sweep grid must have 1..4096 entries");
        const auto res = sublra::adversarial_sweep(m, n, pipeline, seed, budget, shifted);
        write_text(a.out, sublra::to_json(res).dump(2) + "\n");
        if (!res.budget_ok) {
            std::cerr << "budget exceeded: max read fraction " << res.max_read_fraction << '\n';
            return kExitBudget;
        }
    } catch (const nlohmann::json::exception& e) {
        throw sublra::ConfigError(std::string("sweep config: ") + e.what());
    }
    return kExitOk;
}

int do_convert(const std::string& in, const std::string& out, const std::string& layout) {
    const auto M = sublra::load_matrix(in);
    if (std::filesystem::path(out).extension() == ".mtx")
        sublra::save_matrix_market(out, M,
                                   layout == "coordinate" ? sublra::MatrixMarketLayout::coordinate
                                                          : sublra::MatrixMarketLayout::array);
    else
        sublra::save_binary_matrix(out, M);
    return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Sublinear-cost low-rank approximation experiments"};
    app.require_subcommand(1);

    RunArgs run_args;
    auto* run = app.add_subcommand("run", "Run an experiment config over seeded trials");
    run->add_option("--config", run_args.config, "Experiment config (JSON)")->required()->check(CLI::ExistingFile);
    run->add_option("--out", run_args.out, "Output path (default stdout)");
    run->add_option("--format", run_args.format, "json or csv")->check(CLI::IsMember({"json", "csv"}));
    run->add_option("--budget", run_args.budget, "Max read fraction per trial");
    run->add_option("--trials", run_args.trials, "Number of trials");
    run->add_option("--master-seed", run_args.master_seed, "Master seed");
    run->add_option("--jobs", run_args.jobs, "Concurrent trials")->check(CLI::PositiveNumber);

    RunArgs sweep_args;
    bool shifted = false;
    auto* sweep = app.add_subcommand("sweep", "Adversarial sweep over the delta family");
    sweep->add_option("--config", sweep_args.config, "Sweep config (JSON)")->required()->check(CLI::ExistingFile);
    sweep->add_option("--out", sweep_args.out, "Output path (default stdout)");
    sweep->add_option("--budget", sweep_args.budget, "Max read fraction");
    sweep->add_option("--master-seed", sweep_args.master_seed, "Seed for the fixed multipliers");
    sweep->add_flag("--shifted", shifted, "Use the shifted delta family");

    std::string conv_in, conv_out, layout = "array";
    auto* convert = app.add_subcommand("convert", "Convert between Matrix Market (.mtx) and the binary format");
    convert->add_option("input", conv_in, "Source file")->required()->check(CLI::ExistingFile);
    convert->add_option("output", conv_out, "Destination file")->required();
    convert->add_option("--layout", layout, "Matrix Market layout")->check(CLI::IsMember({"array", "coordinate"}));

    std::vector<std::string> csvs;
    std::string report_out;
    auto* report = app.add_subcommand("report", "Aggregate trial CSV files");
    report->add_option("csv", csvs, "Trial CSV files")->required()->check(CLI::ExistingFile);
    report->add_option("--out", report_out, "Output path (default stdout)");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? kExitOk : kExitConfig;
    }

    try {
        if (*run) return do_run(run_args);
        if (*sweep) return do_sweep(sweep_args, shifted);
        if (*convert) return do_convert(conv_in, conv_out, layout);
        if (*report) {
            std::ostringstream os;
            sublra::report({csvs.begin(), csvs.end()}, os);
            write_text(report_out, os.str());
            return kExitOk;
        }
    } catch (const sublra::ConfigError& e) {
        std::cerr << "config error: " << e.what() << '\n';
        return kExitConfig;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kExitFailure;
    }
    return kExitFailure;
}
