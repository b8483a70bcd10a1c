#ifndef SUBLRA_HARNESS_HPP
#define SUBLRA_HARNESS_HPP

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "json.hpp"
#include "sublra/inputs.hpp"
#include "sublra/multipliers.hpp"
#include "sublra/oracle.hpp"
#include "sublra/refine.hpp"

namespace sublra {

using Json = nlohmann::ordered_json;

inline constexpr int kSchemaVersion = 1;

class ConfigError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

struct MultiplierConfig {
    // gaussian | identity | hadamard | fourier | bidiag_perm | givens | householder
    std::string family = "gaussian";
    unsigned d = 3;            // butterfly levels
    std::size_t factors = 2;   // bidiag_perm
    std::size_t stages = 8;    // givens / householder
    MultiplierFlags flags;
};

struct RefineConfig {
    std::string recipe = "none";  // none | i | ii | iii
    int steps = 1;  // passes without homotopy
    bool homotopy = false;
    int max_steps = kDefaultHomotopySteps;
    bool sparse_substitution = false;  // recipe i
};

struct PipelineConfig {
    std::size_t rho = 1;
    std::size_t k = 0;  // 0 selects 4 rho + 2
    std::size_t l = 0;  // 0 selects 2 rho + 1
    MultiplierConfig left;
    MultiplierConfig right;
    // nystrom: generalized Nystrom from F M, M H, F M H
    // cur: canonical CUR on k uniform rows and l uniform columns
    // subset: zero-filled uniform entry subset, truncated to rho
    std::string reconstruction = "nystrom";
    bool recompress = true;
    double subset_fraction = 0.25;
    RefineConfig refine;
};

struct InputConfig {
    std::optional<InputSpec> spec;
    std::optional<std::string> path;
};

struct ExperimentConfig {
    InputConfig input;
    PipelineConfig pipeline;
    std::size_t trials = 1;
    std::uint64_t master_seed = 0;
    double budget = 1.0;  // max read fraction
    bool audit = true;    // spectral error and tail via full SVD of M
};

ExperimentConfig parse_config(const Json& j);
ExperimentConfig load_config(const std::filesystem::path& path);
Json to_json(const ExperimentConfig& c);
Json to_json(const PipelineConfig& p);
PipelineConfig parse_pipeline(const Json& j);
Json to_json(const InputSpec& s);

struct PipelineOutput {
    RMat approx;
    std::optional<TopSVD<double>> svd;
    std::uint64_t flops = 0;
    std::vector<std::string> warnings;
    std::vector<RefineStep> trace;
    std::string status = "ok";  // ok | sketch_lost | rank_deficient
    bool superfast = true;
};

// Runs one pipeline on the oracle. Failures that a blind algorithm can
// legitimately hit (lost sketch, deficient generator) yield a zero output
// and a status rather than an exception.
PipelineOutput run_pipeline(MatrixOracle& o, const PipelineConfig& p, std::uint64_t seed);

struct TrialRecord {
    std::size_t trial = 0;
    std::uint64_t seed = 0;
    std::uint64_t input_seed = 0;
    std::string status = "ok";
    double fro_error = 0.0;
    std::optional<double> spectral_error;
    std::optional<double> tail;
    std::optional<double> error_ratio;
    std::size_t reads = 0;
    double read_fraction = 0.0;
    std::uint64_t flops = 0;
    double wall_time = 0.0;
    bool budget_ok = true;
    std::vector<std::string> warnings;
    std::vector<RefineStep> trace;
};

struct Quantiles {
    std::size_t count = 0;
    double median = 0.0;
    double p95 = 0.0;
};

// Linear-interpolation quantile of unsorted data; q in [0, 1].
double quantile(std::vector<double> v, double q);
Quantiles summarize(const std::vector<double>& v);

struct ExperimentRecord {
    ExperimentConfig config;
    std::size_t m = 0;
    std::size_t n = 0;
    std::vector<TrialRecord> trials;
    Quantiles error_ratio;
    Quantiles fro_error;
    Quantiles read_fraction;
    bool budget_violation = false;
};

TrialRecord run_trial(const ExperimentConfig& c, std::size_t trial);
ExperimentRecord run(const ExperimentConfig& c, unsigned jobs = 1);

Json to_json(const ExperimentRecord& r);
ExperimentRecord record_from_json(const Json& j);
void write_csv(std::ostream& out, const ExperimentRecord& r);

enum class OutputFormat { json, csv };
OutputFormat output_format_from_string(const std::string& s);
void emit(const ExperimentRecord& r, OutputFormat f, const std::filesystem::path& path);

struct SweepEntry {
    std::size_t i = 0;
    std::size_t j = 0;
    bool read = false;    // the pipeline read the distinguished entry
    bool failed = false;  // max-entry error >= 1/2
    double max_error = 0.0;
    double read_fraction = 0.0;
    std::string status;
};

struct SweepResult {
    std::size_t m = 0;
    std::size_t n = 0;
    bool shifted = false;
    double fail_fraction = 0.0;
    double bound = 0.0;  // unread positions / mn
    std::size_t unread = 0;
    std::size_t unread_failures = 0;
    double max_read_fraction = 0.0;
    bool budget_ok = true;
    std::vector<SweepEntry> per_matrix;
};

inline constexpr std::size_t kMaxSweepEntries = 64 * 64;

// The same pipeline (same seed, hence the same multipliers) on every
// delta matrix of an m x n grid, or on the shifted family.
SweepResult adversarial_sweep(std::size_t m, std::size_t n, const PipelineConfig& p, std::uint64_t seed,
                              double budget, bool shifted = false);

Json to_json(const SweepResult& s);

// Aggregates trial CSVs written by write_csv: one output row per file.
void report(const std::vector<std::filesystem::path>& csvs, std::ostream& out);

}  // namespace sublra

#endif
