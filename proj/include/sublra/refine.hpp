#ifndef SUBLRA_REFINE_HPP
#define SUBLRA_REFINE_HPP

#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

#include "sublra/cur.hpp"
#include "sublra/linalg.hpp"
#include "sublra/matrix.hpp"
#include "sublra/multipliers.hpp"
#include "sublra/oracle.hpp"
#include "sublra/sketch.hpp"

namespace sublra {

enum class Recipe { deterministic, leverage, residual };

std::string to_string(Recipe r);
Recipe recipe_from_string(const std::string& s);  // "i", "ii", "iii"

struct RefineStep {
    std::size_t iteration = 0;
    double error_estimate = 0.0;  // e_i
    double gap = 0.0;             // g_i
    double step = 0.0;            // s_i
    std::size_t reads = 0;        // cumulative distinct reads of the oracle
    std::vector<std::string> flags;
};

struct RefineState {
    TopSVD<double> current;
    Multiplier<double> F = RMat{};
    Multiplier<double> H = RMat{};
    SketchSet<double> sketches;  // of M, taken once
    std::vector<RefineStep> history;
    std::size_t rho = 0;
    std::size_t estimator_samples = 400;
    std::uint64_t estimator_seed = 0;
    bool stagnated = false;
};

inline constexpr std::size_t kEstimatorSamples = 400;

// Sketches M once with F, H and wraps `current` (truncated to rho).
RefineState make_refine_state(MatrixOracle& o, const TopSVD<double>& current, Multiplier<double> F,
                              Multiplier<double> H, std::size_t rho, std::uint64_t estimator_seed = 0);

struct DeterministicOptions {
    // Replace U^T, V by sparse orthogonal multipliers supported on 2 rho
    // rows and columns picked from the factors (maxvol, then leverage).
    bool sparse_substitution = false;
    std::uint64_t seed = 0;
};

struct DeterministicResult {
    TopSVD<double> svd;
    bool superfast = false;
    std::size_t reads = 0;
};

// Re-sketch with F = U^T and H = V, reconstruct, recompress to rho.
DeterministicResult refine_deterministic(MatrixOracle& o, const TopSVD<double>& s, std::size_t rho,
                                         const DeterministicOptions& opts = {});

// p_i = ||U[i, :]||^2 / rank. Throws if U is not orthonormal.
std::vector<double> leverage_scores(const RMat& U);

// Leverage-score CUR: k rows from s.U, l columns from s.V, with replacement
// and rescaling by 1 / sqrt(k p_i).
CURDecomp refine_leverage(MatrixOracle& o, const TopSVD<double>& s, std::size_t rho, std::size_t k,
                          std::size_t l, std::uint64_t seed);

//
// One pass of residual refinement. Residual sketches are formed from the
// stored sketches and the current factors in compensated arithmetic, the
// residual is reconstructed at rank 2 rho, and (residual + current) is
// truncated back to rho in factored form. No new reads besides the error
// estimator's samples.
//
RefineState refine_residual(MatrixOracle& o, RefineState state);

// sqrt(mn / samples * sum of squared residuals at distinct uniform positions).
double estimate_residual_fro(MatrixOracle& o, const TopSVD<double>& s, std::size_t samples,
                             std::uint64_t seed);

inline constexpr double kGapSafety = 0.2;
inline constexpr double kMinStep = 0.05;
inline constexpr int kDefaultHomotopySteps = 25;

// Largest step s in [kMinStep, 1] with s * error <= kGapSafety * gap.
double safe_step(double error, double gap);

struct HomotopyOptions {
    Recipe recipe = Recipe::residual;
    int max_steps = kDefaultHomotopySteps;
    std::uint64_t seed = 0;
    std::size_t estimator_samples = kEstimatorSamples;
    std::size_t k = 0;  // sketch sizes; 0 selects the defaults
    std::size_t l = 0;
};

struct HomotopyResult {
    TopSVD<double> current;
    std::vector<RefineStep> history;
    bool completed = false;  // reached the path end
};

// Follows M_{i+1} = M_i + s_i (M - M_i) from the approximant `start`,
// applying the recipe at every path point.
HomotopyResult homotopy_refine(MatrixOracle& o, const TopSVD<double>& start, std::size_t rho,
                               const HomotopyOptions& opts = {});

}  // namespace sublra

#endif
