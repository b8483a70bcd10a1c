#ifndef SUBLRA_INPUTS_HPP
#define SUBLRA_INPUTS_HPP

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "sublra/linalg.hpp"
#include "sublra/matrix.hpp"

namespace sublra {

enum class InputFamily { delta, shifted_delta, dual_random, decay };
enum class DecayKind { exp, poly };

std::string to_string(InputFamily f);
InputFamily input_family_from_string(const std::string& s);
std::string to_string(DecayKind k);
DecayKind decay_kind_from_string(const std::string& s);

// Everything needed to regenerate an input bit-exactly.
struct InputSpec {
    InputFamily family = InputFamily::dual_random;
    std::size_t m = 0;
    std::size_t n = 0;
    std::size_t rho = 1;
    std::vector<double> spectrum;  // dual_random: length rho
    double noise = 0.0;            // dual_random: ||E||_F / ||U diag V||_F
    std::uint64_t seed = 0;
    std::size_t i = 0;  // delta families: position of the distinguished entry
    std::size_t j = 0;
    DecayKind decay_kind = DecayKind::exp;
    double rate = 1.0;
};

// Zero except a single 1 at (i, j).
RMat delta_matrix(std::size_t m, std::size_t n, std::size_t i, std::size_t j);

// delta_matrix minus the all-1/2 matrix: +1/2 at (i, j), -1/2 elsewhere.
RMat shifted_delta(std::size_t m, std::size_t n, std::size_t i, std::size_t j);

struct DualRandomInput {
    RMat M;
    TopSVD<double> truth;  // exact top SVD of the noiseless part
};

// M = U diag(spectrum) V + E with U, V Gaussian scaled by 1/sqrt(m), 1/sqrt(n)
// and E Gaussian with ||E||_F = noise * ||U diag V||_F.
DualRandomInput dual_random(std::size_t m, std::size_t n, std::size_t rho,
                            std::span<const double> spectrum, double noise, std::uint64_t seed);

// sigma_j = exp(-rate j) or j^-rate for j = 1..min(m, n)
std::vector<double> decay_spectrum(std::size_t count, DecayKind kind, double rate);

// Q1 diag(sigma) Q2^T with Q1, Q2 from QR of seeded Gaussian matrices.
RMat decay_matrix(std::size_t m, std::size_t n, DecayKind kind, double rate, std::uint64_t seed);

// Matrix with an arbitrary prescribed spectrum between random orthonormal factors.
RMat prescribed_spectrum_matrix(std::size_t m, std::size_t n, std::span<const double> sigma,
                                std::uint64_t seed);

struct GeneratedInput {
    RMat M;
    std::optional<TopSVD<double>> truth;
};

GeneratedInput generate(const InputSpec& spec);

}  // namespace sublra

#endif
