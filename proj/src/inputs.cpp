#include "sublra/inputs.hpp"

#include <cmath>
#include <stdexcept>

#include "sublra/random.hpp"

namespace sublra {

std::string to_string(InputFamily f) {
    switch (f) {
        case InputFamily::delta: return "delta";
        case InputFamily::shifted_delta: return "shifted_delta";
        case InputFamily::dual_random: return "dual_random";
        case InputFamily::decay: return "decay";
    }
    return "?";
}

InputFamily input_family_from_string(const std::string& s) {
    if (s == "delta") return InputFamily::delta;
    if (s == "shifted_delta") return InputFamily::shifted_delta;
    if (s == "dual_random") return InputFamily::dual_random;
    if (s == "decay") return InputFamily::decay;
    throw std::invalid_argument("unknown input family '" + s + "'");
}

std::string to_string(DecayKind k) { return k == DecayKind::exp ? "exp" : "poly"; }

DecayKind decay_kind_from_string(const std::string& s) {
    if (s == "exp") return DecayKind::exp;
    if (s == "poly") return DecayKind::poly;
    throw std::invalid_argument("unknown decay kind '" + s + "'");
}

RMat delta_matrix(std::size_t m, std::size_t n, std::size_t i, std::size_t j) {
    if (i >= m || j >= n) throw std::out_of_range("delta_matrix: position out of range");
    RMat D(m, n);
    D(i, j) = 1.0;
    return D;
}

RMat shifted_delta(std::size_t m, std::size_t n, std::size_t i, std::size_t j) {
    if (i >= m || j >= n) throw std::out_of_range("shifted_delta: position out of range");
    RMat D(m, n, -0.5);
    D(i, j) = 0.5;
    return D;
}

DualRandomInput dual_random(std::size_t m, std::size_t n, std::size_t rho,
                            std::span<const double> spectrum, double noise, std::uint64_t seed) {
    if (rho == 0 || rho > std::min(m, n)) throw std::invalid_argument("dual_random: rho must lie in [1, min(m, n)]");
    if (spectrum.size() != rho) throw std::invalid_argument("dual_random: spectrum length must equal rho");
    for (std::size_t t = 0; t < rho; ++t) {
        if (!(spectrum[t] > 0.0)) throw std::invalid_argument("dual_random: spectrum must be positive");
        if (t > 0 && spectrum[t] > spectrum[t - 1])
            throw std::invalid_argument("dual_random: spectrum must be nonincreasing");
    }
    if (!(noise >= 0.0)) throw std::invalid_argument("dual_random: noise must be nonnegative");

    Rng rng = make_rng(seed);
    const RMat U = gaussian_matrix(m, rho, rng, 1.0 / std::sqrt(double(m)));
    const RMat V = gaussian_matrix(rho, n, rng, 1.0 / std::sqrt(double(n)));
    const RMat L = matmul(scale_cols(U, spectrum), V);

    DualRandomInput out;
    out.M = L;
    if (noise > 0.0) {
        RMat E = gaussian_matrix(m, n, rng);
        const double s = noise * frobenius_norm(L) / frobenius_norm(E);
        for (std::size_t t = 0; t < E.size(); ++t) out.M.data()[t] += s * E.data()[t];
    }

    const auto qu = qr(U);
    const auto qv = qr(transpose(V));
    const RMat core = matmul(scale_cols(qu.R, spectrum), transpose(qv.R));
    const auto cs = svd(core);
    out.truth.U = matmul(qu.Q, cs.U);
    out.truth.V = matmul(qv.Q, cs.V);
    out.truth.sigma = cs.sigma;
    return out;
}

std::vector<double> decay_spectrum(std::size_t count, DecayKind kind, double rate) {
    if (!(rate > 0.0)) throw std::invalid_argument("decay_spectrum: rate must be positive");
    std::vector<double> s(count);
    for (std::size_t j = 1; j <= count; ++j)
        s[j - 1] = kind == DecayKind::exp ? std::exp(-rate * double(j)) : std::pow(double(j), -rate);
    return s;
}

RMat prescribed_spectrum_matrix(std::size_t m, std::size_t n, std::span<const double> sigma,
                                std::uint64_t seed) {
    const std::size_t r = sigma.size();
    if (r == 0 || r > std::min(m, n)) throw std::invalid_argument("prescribed spectrum: length must lie in [1, min(m, n)]");
    Rng rng = make_rng(seed);
    const RMat Q1 = qr(gaussian_matrix(m, r, rng)).Q;
    const RMat Q2 = qr(gaussian_matrix(n, r, rng)).Q;
    return matmul(scale_cols(Q1, sigma), transpose(Q2));
}

RMat decay_matrix(std::size_t m, std::size_t n, DecayKind kind, double rate, std::uint64_t seed) {
    const auto sigma = decay_spectrum(std::min(m, n), kind, rate);
    return prescribed_spectrum_matrix(m, n, sigma, seed);
}

GeneratedInput generate(const InputSpec& spec) {
    switch (spec.family) {
        case InputFamily::delta: return {delta_matrix(spec.m, spec.n, spec.i, spec.j), std::nullopt};
        case InputFamily::shifted_delta: return {shifted_delta(spec.m, spec.n, spec.i, spec.j), std::nullopt};
        case InputFamily::decay:
            return {decay_matrix(spec.m, spec.n, spec.decay_kind, spec.rate, spec.seed), std::nullopt};
        case InputFamily::dual_random: {
            auto d = dual_random(spec.m, spec.n, spec.rho, spec.spectrum, spec.noise, spec.seed);
            return {std::move(d.M), std::move(d.truth)};
        }
    }
    throw std::logic_error("generate: unhandled family");
}

}  // namespace sublra
