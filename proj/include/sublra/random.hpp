#ifndef SUBLRA_RANDOM_HPP
#define SUBLRA_RANDOM_HPP

#include <cstddef>
#include <cstdint>
#include <random>
#include <vector>

#include "sublra/matrix.hpp"

namespace sublra {

using Rng = std::mt19937_64;

// splitmix64 finalizer
inline std::uint64_t mix64(std::uint64_t x) noexcept {
    x += 0x9e3779b97f4a7c15ull;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ull;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebull;
    return x ^ (x >> 31);
}

// Counter-based seed derivation: independent child streams for (seed, index).
inline std::uint64_t split_seed(std::uint64_t seed, std::uint64_t index) noexcept {
    return mix64(mix64(seed) ^ mix64(index + 0x632be59bd9b4e019ull));
}

inline Rng make_rng(std::uint64_t seed) { return Rng(mix64(seed)); }

inline RMat gaussian_matrix(std::size_t rows, std::size_t cols, Rng& rng, double stddev = 1.0) {
    std::normal_distribution<double> dist(0.0, stddev);
    RMat A(rows, cols);
    for (auto& x : A.data()) x = dist(rng);
    return A;
}

// k distinct indices from [0, n), uniform, returned sorted.
inline std::vector<std::size_t> sample_without_replacement(std::size_t n, std::size_t k, Rng& rng) {
    std::vector<std::size_t> idx(n);
    for (std::size_t i = 0; i < n; ++i) idx[i] = i;
    for (std::size_t i = 0; i < k; ++i) {
        std::uniform_int_distribution<std::size_t> pick(i, n - 1);
        std::swap(idx[i], idx[pick(rng)]);
    }
    idx.resize(k);
    std::sort(idx.begin(), idx.end());
    return idx;
}

inline std::vector<std::size_t> random_permutation(std::size_t n, Rng& rng) {
    std::vector<std::size_t> p(n);
    for (std::size_t i = 0; i < n; ++i) p[i] = i;
    std::shuffle(p.begin(), p.end(), rng);
    return p;
}

}  // namespace sublra

#endif
