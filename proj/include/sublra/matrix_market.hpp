#ifndef SUBLRA_MATRIX_MARKET_HPP
#define SUBLRA_MATRIX_MARKET_HPP

#include <cstddef>
#include <filesystem>
#include <iosfwd>
#include <stdexcept>
#include <string>

#include "sublra/matrix.hpp"

namespace sublra {

class MatrixMarketError : public std::runtime_error {
public:
    MatrixMarketError(std::size_t line, const std::string& what)
        : std::runtime_error("line " + std::to_string(line) + ": " + what), line_(line) {}
    std::size_t line() const noexcept { return line_; }

private:
    std::size_t line_;
};

enum class MatrixMarketLayout { array, coordinate };

// Real, integer or pattern fields; general, symmetric or skew-symmetric.
RMat read_matrix_market(std::istream& in);
RMat load_matrix_market(const std::filesystem::path& path);

void write_matrix_market(std::ostream& out, const RMat& M,
                         MatrixMarketLayout layout = MatrixMarketLayout::array);
void save_matrix_market(const std::filesystem::path& path, const RMat& M,
                        MatrixMarketLayout layout = MatrixMarketLayout::array);

// Internal binary format: "SLRAMAT1", rows and cols as uint64, then the
// row-major doubles, all little-endian.
RMat load_binary_matrix(const std::filesystem::path& path);
void save_binary_matrix(const std::filesystem::path& path, const RMat& M);

// Dispatch on extension: ".mtx" is Matrix Market, anything else binary.
RMat load_matrix(const std::filesystem::path& path);

}  // namespace sublra

#endif
