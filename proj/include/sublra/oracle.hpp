#ifndef SUBLRA_ORACLE_HPP
#define SUBLRA_ORACLE_HPP

#include <cstddef>
#include <functional>
#include <memory>
#include <mutex>
#include <span>
#include <utility>
#include <vector>

#include "sublra/matrix.hpp"

namespace sublra {

struct AccessReport {
    std::size_t reads = 0;
    double fraction = 0.0;
};

//
// Counted gateway to a real input matrix. Algorithms read M only through
// read_block / read_entries; each distinct position is counted once.
// The audit channel exposes the full matrix for error metrics and is
// never counted.
//
class MatrixOracle {
public:
    using EntryRule = std::function<double(std::size_t, std::size_t)>;

    explicit MatrixOracle(RMat backing);
    MatrixOracle(std::size_t rows, std::size_t cols, EntryRule rule);

    MatrixOracle(const MatrixOracle&) = delete;
    MatrixOracle& operator=(const MatrixOracle&) = delete;

    std::size_t rows() const noexcept { return rows_; }
    std::size_t cols() const noexcept { return cols_; }

    RMat read_block(std::span<const std::size_t> rows, std::span<const std::size_t> cols);
    std::vector<double> read_entries(std::span<const std::pair<std::size_t, std::size_t>> pos);

    AccessReport access_report() const;
    std::size_t reads() const;
    bool was_read(std::size_t i, std::size_t j) const;
    // Copy of the touched bitmap in row-major order.
    std::vector<bool> touched() const;

    // Uncounted access for ground-truth metrics.
    const RMat& audit() const;
    double audit_entry(std::size_t i, std::size_t j) const;

private:
    double value(std::size_t i, std::size_t j) const;
    void mark(std::size_t i, std::size_t j);

    std::size_t rows_ = 0;
    std::size_t cols_ = 0;
    std::shared_ptr<const RMat> dense_;
    EntryRule rule_;
    mutable std::once_flag materialized_;
    mutable std::shared_ptr<const RMat> audit_cache_;

    mutable std::mutex mu_;
    std::vector<bool> touched_;
    std::size_t reads_ = 0;
};

}  // namespace sublra

#endif
