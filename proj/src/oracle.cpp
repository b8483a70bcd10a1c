#include "sublra/oracle.hpp"

#include <stdexcept>
#include <string>

namespace sublra {

MatrixOracle::MatrixOracle(RMat backing)
    : rows_(backing.rows()),
      cols_(backing.cols()),
      dense_(std::make_shared<const RMat>(std::move(backing))),
      touched_(rows_ * cols_, false) {}

MatrixOracle::MatrixOracle(std::size_t rows, std::size_t cols, EntryRule rule)
    : rows_(rows), cols_(cols), rule_(std::move(rule)), touched_(rows * cols, false) {
    if (!rule_) throw std::invalid_argument("MatrixOracle: empty entry rule");
}

double MatrixOracle::value(std::size_t i, std::size_t j) const {
    return dense_ ? (*dense_)(i, j) : rule_(i, j);
}

void MatrixOracle::mark(std::size_t i, std::size_t j) {
    const std::size_t at = i * cols_ + j;
    if (!touched_[at]) {
        touched_[at] = true;
        ++reads_;
    }
}

RMat MatrixOracle::read_block(std::span<const std::size_t> rows, std::span<const std::size_t> cols) {
    for (auto i : rows)
        if (i >= rows_) throw std::out_of_range("read_block: row index " + std::to_string(i) + " out of range");
    for (auto j : cols)
        if (j >= cols_) throw std::out_of_range("read_block: column index " + std::to_string(j) + " out of range");
    RMat B(rows.size(), cols.size());
    std::lock_guard lock(mu_);
    for (std::size_t a = 0; a < rows.size(); ++a)
        for (std::size_t b = 0; b < cols.size(); ++b) {
            mark(rows[a], cols[b]);
            B(a, b) = value(rows[a], cols[b]);
        }
    return B;
}

std::vector<double> MatrixOracle::read_entries(std::span<const std::pair<std::size_t, std::size_t>> pos) {
    for (auto [i, j] : pos)
        if (i >= rows_ || j >= cols_) throw std::out_of_range("read_entries: position out of range");
    std::vector<double> out(pos.size());
    std::lock_guard lock(mu_);
    for (std::size_t t = 0; t < pos.size(); ++t) {
        mark(pos[t].first, pos[t].second);
        out[t] = value(pos[t].first, pos[t].second);
    }
    return out;
}

AccessReport MatrixOracle::access_report() const {
    std::lock_guard lock(mu_);
    const double total = static_cast<double>(rows_) * static_cast<double>(cols_);
    return {reads_, total > 0 ? static_cast<double>(reads_) / total : 0.0};
}

std::size_t MatrixOracle::reads() const {
    std::lock_guard lock(mu_);
    return reads_;
}

bool MatrixOracle::was_read(std::size_t i, std::size_t j) const {
    if (i >= rows_ || j >= cols_) throw std::out_of_range("was_read: position out of range");
    std::lock_guard lock(mu_);
    return touched_[i * cols_ + j];
}

std::vector<bool> MatrixOracle::touched() const {
    std::lock_guard lock(mu_);
    return touched_;
}

const RMat& MatrixOracle::audit() const {
    if (dense_) return *dense_;
    std::call_once(materialized_, [this] {
        auto M = std::make_shared<RMat>(rows_, cols_);
        for (std::size_t i = 0; i < rows_; ++i)
            for (std::size_t j = 0; j < cols_; ++j) (*M)(i, j) = rule_(i, j);
        audit_cache_ = std::move(M);
    });
    return *audit_cache_;
}

double MatrixOracle::audit_entry(std::size_t i, std::size_t j) const {
    if (i >= rows_ || j >= cols_) throw std::out_of_range("audit_entry: position out of range");
    return value(i, j);
}

}  // namespace sublra
