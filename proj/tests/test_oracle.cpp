#include <gtest/gtest.h>

#include <numeric>
#include <thread>

#include "sublra/multipliers.hpp"
#include "sublra/oracle.hpp"
#include "test_util.hpp"

using namespace sublra;

namespace {

std::vector<std::size_t> range(std::size_t n) {
    std::vector<std::size_t> v(n);
    std::iota(v.begin(), v.end(), 0);
    return v;
}

}  // namespace

TEST(Oracle, FullReadCountsEveryEntry) {
    const RMat M = testutil::random_matrix(5, 7, 1);
    MatrixOracle o(M);
    EXPECT_EQ(o.read_block(range(5), range(7)), M);
    EXPECT_EQ(o.reads(), 35u);
    EXPECT_DOUBLE_EQ(o.access_report().fraction, 1.0);
}

TEST(Oracle, RepeatedReadsCountOnce) {
    MatrixOracle o(testutil::random_matrix(4, 4, 2));
    const std::vector<std::size_t> r{1, 2}, c{0, 3};
    o.read_block(r, c);
    const auto first = o.reads();
    o.read_block(r, c);
    EXPECT_EQ(o.reads(), first);
    EXPECT_EQ(first, 4u);
}

TEST(Oracle, RowsAndColumnsOfLargeOracle) {
    MatrixOracle o(1024, 1024, [](std::size_t i, std::size_t j) { return double(i) - double(j); });
    std::vector<std::size_t> some(16);
    for (std::size_t t = 0; t < 16; ++t) some[t] = 60 * t + 3;
    o.read_block(some, range(1024));
    o.read_block(range(1024), some);
    EXPECT_LE(o.reads(), 16u * 1024 * 2);
    EXPECT_EQ(o.reads(), 16u * 1024 * 2 - 16 * 16);
}

TEST(Oracle, AccessReport) {
    MatrixOracle o(testutil::random_matrix(3, 4, 3));
    auto rep = o.access_report();
    EXPECT_EQ(rep.reads, 0u);
    EXPECT_EQ(rep.fraction, 0.0);
    const std::pair<std::size_t, std::size_t> pos{2, 1};
    o.read_entries(std::span(&pos, 1));
    rep = o.access_report();
    EXPECT_EQ(rep.reads, 1u);
    EXPECT_DOUBLE_EQ(rep.fraction, 1.0 / 12.0);
    EXPECT_TRUE(o.was_read(2, 1));
    EXPECT_FALSE(o.was_read(1, 2));
}

TEST(Oracle, SketchWithFewColumnsIsSublinear) {
    MatrixOracle o(1024, 1024, [](std::size_t i, std::size_t j) { return std::sin(double(i * 31 + j)); });
    const auto H = gen_abridged_hadamard(1024, 0, 8, 5, Side::right);
    apply_right(H, o);
    EXPECT_LT(o.access_report().fraction, 0.25);
    EXPECT_EQ(o.reads(), 8u * 1024);
}

TEST(Oracle, OutOfRangeIsRejected) {
    MatrixOracle o(RMat(2, 2));
    const std::vector<std::size_t> bad{2}, ok{0};
    EXPECT_THROW(o.read_block(bad, ok), std::out_of_range);
    EXPECT_THROW(o.read_block(ok, bad), std::out_of_range);
    EXPECT_EQ(o.reads(), 0u);
}

TEST(Oracle, TouchedMatchesCounter) {
    MatrixOracle o(testutil::random_matrix(6, 6, 4));
    const std::vector<std::size_t> r{0, 5}, c{1, 2, 4};
    o.read_block(r, c);
    o.read_block(c, r);
    const auto t = o.touched();
    EXPECT_EQ(static_cast<std::size_t>(std::count(t.begin(), t.end(), true)), o.reads());
}

TEST(Oracle, AuditIsUncounted) {
    const RMat M = testutil::random_matrix(3, 3, 5);
    MatrixOracle o(M);
    EXPECT_EQ(o.audit(), M);
    EXPECT_EQ(o.audit_entry(1, 2), M(1, 2));
    EXPECT_EQ(o.reads(), 0u);

    MatrixOracle rule(3, 2, [](std::size_t i, std::size_t j) { return double(10 * i + j); });
    EXPECT_EQ(rule.audit()(2, 1), 21.0);
    EXPECT_EQ(rule.reads(), 0u);
}

TEST(Oracle, ConcurrentReadsAreSerialized) {
    MatrixOracle o(testutil::random_matrix(64, 64, 6));
    std::vector<std::thread> threads;
    for (std::size_t t = 0; t < 4; ++t)
        threads.emplace_back([&o, t] {
            for (std::size_t i = 0; i < 64; ++i) {
                const std::vector<std::size_t> r{i}, c{t, t + 4};
                o.read_block(r, c);
            }
        });
    for (auto& th : threads) th.join();
    EXPECT_EQ(o.reads(), 64u * 8);
}

TEST(Oracle, DeterministicCounting) {
    std::size_t counts[2];
    for (int rep = 0; rep < 2; ++rep) {
        MatrixOracle o(testutil::random_matrix(32, 32, 7));
        const auto F = gen_abridged_hadamard(32, 2, 6, 11);
        apply_left(F, o);
        counts[rep] = o.reads();
    }
    EXPECT_EQ(counts[0], counts[1]);
}
