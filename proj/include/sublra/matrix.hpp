#ifndef SUBLRA_MATRIX_HPP
#define SUBLRA_MATRIX_HPP

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstddef>
#include <cstdint>
#include <initializer_list>
#include <span>
#include <stdexcept>
#include <string>
#include <type_traits>
#include <vector>

namespace sublra {

using cplx = std::complex<double>;

template <typename T>
struct is_complex : std::false_type {};
template <typename T>
struct is_complex<std::complex<T>> : std::true_type {};
template <typename T>
inline constexpr bool is_complex_v = is_complex<T>::value;

template <typename Scalar>
inline Scalar conj_of(const Scalar& x) {
    if constexpr (is_complex_v<Scalar>)
        return std::conj(x);
    else
        return x;
}

template <typename Scalar>
inline double abs2(const Scalar& x) {
    if constexpr (is_complex_v<Scalar>)
        return std::norm(x);
    else
        return x * x;
}

// Nominal flop tally. One scalar add or multiply counts as one flop in
// either field; callers pass nullptr when they do not care.
class Flops {
public:
    void add(std::uint64_t n) noexcept { count_ += n; }
    std::uint64_t count() const noexcept { return count_; }
    void reset() noexcept { count_ = 0; }

private:
    std::uint64_t count_ = 0;
};

inline void tally(Flops* f, std::uint64_t n) noexcept {
    if (f) f->add(n);
}

//
// Dense row-major matrix over double or std::complex<double>.
//
template <typename Scalar>
class Mat {
public:
    using value_type = Scalar;

    Mat() = default;
    Mat(std::size_t rows, std::size_t cols, Scalar fill = Scalar{})
        : rows_(rows), cols_(cols), data_(rows * cols, fill) {}

    Mat(std::initializer_list<std::initializer_list<Scalar>> init) {
        rows_ = init.size();
        cols_ = rows_ ? init.begin()->size() : 0;
        data_.reserve(rows_ * cols_);
        for (const auto& r : init) {
            if (r.size() != cols_) throw std::invalid_argument("Mat: ragged initializer");
            data_.insert(data_.end(), r.begin(), r.end());
        }
    }

    static Mat identity(std::size_t n) {
        Mat I(n, n);
        for (std::size_t i = 0; i < n; ++i) I(i, i) = Scalar(1);
        return I;
    }

    static Mat diag(std::span<const double> d) {
        Mat D(d.size(), d.size());
        for (std::size_t i = 0; i < d.size(); ++i) D(i, i) = Scalar(d[i]);
        return D;
    }

    std::size_t rows() const noexcept { return rows_; }
    std::size_t cols() const noexcept { return cols_; }
    std::size_t size() const noexcept { return data_.size(); }
    bool empty() const noexcept { return data_.empty(); }

    Scalar& operator()(std::size_t i, std::size_t j) noexcept { return data_[i * cols_ + j]; }
    const Scalar& operator()(std::size_t i, std::size_t j) const noexcept {
        return data_[i * cols_ + j];
    }

    std::span<Scalar> data() noexcept { return data_; }
    std::span<const Scalar> data() const noexcept { return data_; }

    std::span<Scalar> row(std::size_t i) noexcept { return {data_.data() + i * cols_, cols_}; }
    std::span<const Scalar> row(std::size_t i) const noexcept {
        return {data_.data() + i * cols_, cols_};
    }

    std::vector<Scalar> col(std::size_t j) const {
        std::vector<Scalar> c(rows_);
        for (std::size_t i = 0; i < rows_; ++i) c[i] = (*this)(i, j);
        return c;
    }

    bool operator==(const Mat&) const = default;

private:
    std::size_t rows_ = 0;
    std::size_t cols_ = 0;
    std::vector<Scalar> data_;
};

using RMat = Mat<double>;
using CMat = Mat<cplx>;

template <typename Scalar>
Mat<Scalar> adjoint(const Mat<Scalar>& A) {
    Mat<Scalar> B(A.cols(), A.rows());
    for (std::size_t i = 0; i < A.rows(); ++i)
        for (std::size_t j = 0; j < A.cols(); ++j) B(j, i) = conj_of(A(i, j));
    return B;
}

template <typename Scalar>
Mat<Scalar> transpose(const Mat<Scalar>& A) {
    Mat<Scalar> B(A.cols(), A.rows());
    for (std::size_t i = 0; i < A.rows(); ++i)
        for (std::size_t j = 0; j < A.cols(); ++j) B(j, i) = A(i, j);
    return B;
}

template <typename To, typename From>
Mat<To> cast(const Mat<From>& A) {
    Mat<To> B(A.rows(), A.cols());
    auto src = A.data();
    auto dst = B.data();
    for (std::size_t i = 0; i < src.size(); ++i) dst[i] = To(src[i]);
    return B;
}

template <typename Scalar>
Mat<Scalar> matmul(const Mat<Scalar>& A, const Mat<Scalar>& B, Flops* flops = nullptr) {
    if (A.cols() != B.rows())
        throw std::invalid_argument("matmul: inner dimensions " + std::to_string(A.cols()) +
                                    " and " + std::to_string(B.rows()) + " differ");
    Mat<Scalar> C(A.rows(), B.cols());
    for (std::size_t i = 0; i < A.rows(); ++i) {
        auto ci = C.row(i);
        for (std::size_t p = 0; p < A.cols(); ++p) {
            const Scalar a = A(i, p);
            if (a == Scalar{}) continue;
            auto bp = B.row(p);
            for (std::size_t j = 0; j < B.cols(); ++j) ci[j] += a * bp[j];
        }
    }
    tally(flops, 2ull * A.rows() * A.cols() * B.cols());
    return C;
}

// A^H * B without forming the adjoint.
template <typename Scalar>
Mat<Scalar> adjoint_matmul(const Mat<Scalar>& A, const Mat<Scalar>& B, Flops* flops = nullptr) {
    if (A.rows() != B.rows()) throw std::invalid_argument("adjoint_matmul: row counts differ");
    Mat<Scalar> C(A.cols(), B.cols());
    for (std::size_t p = 0; p < A.rows(); ++p) {
        auto ap = A.row(p);
        auto bp = B.row(p);
        for (std::size_t i = 0; i < A.cols(); ++i) {
            const Scalar a = conj_of(ap[i]);
            if (a == Scalar{}) continue;
            auto ci = C.row(i);
            for (std::size_t j = 0; j < B.cols(); ++j) ci[j] += a * bp[j];
        }
    }
    tally(flops, 2ull * A.rows() * A.cols() * B.cols());
    return C;
}

template <typename Scalar>
Mat<Scalar> operator*(const Mat<Scalar>& A, const Mat<Scalar>& B) {
    return matmul(A, B);
}

template <typename Scalar>
Mat<Scalar> operator+(Mat<Scalar> A, const Mat<Scalar>& B) {
    if (A.rows() != B.rows() || A.cols() != B.cols())
        throw std::invalid_argument("matrix sum: shape mismatch");
    auto a = A.data();
    auto b = B.data();
    for (std::size_t i = 0; i < a.size(); ++i) a[i] += b[i];
    return A;
}

template <typename Scalar>
Mat<Scalar> operator-(Mat<Scalar> A, const Mat<Scalar>& B) {
    if (A.rows() != B.rows() || A.cols() != B.cols())
        throw std::invalid_argument("matrix difference: shape mismatch");
    auto a = A.data();
    auto b = B.data();
    for (std::size_t i = 0; i < a.size(); ++i) a[i] -= b[i];
    return A;
}

template <typename Scalar>
Mat<Scalar> operator*(Scalar s, Mat<Scalar> A) {
    for (auto& x : A.data()) x *= s;
    return A;
}

template <typename Scalar>
Mat<Scalar> operator*(Mat<Scalar> A, Scalar s) {
    return s * std::move(A);
}

template <typename Scalar>
double frobenius_norm(const Mat<Scalar>& A) {
    // scaled accumulation keeps tiny and huge entries representable
    double scale = 0.0, ssq = 1.0;
    for (const auto& x : A.data()) {
        const double a = std::abs(x);
        if (a == 0.0) continue;
        if (scale < a) {
            ssq = 1.0 + ssq * (scale / a) * (scale / a);
            scale = a;
        } else {
            ssq += (a / scale) * (a / scale);
        }
    }
    return scale * std::sqrt(ssq);
}

template <typename Scalar>
double max_abs(const Mat<Scalar>& A) {
    double m = 0.0;
    for (const auto& x : A.data()) m = std::max(m, static_cast<double>(std::abs(x)));
    return m;
}

template <typename Scalar>
Mat<Scalar> submatrix(const Mat<Scalar>& A, std::span<const std::size_t> rows,
                      std::span<const std::size_t> cols) {
    Mat<Scalar> B(rows.size(), cols.size());
    for (std::size_t i = 0; i < rows.size(); ++i)
        for (std::size_t j = 0; j < cols.size(); ++j) B(i, j) = A(rows[i], cols[j]);
    return B;
}

// Leading block A[0:r, 0:c].
template <typename Scalar>
Mat<Scalar> leading(const Mat<Scalar>& A, std::size_t r, std::size_t c) {
    Mat<Scalar> B(r, c);
    for (std::size_t i = 0; i < r; ++i)
        for (std::size_t j = 0; j < c; ++j) B(i, j) = A(i, j);
    return B;
}

template <typename Scalar>
Mat<Scalar> hstack(const Mat<Scalar>& A, const Mat<Scalar>& B) {
    if (A.rows() != B.rows()) throw std::invalid_argument("hstack: row counts differ");
    Mat<Scalar> C(A.rows(), A.cols() + B.cols());
    for (std::size_t i = 0; i < A.rows(); ++i) {
        std::copy(A.row(i).begin(), A.row(i).end(), C.row(i).begin());
        std::copy(B.row(i).begin(), B.row(i).end(), C.row(i).begin() + A.cols());
    }
    return C;
}

template <typename Scalar>
Mat<Scalar> vstack(const Mat<Scalar>& A, const Mat<Scalar>& B) {
    if (A.cols() != B.cols()) throw std::invalid_argument("vstack: column counts differ");
    Mat<Scalar> C(A.rows() + B.rows(), A.cols());
    for (std::size_t i = 0; i < A.rows(); ++i)
        std::copy(A.row(i).begin(), A.row(i).end(), C.row(i).begin());
    for (std::size_t i = 0; i < B.rows(); ++i)
        std::copy(B.row(i).begin(), B.row(i).end(), C.row(A.rows() + i).begin());
    return C;
}

// A * diag(d)
template <typename Scalar>
Mat<Scalar> scale_cols(Mat<Scalar> A, std::span<const double> d) {
    if (d.size() != A.cols()) throw std::invalid_argument("scale_cols: length mismatch");
    for (std::size_t i = 0; i < A.rows(); ++i)
        for (std::size_t j = 0; j < A.cols(); ++j) A(i, j) *= d[j];
    return A;
}

template <typename Scalar>
bool all_finite(const Mat<Scalar>& A) {
    for (const auto& x : A.data()) {
        if constexpr (is_complex_v<Scalar>) {
            if (!std::isfinite(x.real()) || !std::isfinite(x.imag())) return false;
        } else {
            if (!std::isfinite(x)) return false;
        }
    }
    return true;
}

}  // namespace sublra

#endif
