#include "sublra/matrix_market.hpp"

#include <algorithm>
#include <bit>
#include <cctype>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <iomanip>
#include <limits>
#include <sstream>
#include <vector>

namespace sublra {

namespace {

std::string lower(std::string s) {
    std::transform(s.begin(), s.end(), s.begin(), [](unsigned char c) { return std::tolower(c); });
    return s;
}

enum class Field { real, integer, pattern };
enum class Symmetry { general, symmetric, skew };

struct LineReader {
    std::istream& in;
    std::size_t number = 0;

    // Next line that is neither blank nor a comment.
    bool next(std::string& line) {
        while (std::getline(in, line)) {
            ++number;
            const auto p = line.find_first_not_of(" \t\r");
            if (p == std::string::npos || line[p] == '%') continue;
            return true;
        }
        return false;
    }
};

double parse_value(std::istringstream& ss, Field field, std::size_t line) {
    if (field == Field::pattern) return 1.0;
    double v = 0.0;
    if (!(ss >> v)) throw MatrixMarketError(line, "expected a numeric value");
    return v;
}

void expect_end(std::istringstream& ss, std::size_t line) {
    std::string extra;
    if (ss >> extra) throw MatrixMarketError(line, "unexpected trailing token '" + extra + "'");
}

void put(RMat& M, std::size_t i, std::size_t j, double v, Symmetry sym, std::size_t line) {
    M(i, j) = v;
    if (i == j) {
        if (sym == Symmetry::skew && v != 0.0) throw MatrixMarketError(line, "nonzero diagonal in skew-symmetric matrix");
        return;
    }
    if (sym == Symmetry::symmetric) M(j, i) = v;
    if (sym == Symmetry::skew) M(j, i) = -v;
}

}  // namespace

RMat read_matrix_market(std::istream& in) {
    std::string header;
    if (!std::getline(in, header)) throw MatrixMarketError(1, "empty file");
    std::istringstream hs(header);
    std::string banner, object, layout, field_s, sym_s;
    hs >> banner >> object >> layout >> field_s >> sym_s;
    if (banner != "%%MatrixMarket") throw MatrixMarketError(1, "missing %%MatrixMarket banner");
    if (lower(object) != "matrix") throw MatrixMarketError(1, "unsupported object '" + object + "'");
    layout = lower(layout);
    field_s = lower(field_s);
    sym_s = lower(sym_s);
    if (layout != "array" && layout != "coordinate") throw MatrixMarketError(1, "unknown format '" + layout + "'");

    Field field;
    if (field_s == "real" || field_s == "double") field = Field::real;
    else if (field_s == "integer") field = Field::integer;
    else if (field_s == "pattern" && layout == "coordinate") field = Field::pattern;
    else throw MatrixMarketError(1, "unsupported field '" + field_s + "'");

    Symmetry sym;
    if (sym_s == "general") sym = Symmetry::general;
    else if (sym_s == "symmetric") sym = Symmetry::symmetric;
    else if (sym_s == "skew-symmetric") sym = Symmetry::skew;
    else throw MatrixMarketError(1, "unsupported symmetry '" + sym_s + "'");

    LineReader reader{in, 1};
    std::string line;
    if (!reader.next(line)) throw MatrixMarketError(reader.number + 1, "missing size line");
    std::istringstream ss(line);
    long long rows = -1, cols = -1, nnz = -1;
    if (!(ss >> rows >> cols) || rows < 0 || cols < 0) throw MatrixMarketError(reader.number, "malformed size line");
    if (layout == "coordinate" && (!(ss >> nnz) || nnz < 0)) throw MatrixMarketError(reader.number, "malformed size line");
    expect_end(ss, reader.number);
    if (sym != Symmetry::general && rows != cols) throw MatrixMarketError(reader.number, "symmetric matrix must be square");

    RMat M(static_cast<std::size_t>(rows), static_cast<std::size_t>(cols));
    if (layout == "array") {
        for (std::size_t j = 0; j < M.cols(); ++j) {
            const std::size_t first = sym == Symmetry::general ? 0 : (sym == Symmetry::symmetric ? j : j + 1);
            for (std::size_t i = first; i < M.rows(); ++i) {
                if (!reader.next(line)) throw MatrixMarketError(reader.number + 1, "unexpected end of data");
                std::istringstream es(line);
                const double v = parse_value(es, field, reader.number);
                expect_end(es, reader.number);
                put(M, i, j, v, sym, reader.number);
            }
        }
    } else {
        for (long long t = 0; t < nnz; ++t) {
            if (!reader.next(line)) throw MatrixMarketError(reader.number + 1, "unexpected end of data");
            std::istringstream es(line);
            long long i = 0, j = 0;
            if (!(es >> i >> j)) throw MatrixMarketError(reader.number, "malformed coordinate entry");
            if (i < 1 || j < 1 || i > rows || j > cols) throw MatrixMarketError(reader.number, "index out of range");
            const double v = parse_value(es, field, reader.number);
            expect_end(es, reader.number);
            put(M, static_cast<std::size_t>(i - 1), static_cast<std::size_t>(j - 1), v, sym, reader.number);
        }
    }
    if (reader.next(line)) throw MatrixMarketError(reader.number, "data beyond the declared size");
    return M;
}

RMat load_matrix_market(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open '" + path.string() + "'");
    return read_matrix_market(in);
}

void write_matrix_market(std::ostream& out, const RMat& M, MatrixMarketLayout layout) {
    out << std::setprecision(std::numeric_limits<double>::max_digits10);
    if (layout == MatrixMarketLayout::array) {
        out << "%%MatrixMarket matrix array real general\n" << M.rows() << ' ' << M.cols() << '\n';
        for (std::size_t j = 0; j < M.cols(); ++j)
            for (std::size_t i = 0; i < M.rows(); ++i) out << M(i, j) << '\n';
    } else {
        std::size_t nnz = 0;
        for (std::size_t t = 0; t < M.size(); ++t) nnz += M.data()[t] != 0.0;
        out << "%%MatrixMarket matrix coordinate real general\n"
            << M.rows() << ' ' << M.cols() << ' ' << nnz << '\n';
        for (std::size_t j = 0; j < M.cols(); ++j)
            for (std::size_t i = 0; i < M.rows(); ++i)
                if (M(i, j) != 0.0) out << i + 1 << ' ' << j + 1 << ' ' << M(i, j) << '\n';
    }
}

void save_matrix_market(const std::filesystem::path& path, const RMat& M, MatrixMarketLayout layout) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write '" + path.string() + "'");
    write_matrix_market(out, M, layout);
    if (!out) throw std::runtime_error("write failed for '" + path.string() + "'");
}

namespace {

constexpr char kMagic[8] = {'S', 'L', 'R', 'A', 'M', 'A', 'T', '1'};

static_assert(std::endian::native == std::endian::little, "binary matrix format assumes a little-endian host");

void write_u64(std::ostream& out, std::uint64_t v) { out.write(reinterpret_cast<const char*>(&v), sizeof v); }

std::uint64_t read_u64(std::istream& in) {
    std::uint64_t v = 0;
    if (!in.read(reinterpret_cast<char*>(&v), sizeof v)) throw std::runtime_error("truncated binary matrix header");
    return v;
}

}  // namespace

RMat load_binary_matrix(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot open '" + path.string() + "'");
    char magic[8];
    if (!in.read(magic, 8) || std::memcmp(magic, kMagic, 8) != 0)
        throw std::runtime_error("'" + path.string() + "' is not a binary matrix file");
    const auto rows = read_u64(in), cols = read_u64(in);
    RMat M(rows, cols);
    const auto bytes = static_cast<std::streamsize>(M.size() * sizeof(double));
    if (!in.read(reinterpret_cast<char*>(M.data().data()), bytes)) throw std::runtime_error("truncated binary matrix data");
    return M;
}

void save_binary_matrix(const std::filesystem::path& path, const RMat& M) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write '" + path.string() + "'");
    out.write(kMagic, 8);
    write_u64(out, M.rows());
    write_u64(out, M.cols());
    out.write(reinterpret_cast<const char*>(M.data().data()), static_cast<std::streamsize>(M.size() * sizeof(double)));
    if (!out) throw std::runtime_error("write failed for '" + path.string() + "'");
}

RMat load_matrix(const std::filesystem::path& path) {
    if (path.extension() == ".mtx") return load_matrix_market(path);
    return load_binary_matrix(path);
}

}  // namespace sublra
