#ifndef AFFDYN_DENSITY_HPP
#define AFFDYN_DENSITY_HPP

// Density in C^n of Z u_1 + ... + Z u_m: dense iff no nonzero integer vector
// lies in the row space of the real 2n x m matrix [Re u; Im u].

#include "affdyn/exact.hpp"
#include "affdyn/generators.hpp"
#include "affdyn/lattice.hpp"

#include <Eigen/SVD>

#include <numeric>
#include <optional>
#include <string>
#include <vector>

namespace affdyn {

enum class Arithmetic { Exact, Float };
enum class DensityStatus { Dense, NotDense, Inconclusive };
enum class DensityReason { CountBound, RankDeficient, IntegerRelation, RelationSearchExhausted, NoIntegerRelation };

inline const char* to_string(Arithmetic a) { return a == Arithmetic::Exact ? "exact" : "float"; }

inline const char* to_string(DensityStatus s) {
    switch (s) {
    case DensityStatus::Dense: return "Dense";
    case DensityStatus::NotDense: return "NotDense";
    default: return "Inconclusive";
    }
}

inline const char* to_string(DensityReason r) {
    switch (r) {
    case DensityReason::CountBound: return "CountBound";
    case DensityReason::RankDeficient: return "RankDeficient";
    case DensityReason::IntegerRelation: return "IntegerRelation";
    case DensityReason::RelationSearchExhausted: return "RelationSearchExhausted";
    default: return "NoIntegerRelation";
    }
}

struct DensityVerdict {
    DensityStatus status = DensityStatus::Inconclusive;
    DensityReason reason = DensityReason::RelationSearchExhausted;
    std::optional<std::vector<long long>> witness;
    std::optional<std::vector<double>> normal; ///< unit vector of R^{2n} orthogonal to all columns
    Arithmetic mode = Arithmetic::Float;
    std::size_t m = 0;
    int rank = 0;
    long long bound = 0;
    double tolerance = 0.0;
};

struct DensityOptions {
    long long search_bound = 1'000'000;
    double rank_tol = 1e-8; ///< relative to max(1, largest singular value)
    long double penalty = 1e12L;
    long double relation_tol = 1e-13L;
};

/// m = p + r - 1 (r >= 2) or p (r = 1) generators can only be dense when m >= 2n + 1.
inline std::optional<DensityVerdict> count_bound(int p, int r, int n) {
    if (p < 0 || r < 1 || n < 1 || r > n + 1)
        throw InputError("count_bound: need p >= 0, n >= 1 and 1 <= r <= n + 1");
    const int m = r >= 2 ? p + r - 1 : p;
    if (m > 2 * n)
        return std::nullopt;
    DensityVerdict v;
    v.status = DensityStatus::NotDense;
    v.reason = DensityReason::CountBound;
    v.m = static_cast<std::size_t>(m);
    return v;
}

/// [Re u_1 .. Re u_m; Im u_1 .. Im u_m].
inline RMatrix realify(const GeneratorSet& g) {
    const Index n = g.dim;
    RMatrix m(2 * n, static_cast<Index>(g.size()));
    for (Index j = 0; j < m.cols(); ++j) {
        const CVector& v = g.vectors[static_cast<std::size_t>(j)].value;
        m.col(j).head(n) = v.real();
        m.col(j).tail(n) = v.imag();
    }
    return m;
}

inline ExactRealMatrix realify_exact(const GeneratorSet& g) {
    if (!g.all_exact())
        throw UnsupportedExact("exact density check needs every generator in exact form; use float mode");
    const Index n = g.dim;
    ExactRealMatrix m(2 * n, static_cast<Index>(g.size()));
    for (Index j = 0; j < m.cols(); ++j) {
        const ExactMatrix& v = *g.vectors[static_cast<std::size_t>(j)].exact;
        for (Index i = 0; i < n; ++i) {
            m(i, j) = v(i).real();
            m(n + i, j) = v(i).imag();
        }
    }
    return m;
}

/// rank([M; s/|s|]) <= rows(M), judged by the smallest singular value
/// against tol * max(1, sigma_max(M)).
inline bool witness_holds(const RMatrix& m, const std::vector<long long>& s, double tol = 1e-8) {
    if (static_cast<Index>(s.size()) != m.cols())
        throw InputError("witness length does not match the generator count");
    if (m.cols() <= m.rows())
        return true;
    RVector sv(m.cols());
    for (Index j = 0; j < m.cols(); ++j)
        sv(j) = static_cast<double>(s[static_cast<std::size_t>(j)]);
    if (sv.norm() == 0.0)
        return false;
    RMatrix stacked(m.rows() + 1, m.cols());
    stacked.topRows(m.rows()) = m;
    stacked.row(m.rows()) = sv.transpose() / sv.norm();
    const RVector sigma = Eigen::JacobiSVD<RMatrix>(stacked).singularValues();
    const double top = m.size() ? Eigen::JacobiSVD<RMatrix>(m).singularValues()(0) : 0.0;
    return sigma(m.rows()) <= tol * std::max(1.0, top);
}

namespace detail {

inline ExactRealMatrix select(const ExactRealMatrix& m, const std::vector<Index>& rows, const std::vector<Index>& cols) {
    ExactRealMatrix out(static_cast<Index>(rows.size()), static_cast<Index>(cols.size()));
    for (std::size_t i = 0; i < rows.size(); ++i)
        for (std::size_t j = 0; j < cols.size(); ++j)
            out(static_cast<Index>(i), static_cast<Index>(j)) = m(rows[i], cols[j]);
    return out;
}

inline std::vector<Index> iota(Index n) {
    std::vector<Index> v(static_cast<std::size_t>(n));
    std::iota(v.begin(), v.end(), Index{0});
    return v;
}

/// Next k-subset of {0..n-1} in lexicographic order.
inline bool next_combination(std::vector<Index>& c, Index n) {
    const auto k = static_cast<Index>(c.size());
    for (Index i = k - 1; i >= 0; --i) {
        if (c[static_cast<std::size_t>(i)] < n - k + i) {
            ++c[static_cast<std::size_t>(i)];
            for (Index j = i + 1; j < k; ++j)
                c[static_cast<std::size_t>(j)] = c[static_cast<std::size_t>(j - 1)] + 1;
            return true;
        }
    }
    return false;
}

/// Basis of the null space of a rational matrix (rows of length `cols`).
inline std::vector<std::vector<Rational>> rational_nullspace(std::vector<std::vector<Rational>> a, std::size_t cols) {
    std::vector<std::size_t> pivots;
    std::size_t row = 0;
    for (std::size_t c = 0; c < cols && row < a.size(); ++c) {
        std::size_t piv = row;
        while (piv < a.size() && a[piv][c] == 0)
            ++piv;
        if (piv == a.size())
            continue;
        std::swap(a[piv], a[row]);
        const Rational inv = 1 / a[row][c];
        for (auto& x : a[row])
            x *= inv;
        for (std::size_t i = 0; i < a.size(); ++i) {
            if (i == row || a[i][c] == 0)
                continue;
            const Rational f = a[i][c];
            for (std::size_t j = 0; j < cols; ++j)
                a[i][j] -= f * a[row][j];
        }
        pivots.push_back(c);
        ++row;
    }
    std::vector<std::vector<Rational>> basis;
    for (std::size_t free = 0; free < cols; ++free) {
        if (std::find(pivots.begin(), pivots.end(), free) != pivots.end())
            continue;
        std::vector<Rational> v(cols);
        v[free] = 1;
        for (std::size_t i = 0; i < pivots.size(); ++i)
            v[pivots[i]] = -a[i][free];
        basis.push_back(std::move(v));
    }
    return basis;
}

/// Primitive integer multiple, first nonzero entry positive.
inline std::vector<long long> primitive_integer(const std::vector<Rational>& v) {
    BigInt lcm = 1;
    for (const auto& x : v)
        lcm = boost::multiprecision::lcm(lcm, BigInt(boost::multiprecision::denominator(x)));
    std::vector<BigInt> ints;
    BigInt g = 0;
    for (const auto& x : v) {
        BigInt k = boost::multiprecision::numerator(x) * (lcm / boost::multiprecision::denominator(x));
        g = boost::multiprecision::gcd(g, k);
        ints.push_back(k);
    }
    std::vector<long long> out;
    for (auto& k : ints) {
        if (g != 0)
            k /= g;
        if (k > BigInt(std::numeric_limits<long long>::max()) || k < BigInt(std::numeric_limits<long long>::min() + 1))
            throw NumericalError("integer relation does not fit in 64 bits");
        out.push_back(static_cast<long long>(k));
    }
    normalize_sign(out);
    return out;
}

struct ExactRank {
    int rank = 0;
    std::vector<Index> rows;
    std::vector<Index> cols;
};

inline ExactRank exact_rank(const ExactRealMatrix& m) {
    for (Index k = std::min(m.rows(), m.cols()); k >= 1; --k) {
        std::vector<Index> rows = iota(k);
        do {
            std::vector<Index> cols = iota(k);
            do {
                if (!determinant(select(m, rows, cols)).is_zero())
                    return {static_cast<int>(k), rows, cols};
            } while (next_combination(cols, m.cols()));
        } while (next_combination(rows, m.rows()));
    }
    return {};
}

} // namespace detail

/// Every (rows+1)-minor of [M; s] vanishes.
inline bool witness_holds_exact(const ExactRealMatrix& m, const std::vector<long long>& s) {
    if (static_cast<Index>(s.size()) != m.cols())
        throw InputError("witness length does not match the generator count");
    if (std::all_of(s.begin(), s.end(), [](long long x) { return x == 0; }))
        return false;
    const Index k = m.rows() + 1;
    if (m.cols() < k)
        return true;
    ExactRealMatrix stacked(k, m.cols());
    for (Index i = 0; i < m.rows(); ++i)
        for (Index j = 0; j < m.cols(); ++j)
            stacked(i, j) = m(i, j);
    for (Index j = 0; j < m.cols(); ++j)
        stacked(m.rows(), j) = ExactReal(s[static_cast<std::size_t>(j)]);
    std::vector<Index> cols = detail::iota(k);
    const auto rows = detail::iota(k);
    do {
        if (!determinant(detail::select(stacked, rows, cols)).is_zero())
            return false;
    } while (detail::next_combination(cols, m.cols()));
    return true;
}

namespace detail {

inline DensityVerdict exact_density(const GeneratorSet& g, const DensityOptions& opt) {
    const ExactRealMatrix m = realify_exact(g);
    const Index two_n = m.rows();
    const Index cols = m.cols();
    DensityVerdict v;
    v.mode = Arithmetic::Exact;
    v.m = static_cast<std::size_t>(cols);
    v.bound = opt.search_bound;
    v.tolerance = 0.0;

    const ExactRank rk = exact_rank(m);
    v.rank = rk.rank;
    if (rk.rank < two_n) {
        // Left null vector by cofactors of the rank-defining rows plus one more.
        std::vector<double> normal(static_cast<std::size_t>(two_n), 0.0);
        if (rk.rank == 0) {
            normal[0] = 1.0;
        } else {
            Index extra = 0;
            while (std::find(rk.rows.begin(), rk.rows.end(), extra) != rk.rows.end())
                ++extra;
            std::vector<Index> rows = rk.rows;
            rows.push_back(extra);
            std::sort(rows.begin(), rows.end());
            for (std::size_t t = 0; t < rows.size(); ++t) {
                std::vector<Index> others;
                for (std::size_t u = 0; u < rows.size(); ++u)
                    if (u != t)
                        others.push_back(rows[u]);
                const ExactReal c = determinant(select(m, others, rk.cols));
                normal[static_cast<std::size_t>(rows[t])] = (t % 2 == 0 ? 1.0 : -1.0) * c.to_double();
            }
            double norm = 0.0;
            for (double x : normal)
                norm += x * x;
            for (double& x : normal)
                x /= std::sqrt(norm);
        }
        v.status = DensityStatus::NotDense;
        v.reason = DensityReason::RankDeficient;
        v.normal = normal;
        return v;
    }

    // Kernel of M spanned by cofactor vectors on C ∪ {j}; s lies in the row
    // space iff s . w = 0 for all of them, and that expands monomial by
    // monomial into a rational linear system.
    std::vector<std::vector<Rational>> equations;
    for (Index j = 0; j < cols; ++j) {
        if (std::find(rk.cols.begin(), rk.cols.end(), j) != rk.cols.end())
            continue;
        std::vector<Index> support = rk.cols;
        support.push_back(j);
        std::sort(support.begin(), support.end());
        std::map<Monomial, std::vector<Rational>> rows;
        for (std::size_t t = 0; t < support.size(); ++t) {
            std::vector<Index> others;
            for (std::size_t u = 0; u < support.size(); ++u)
                if (u != t)
                    others.push_back(support[u]);
            ExactReal w = determinant(select(m, iota(two_n), others));
            if (t % 2 == 1)
                w = -w;
            for (const auto& [mono, c] : w.terms()) {
                auto& row = rows[mono];
                row.resize(static_cast<std::size_t>(cols));
                row[static_cast<std::size_t>(support[t])] += c;
            }
        }
        for (auto& [mono, row] : rows)
            equations.push_back(std::move(row));
    }
    const auto basis = rational_nullspace(equations, static_cast<std::size_t>(cols));
    if (basis.empty()) {
        v.status = DensityStatus::Dense;
        v.reason = DensityReason::NoIntegerRelation;
        return v;
    }
    // Shorten the integer relations found with LLL and keep the smallest.
    std::vector<LongVector> lattice;
    std::vector<std::vector<long long>> candidates;
    for (const auto& b : basis) {
        candidates.push_back(primitive_integer(b));
        lattice.emplace_back(candidates.back().begin(), candidates.back().end());
    }
    lll_reduce(lattice);
    std::vector<std::vector<long long>> reduced;
    for (const auto& b : lattice) {
        std::vector<long long> s;
        for (long double x : b)
            s.push_back(std::llround(x));
        reduced.push_back(std::move(s));
    }
    for (std::size_t a = 0; a < reduced.size(); ++a) {
        candidates.push_back(reduced[a]);
        for (std::size_t b = a + 1; b < reduced.size(); ++b)
            for (int sign : {1, -1}) {
                std::vector<long long> s(reduced[a].size());
                for (std::size_t i = 0; i < s.size(); ++i)
                    s[i] = reduced[a][i] + sign * reduced[b][i];
                candidates.push_back(std::move(s));
            }
    }
    std::optional<std::vector<long long>> best;
    for (auto& s : candidates) {
        if (linf(s) == 0)
            continue;
        normalize_sign(s);
        if (!best || better_relation(s, *best))
            best = s;
    }
    if (!witness_holds_exact(m, *best))
        throw NumericalError("exact integer relation failed its own rank re-check");
    v.status = DensityStatus::NotDense;
    v.reason = DensityReason::IntegerRelation;
    v.witness = best;
    return v;
}

inline DensityVerdict float_density(const GeneratorSet& g, const DensityOptions& opt) {
    const RMatrix m = realify(g);
    const Index two_n = m.rows();
    const Index cols = m.cols();
    DensityVerdict v;
    v.mode = Arithmetic::Float;
    v.m = static_cast<std::size_t>(cols);
    v.bound = opt.search_bound;
    v.tolerance = opt.rank_tol;

    Eigen::JacobiSVD<RMatrix> svd(m, Eigen::ComputeFullU | Eigen::ComputeFullV);
    const RVector sigma = svd.singularValues();
    const double top = sigma.size() ? sigma(0) : 0.0;
    int rank = 0;
    for (Index i = 0; i < sigma.size(); ++i)
        rank += sigma(i) > opt.rank_tol * std::max(1.0, top);
    v.rank = rank;
    if (rank < two_n) {
        const RVector normal = svd.matrixU().col(two_n - 1);
        v.normal = std::vector<double>(normal.data(), normal.data() + normal.size());
        v.status = DensityStatus::NotDense;
        v.reason = DensityReason::RankDeficient;
        return v;
    }
    const RMatrix null_basis = svd.matrixV().rightCols(cols - rank);
    RelationOptions ro;
    ro.bound = opt.search_bound;
    ro.penalty = opt.penalty;
    ro.relation_tol = opt.relation_tol;
    auto s = find_integer_relation(null_basis, ro);
    if (s && witness_holds(m, *s, opt.rank_tol)) {
        v.status = DensityStatus::NotDense;
        v.reason = DensityReason::IntegerRelation;
        v.witness = s;
        return v;
    }
    v.status = DensityStatus::Inconclusive;
    v.reason = DensityReason::RelationSearchExhausted;
    return v;
}

} // namespace detail

/// Density of the Z-span of the generators (tags are ignored). NotDense is
/// always certified; Dense only in exact mode; float mode reports
/// Inconclusive when the relation search comes back empty.
inline DensityVerdict group_rank_density(const GeneratorSet& g, Arithmetic mode, const DensityOptions& opt = {}) {
    if (g.dim < 1)
        throw InputError("density check needs dimension >= 1");
    if (g.size() == 0) {
        DensityVerdict v;
        v.status = DensityStatus::NotDense;
        v.reason = DensityReason::RankDeficient;
        v.mode = mode;
        v.bound = opt.search_bound;
        v.tolerance = mode == Arithmetic::Float ? opt.rank_tol : 0.0;
        std::vector<double> normal(static_cast<std::size_t>(2 * g.dim), 0.0);
        normal[0] = 1.0;
        v.normal = normal;
        return v;
    }
    return mode == Arithmetic::Exact ? detail::exact_density(g, opt) : detail::float_density(g, opt);
}

} // namespace affdyn

#endif // AFFDYN_DENSITY_HPP
