#ifndef AFFDYN_LATTICE_HPP
#define AFFDYN_LATTICE_HPP

// LLL reduction and integer relation search against a real subspace.

#include "affdyn/affine.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <optional>
#include <vector>

namespace affdyn {

using LongVector = std::vector<long double>;

/// In-place LLL reduction (Lovasz parameter delta) of the rows of `basis`,
/// which must be linearly independent. Gram-Schmidt data are recomputed after
/// every change; sizes here are at most a few dozen.
inline void lll_reduce(std::vector<LongVector>& basis, long double delta = 0.99L, int max_iterations = 200000) {
    const std::size_t k_count = basis.size();
    if (k_count < 2)
        return;
    const std::size_t dim = basis.front().size();
    std::vector<LongVector> star(k_count, LongVector(dim));
    std::vector<LongVector> mu(k_count, LongVector(k_count));
    LongVector norm2(k_count);
    auto dot = [&](const LongVector& a, const LongVector& b) {
        long double s = 0;
        for (std::size_t i = 0; i < dim; ++i)
            s += a[i] * b[i];
        return s;
    };
    auto gram_schmidt = [&] {
        for (std::size_t i = 0; i < k_count; ++i) {
            star[i] = basis[i];
            for (std::size_t j = 0; j < i; ++j) {
                mu[i][j] = norm2[j] > 0 ? dot(basis[i], star[j]) / norm2[j] : 0.0L;
                for (std::size_t t = 0; t < dim; ++t)
                    star[i][t] -= mu[i][j] * star[j][t];
            }
            norm2[i] = dot(star[i], star[i]);
        }
    };
    gram_schmidt();
    std::size_t k = 1;
    for (int it = 0; k < k_count && it < max_iterations; ++it) {
        bool changed = false;
        for (std::size_t j = k; j-- > 0;) {
            const long double q = std::round(mu[k][j]);
            if (q != 0) {
                for (std::size_t t = 0; t < dim; ++t)
                    basis[k][t] -= q * basis[j][t];
                for (std::size_t t = 0; t <= j; ++t)
                    mu[k][t] -= q * (t == j ? 1.0L : mu[j][t]);
                changed = true;
            }
        }
        if (changed)
            gram_schmidt();
        if (norm2[k] >= (delta - mu[k][k - 1] * mu[k][k - 1]) * norm2[k - 1]) {
            ++k;
        } else {
            std::swap(basis[k], basis[k - 1]);
            gram_schmidt();
            k = std::max<std::size_t>(k - 1, 1);
        }
    }
}

struct RelationOptions {
    long long bound = 1'000'000;      ///< largest accepted |s_i|
    long double penalty = 1e12L;      ///< scale of the appended inner-product coordinates
    long double relation_tol = 1e-13L; ///< accepted |<s, w>| relative to |s|
};

namespace detail {

/// Columns of `null_basis` orthonormalized.
inline RMatrix orthonormal_columns(const RMatrix& m) {
    Eigen::ColPivHouseholderQR<RMatrix> qr(m);
    const Index rank = qr.rank();
    RMatrix q = qr.householderQ() * RMatrix::Identity(m.rows(), rank);
    return q;
}

inline long double relation_defect(const std::vector<long long>& s, const RMatrix& w) {
    long double worst = 0;
    long double norm = 0;
    for (long long x : s)
        norm += static_cast<long double>(x) * static_cast<long double>(x);
    norm = std::sqrt(norm);
    for (Index j = 0; j < w.cols(); ++j) {
        long double acc = 0;
        for (Index i = 0; i < w.rows(); ++i)
            acc += static_cast<long double>(s[static_cast<std::size_t>(i)]) * static_cast<long double>(w(i, j));
        worst = std::max(worst, std::fabs(acc));
    }
    return norm > 0 ? worst / norm : worst;
}

/// First nonzero entry positive.
inline void normalize_sign(std::vector<long long>& s) {
    for (long long x : s) {
        if (x == 0)
            continue;
        if (x < 0)
            for (auto& y : s)
                y = -y;
        return;
    }
}

inline long long linf(const std::vector<long long>& s) {
    long long m = 0;
    for (long long x : s)
        m = std::max(m, x < 0 ? -x : x);
    return m;
}

/// Smallest l-infinity norm, then lexicographic.
inline bool better_relation(const std::vector<long long>& a, const std::vector<long long>& b) {
    const long long na = linf(a);
    const long long nb = linf(b);
    if (na != nb)
        return na < nb;
    return a < b;
}

} // namespace detail

/// Nonzero integer s (|s_i| <= bound) orthogonal to every column of
/// null_basis, i.e. in the orthogonal complement of its span. An empty basis
/// makes every vector a relation and e_1 is returned; a basis spanning R^m
/// leaves no relation.
inline std::optional<std::vector<long long>> find_integer_relation(const RMatrix& null_basis,
                                                                   const RelationOptions& opt = {}) {
    const Index m = null_basis.rows();
    if (m == 0)
        return std::nullopt;
    std::vector<long long> e1(static_cast<std::size_t>(m), 0);
    e1[0] = 1;
    if (null_basis.cols() == 0)
        return e1;
    const RMatrix w = detail::orthonormal_columns(null_basis);
    const Index d = w.cols();
    if (d == 0)
        return e1;
    if (d >= m)
        return std::nullopt;

    // Escalating penalty scales. At scale K an accidental near-relation has
    // relative defect around 1/K, so candidates must beat both the noise
    // tolerance and 1e-3 / K.
    for (long double scale : {opt.penalty * 1e-6L, opt.penalty * 1e-3L, opt.penalty}) {
        std::vector<LongVector> basis(static_cast<std::size_t>(m), LongVector(static_cast<std::size_t>(m + d), 0.0L));
        for (Index i = 0; i < m; ++i) {
            basis[static_cast<std::size_t>(i)][static_cast<std::size_t>(i)] = 1.0L;
            for (Index j = 0; j < d; ++j)
                basis[static_cast<std::size_t>(i)][static_cast<std::size_t>(m + j)] = scale * w(i, j);
        }
        lll_reduce(basis);

        std::vector<std::vector<long long>> candidates;
        auto integer_part = [&](const LongVector& v) -> std::optional<std::vector<long long>> {
            std::vector<long long> s(static_cast<std::size_t>(m));
            for (Index i = 0; i < m; ++i) {
                const long double x = v[static_cast<std::size_t>(i)];
                if (std::fabs(x) > 9.0e18L)
                    return std::nullopt;
                s[static_cast<std::size_t>(i)] = std::llround(x);
            }
            return s;
        };
        for (const auto& b : basis)
            if (auto s = integer_part(b))
                candidates.push_back(*s);
        const std::size_t first = candidates.size();
        for (std::size_t a = 0; a < first; ++a)
            for (std::size_t b = a + 1; b < first; ++b)
                for (int sign : {1, -1}) {
                    std::vector<long long> s(static_cast<std::size_t>(m));
                    for (std::size_t i = 0; i < s.size(); ++i)
                        s[i] = candidates[a][i] + sign * candidates[b][i];
                    candidates.push_back(std::move(s));
                }

        const long double tol = std::min(opt.relation_tol, 1e-3L / scale);
        std::optional<std::vector<long long>> best;
        for (auto& s : candidates) {
            const long long norm = detail::linf(s);
            if (norm == 0 || norm > opt.bound)
                continue;
            if (detail::relation_defect(s, w) > tol)
                continue;
            detail::normalize_sign(s);
            if (!best || detail::better_relation(s, *best))
                best = s;
        }
        if (best)
            return best;
    }
    return std::nullopt;
}

} // namespace affdyn

#endif // AFFDYN_LATTICE_HPP
