#ifndef AFFDYN_TESTS_SUPPORT_HPP
#define AFFDYN_TESTS_SUPPORT_HPP

// Shared fixtures and independent oracles for the unit and acceptance tests.

#include "affdyn/affdyn.hpp"

#include <cmath>
#include <random>
#include <string>
#include <vector>

namespace affdyn::fixtures {

inline Complex random_complex(std::mt19937_64& rng) {
    std::normal_distribution<double> nd;
    return {nd(rng), nd(rng)};
}

inline Rational random_rational(std::mt19937_64& rng, int range = 9) {
    std::uniform_int_distribution<int> num(-range, range);
    std::uniform_int_distribution<int> den(1, range);
    return Rational(num(rng), den(rng));
}

inline ExactComplex random_gaussian_rational(std::mt19937_64& rng) {
    return {ExactReal(random_rational(rng)), ExactReal(random_rational(rng))};
}

inline ExactAffineMap random_exact_map(std::mt19937_64& rng, Index n) {
    ExactMatrix a(n, n);
    ExactMatrix b(n, 1);
    for (Index i = 0; i < n; ++i) {
        b(i, 0) = random_gaussian_rational(rng);
        for (Index j = 0; j < n; ++j)
            a(i, j) = random_gaussian_rational(rng);
    }
    return {a, b};
}

inline AffineMap random_map(std::mt19937_64& rng, Index n) {
    CMatrix a(n, n);
    CVector b(n);
    for (Index i = 0; i < n; ++i) {
        b(i) = random_complex(rng);
        for (Index j = 0; j < n; ++j)
            a(i, j) = random_complex(rng);
    }
    return {a, b};
}

/// Matrix of the given block shape: constant diagonal per block, random
/// strictly lower part, nothing outside the blocks.
inline CMatrix random_shaped(std::mt19937_64& rng, const Partition& eta, bool unit_first = false) {
    const Index size = partition_size(eta);
    const auto starts = block_starts(eta);
    CMatrix m = CMatrix::Zero(size, size);
    for (std::size_t b = 0; b < eta.size(); ++b) {
        const Complex mu = unit_first && b == 0 ? Complex(1.0) : random_complex(rng);
        for (int i = 0; i < eta[b]; ++i) {
            m(starts[b] + i, starts[b] + i) = mu;
            for (int j = 0; j < i; ++j)
                m(starts[b] + i, starts[b] + j) = random_complex(rng);
        }
    }
    return m;
}

inline Partition random_partition(std::mt19937_64& rng, int size) {
    Partition eta;
    int left = size;
    while (left > 0) {
        const int k = 1 + static_cast<int>(rng() % static_cast<std::uint64_t>(left));
        eta.push_back(k);
        left -= k;
    }
    return eta;
}

struct RandomFamily {
    std::vector<AffineMap> maps;
    Partition eta; ///< block sizes of the hidden normal form
};

/// p commuting invertible maps on C^n: polynomials in one fixed nilpotent per
/// block (first block with eigenvalue 1), conjugated by a random phi(h).
inline RandomFamily random_commuting_family(std::mt19937_64& rng, int n, int p) {
    const int size = n + 1;
    RandomFamily out;
    out.eta = random_partition(rng, size);
    const auto starts = block_starts(out.eta);
    CMatrix nil = CMatrix::Zero(size, size);
    for (std::size_t b = 0; b < out.eta.size(); ++b)
        for (int i = 0; i < out.eta[b]; ++i)
            for (int j = 0; j < i; ++j)
                nil(starts[b] + i, starts[b] + j) = random_complex(rng);
    CMatrix q = phi(random_map(rng, n)).entries();
    while (std::abs(q.determinant()) < 1e-2)
        q = phi(random_map(rng, n)).entries();
    const CMatrix q_inv = q.inverse();
    for (int g = 0; g < p; ++g) {
        CMatrix l = CMatrix::Zero(size, size);
        for (std::size_t b = 0; b < out.eta.size(); ++b) {
            const Complex mu = b == 0 ? Complex(1.0) : random_complex(rng);
            const CMatrix blk = nil.block(starts[b], starts[b], out.eta[b], out.eta[b]);
            CMatrix power = CMatrix::Identity(out.eta[b], out.eta[b]);
            CMatrix acc = mu * power;
            for (int e = 1; e < out.eta[b]; ++e) {
                power = power * blk;
                acc += random_complex(rng) * power;
            }
            l.block(starts[b], starts[b], out.eta[b], out.eta[b]) = acc;
        }
        CMatrix m = q * l * q_inv;
        m.row(0).setZero();
        m(0, 0) = 1.0;
        out.maps.push_back(phi_inv(LiftedMatrix(m, LiftKind::PhiImage)));
    }
    return out;
}

/// Generator set from exact complex scalars written as (re, im) strings, n = 1.
inline GeneratorSet exact_set_1d(const std::vector<std::pair<std::string, std::string>>& u) {
    GeneratorSet g;
    g.dim = 1;
    for (std::size_t k = 0; k < u.size(); ++k) {
        ExactMatrix v(1, 1);
        v(0, 0) = ExactComplex(parse_exact_real(u[k].first), parse_exact_real(u[k].second));
        g.add(to_float(v), Coefficients::Integer, "u" + std::to_string(k + 1), v);
    }
    return g;
}

struct CorpusEntry {
    std::string label;
    std::vector<std::pair<std::string, std::string>> u;
};

/// Fixed mix of dense and non-dense subgroups Z u_1 + ... + Z u_m of C.
inline std::vector<CorpusEntry> density_corpus() {
    return {
        {"1, i, 1+i", {{"1", "0"}, {"0", "1"}, {"1", "1"}}},
        {"1", {{"1", "0"}}},
        {"1, i", {{"1", "0"}, {"0", "1"}}},
        {"1, sqrt2", {{"1", "0"}, {"sqrt(2)", "0"}}},
        {"1, i, sqrt2", {{"1", "0"}, {"0", "1"}, {"sqrt(2)", "0"}}},
        {"1, i, 1/3+i/5", {{"1", "0"}, {"0", "1"}, {"1/3", "1/5"}}},
        {"i sqrt2, i, 1", {{"0", "sqrt(2)"}, {"0", "1"}, {"1", "0"}}},
        {"pi, i pi, pi(1+i)/2", {{"pi", "0"}, {"0", "pi"}, {"pi/2", "pi/2"}}},
        {"1, i, pi+i pi/3", {{"1", "0"}, {"0", "1"}, {"pi", "pi/3"}}},
        {"2, 2i, sqrt3", {{"2", "0"}, {"0", "2"}, {"sqrt(3)", "0"}}},
        {"1, i, 2/7+3i/7", {{"1", "0"}, {"0", "1"}, {"2/7", "3/7"}}},
        {"1+i, 1-i, i sqrt3", {{"1", "1"}, {"1", "-1"}, {"0", "sqrt(3)"}}},
        {"1, i, sqrt2+i sqrt3", {{"1", "0"}, {"0", "1"}, {"sqrt(2)", "sqrt(3)"}}},
        {"1/2, i/2, sqrt2+i sqrt3", {{"1/2", "0"}, {"0", "1/2"}, {"sqrt(2)", "sqrt(3)"}}},
        {"1, i, pi+i sqrt2", {{"1", "0"}, {"0", "1"}, {"pi", "sqrt(2)"}}},
        {"1, i, sqrt3/7+i sqrt2/5", {{"1", "0"}, {"0", "1"}, {"sqrt(3)/7", "sqrt(2)/5"}}},
        {"1, i, (sqrt2+i sqrt3)/4", {{"1", "0"}, {"0", "1"}, {"sqrt(2)/4", "sqrt(3)/4"}}},
        {"1, i, golden+i(sqrt2-1)", {{"1", "0"}, {"0", "1"}, {"(sqrt(5)-1)/2", "sqrt(2)-1"}}},
        {"1, i sqrt2, sqrt3, i", {{"1", "0"}, {"0", "sqrt(2)"}, {"sqrt(3)", "0"}, {"0", "1"}}},
        {"1, sqrt2, i, i sqrt3", {{"1", "0"}, {"sqrt(2)", "0"}, {"0", "1"}, {"0", "sqrt(3)"}}},
    };
}

/// Fraction of the eps-cells of box^2 whose center lies within eps of some
/// c_1 u_1 + ... + c_m u_m with |c_i| <= bound. Brute force over all but the
/// last coefficient, which is solved for directly.
inline double lattice_coverage_oracle(const std::vector<Complex>& u, int bound, double eps, double lo, double hi) {
    const int cells = static_cast<int>(std::ceil((hi - lo) / eps - 1e-9));
    std::vector<char> hit(static_cast<std::size_t>(cells) * static_cast<std::size_t>(cells), 0);
    const std::size_t m = u.size();
    const Complex last = u.back();
    const double glo = lo - eps;
    const double ghi = hi + eps;
    auto mark = [&](double x, double y) {
        const int i0 = std::max(0, static_cast<int>(std::floor((x - eps - lo) / eps)));
        const int i1 = std::min(cells - 1, static_cast<int>(std::floor((x + eps - lo) / eps)));
        const int j0 = std::max(0, static_cast<int>(std::floor((y - eps - lo) / eps)));
        const int j1 = std::min(cells - 1, static_cast<int>(std::floor((y + eps - lo) / eps)));
        for (int i = i0; i <= i1; ++i)
            for (int j = j0; j <= j1; ++j) {
                const double cx = lo + (i + 0.5) * eps;
                const double cy = lo + (j + 0.5) * eps;
                if ((cx - x) * (cx - x) + (cy - y) * (cy - y) <= eps * eps)
                    hit[static_cast<std::size_t>(i) * static_cast<std::size_t>(cells) + static_cast<std::size_t>(j)] = 1;
            }
    };
    std::vector<int> c(m - 1, -bound);
    for (;;) {
        Complex base = 0;
        for (std::size_t k = 0; k + 1 < m; ++k)
            base += static_cast<double>(c[k]) * u[k];
        double tlo = -bound, thi = bound;
        bool empty = false;
        for (auto [b, d] : {std::pair{base.real(), last.real()}, std::pair{base.imag(), last.imag()}}) {
            if (d == 0) {
                empty = empty || b < glo || b > ghi;
                continue;
            }
            double a = (glo - b) / d, z = (ghi - b) / d;
            if (a > z)
                std::swap(a, z);
            tlo = std::max(tlo, std::ceil(a));
            thi = std::min(thi, std::floor(z));
        }
        if (!empty)
            for (double t = tlo; t <= thi; t += 1.0) {
                const Complex x = base + t * last;
                mark(x.real(), x.imag());
            }
        std::size_t k = 0;
        while (k < c.size() && c[k] == bound)
            c[k++] = -bound;
        if (k == c.size())
            break;
        ++c[k];
    }
    std::size_t count = 0;
    for (char h : hit)
        count += h;
    return static_cast<double>(count) / static_cast<double>(hit.size());
}

/// Orbit points {f^w(x)} by direct composition of the maps, word by word.
inline std::vector<CVector> naive_orbit(const std::vector<AffineMap>& gens, const CVector& x,
                                        const std::vector<Word>& words) {
    std::vector<CVector> out;
    for (const auto& w : words) {
        CVector y = x;
        for (std::size_t k = 0; k < gens.size(); ++k)
            for (int e = 0; e < w[k]; ++e)
                y = gens[k](y);
        out.push_back(y);
    }
    return out;
}

} // namespace affdyn::fixtures

#endif // AFFDYN_TESTS_SUPPORT_HPP
