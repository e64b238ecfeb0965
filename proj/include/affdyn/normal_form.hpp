#ifndef AFFDYN_NORMAL_FORM_HPP
#define AFFDYN_NORMAL_FORM_HPP

// Simultaneous block triangularization of a commuting family of lifted
// affine maps by a conjugation P in the phi image.

#include "affdyn/affine.hpp"
#include "affdyn/block_shape.hpp"

#include <Eigen/Eigenvalues>

#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace affdyn {

struct NormalFormOptions {
    double cluster_tol = 1e-8;  ///< eigenvalues closer than this (relative to max(1, scale)) are one cluster
    double residual_tol = 1e-9; ///< shape residual accepted after conjugation
    double commute_tol = 1e-9;
};

template <class B>
struct BasicBlockStructure {
    Partition eta;
    typename B::Matrix P;
    typename B::Matrix P_inv;
    typename B::Vector v0;
    typename B::Vector w0;
    double residual = 0.0;
    /// block_eigenvalues[k][i]: diagonal value of generator i on block k.
    std::vector<std::vector<Complex>> block_eigenvalues;

    int r() const { return static_cast<int>(eta.size()); }
    Index size() const { return partition_size(eta); }
    Index n() const { return size() - 1; }
};

using BlockStructure = BasicBlockStructure<FloatBackend>;
using ExactBlockStructure = BasicBlockStructure<ExactBackend>;

template <class B>
struct BasicCanonicalVectors {
    typename B::Vector u0;
    std::vector<typename B::Vector> e;    ///< e^(k), k = 1..r
    std::vector<typename B::Matrix> J;    ///< block projectors
    std::vector<typename B::Vector> Pe;   ///< P e^(k)
    std::vector<typename B::Vector> p2_Pe; ///< P e^(k) without its first coordinate
};

using CanonicalVectors = BasicCanonicalVectors<FloatBackend>;
using ExactCanonicalVectors = BasicCanonicalVectors<ExactBackend>;

template <class B>
BasicCanonicalVectors<B> canonical_vectors(const BasicBlockStructure<B>& s) {
    using Scalar = typename B::Scalar;
    const Index size = s.size();
    const auto starts = block_starts(s.eta);
    BasicCanonicalVectors<B> out;
    out.u0 = B::zero_vector(size);
    for (std::size_t k = 0; k < starts.size(); ++k) {
        out.u0(starts[k]) = Scalar(1);
        typename B::Vector e = B::zero_vector(size);
        e(starts[k]) = Scalar(1);
        typename B::Matrix j = B::zeros(size, size);
        for (Index i = 0; i < s.eta[k]; ++i)
            j(starts[k] + i, starts[k] + i) = Scalar(1);
        typename B::Vector pe = s.P * e;
        out.p2_Pe.push_back(drop_first(pe));
        out.Pe.push_back(std::move(pe));
        out.e.push_back(std::move(e));
        out.J.push_back(std::move(j));
    }
    return out;
}

struct CommutatorReport {
    std::size_t i = 0;
    std::size_t j = 0;
    double norm = 0.0;
};

/// First pair whose lifted commutator exceeds tol * max(1, |L_i| |L_j|).
inline std::optional<CommutatorReport> find_noncommuting_pair(std::span<const AffineMap> gens, double tol = 1e-9) {
    std::vector<CMatrix> lifts;
    for (const auto& f : gens)
        lifts.push_back(phi(f).entries());
    for (std::size_t i = 0; i < lifts.size(); ++i)
        for (std::size_t j = i + 1; j < lifts.size(); ++j) {
            const double norm = max_abs(lifts[i] * lifts[j] - lifts[j] * lifts[i]);
            if (norm > tol * std::max(1.0, max_abs(lifts[i]) * max_abs(lifts[j])))
                return CommutatorReport{i, j, norm};
        }
    return std::nullopt;
}

inline std::optional<CommutatorReport> find_noncommuting_pair(std::span<const ExactAffineMap> gens) {
    std::vector<ExactMatrix> lifts;
    for (const auto& f : gens)
        lifts.push_back(phi(f).entries());
    for (std::size_t i = 0; i < lifts.size(); ++i)
        for (std::size_t j = i + 1; j < lifts.size(); ++j) {
            const ExactMatrix c = lifts[i] * lifts[j] - lifts[j] * lifts[i];
            if (!(c == ExactMatrix::zero(c.rows(), c.cols())))
                return CommutatorReport{i, j, max_abs(to_float(c))};
        }
    return std::nullopt;
}

template <class Map>
void check_commuting(std::span<const Map> gens, double tol = 1e-9) {
    std::optional<CommutatorReport> bad;
    if constexpr (std::is_same_v<Map, ExactAffineMap>)
        bad = find_noncommuting_pair(gens);
    else
        bad = find_noncommuting_pair(gens, tol);
    if (bad)
        throw InputError("generators " + std::to_string(bad->i) + " and " + std::to_string(bad->j) +
                         " do not commute (commutator max norm " + std::to_string(bad->norm) + ")");
}

namespace detail {

inline CMatrix orthonormal_complement(const CMatrix& y) {
    const Index d = y.rows();
    const Index k = y.cols();
    if (k == 0)
        return CMatrix::Identity(d, d);
    CMatrix q = Eigen::HouseholderQR<CMatrix>(y).householderQ() * CMatrix::Identity(d, d);
    return q.rightCols(d - k);
}

/// Multiply each column by a unit scalar so that its largest entry (first
/// one on ties) is real and positive.
inline void normalize_column_phases(Eigen::Ref<CMatrix> m) {
    for (Index j = 0; j < m.cols(); ++j) {
        Index arg = 0;
        double best = -1.0;
        for (Index i = 0; i < m.rows(); ++i)
            if (std::abs(m(i, j)) > best * (1.0 + 1e-12)) {
                best = std::abs(m(i, j));
                arg = i;
            }
        if (best > 0.0)
            m.col(j) *= std::conj(m(arg, j)) / best;
    }
}

struct Cluster {
    std::vector<Index> members; // positions in the eigenvalue list
    Complex mean;
};

/// Eigenvalue clusters. A defective eigenvalue of multiplicity k is smeared
/// by rounding over a disc of radius about scale * (eps)^(1/k), so a set of
/// k eigenvalues is accepted as one cluster when it stays connected under
/// single linkage at max(floor, 10 scale (eps d)^(1/k)); otherwise it is split
/// into its connected components and each is examined again.
inline std::vector<Cluster> cluster_eigenvalues(const CVector& ev, double floor_tol, double scale) {
    const double s = std::max(1.0, scale);
    const double unit = std::numeric_limits<double>::epsilon() * static_cast<double>(ev.size());
    auto threshold = [&](std::size_t k) {
        return std::max(floor_tol * s, 10.0 * s * std::pow(unit, 1.0 / static_cast<double>(k)));
    };
    auto components = [&](const std::vector<Index>& set, double t) {
        std::vector<int> comp(set.size(), -1);
        int count = 0;
        for (std::size_t a = 0; a < set.size(); ++a) {
            if (comp[a] >= 0)
                continue;
            comp[a] = count;
            std::vector<std::size_t> stack{a};
            while (!stack.empty()) {
                const std::size_t x = stack.back();
                stack.pop_back();
                for (std::size_t y = 0; y < set.size(); ++y)
                    if (comp[y] < 0 && std::abs(ev(set[x]) - ev(set[y])) <= t) {
                        comp[y] = count;
                        stack.push_back(y);
                    }
            }
            ++count;
        }
        std::vector<std::vector<Index>> out(static_cast<std::size_t>(count));
        for (std::size_t a = 0; a < set.size(); ++a)
            out[static_cast<std::size_t>(comp[a])].push_back(set[a]);
        return out;
    };
    std::vector<Cluster> out;
    std::vector<std::vector<Index>> pending(1);
    for (Index i = 0; i < ev.size(); ++i)
        pending[0].push_back(i);
    while (!pending.empty()) {
        auto set = std::move(pending.back());
        pending.pop_back();
        auto parts = components(set, threshold(set.size()));
        if (parts.size() == 1) {
            Complex sum = 0.0;
            for (Index x : set)
                sum += ev(x);
            std::sort(set.begin(), set.end());
            out.push_back({set, sum / static_cast<double>(set.size())});
        } else {
            for (auto& p : parts)
                pending.push_back(std::move(p));
        }
    }
    std::sort(out.begin(), out.end(), [](const Cluster& a, const Cluster& b) { return a.members < b.members; });
    return out;
}

/// Swap diagonal entries k, k+1 of an upper triangular Schur factor T,
/// updating the unitary Q (R = Q T Q^H).
inline void swap_schur(CMatrix& t, CMatrix& q, Index k) {
    const Complex a = t(k, k);
    const Complex c = t(k + 1, k + 1);
    const Complex b = t(k, k + 1);
    Eigen::Vector2cd x(b, c - a);
    const double nx = x.norm();
    if (nx == 0.0)
        return;
    x /= nx;
    Eigen::Matrix2cd g;
    g << x(0), -std::conj(x(1)), x(1), std::conj(x(0));
    t.middleRows(k, 2) = g.adjoint() * t.middleRows(k, 2);
    t.middleCols(k, 2) = t.middleCols(k, 2) * g;
    q.middleCols(k, 2) = q.middleCols(k, 2) * g;
    t(k + 1, k) = 0.0;
}

/// Orthonormal basis of the invariant subspace belonging to the eigenvalues
/// flagged in `take` (indexed like the Schur diagonal), by reordering.
inline CMatrix spectral_subspace(CMatrix t, CMatrix q, std::vector<bool> take) {
    const Index d = t.rows();
    Index placed = 0;
    for (Index i = 0; i < d; ++i) {
        if (!take[static_cast<std::size_t>(i)])
            continue;
        for (Index k = i - 1; k >= placed; --k) {
            swap_schur(t, q, k);
            std::swap(take[static_cast<std::size_t>(k)], take[static_cast<std::size_t>(k + 1)]);
        }
        ++placed;
    }
    return q.leftCols(placed);
}

/// Recursively splits span(u) into joint generalized eigenspaces.
inline void split_joint(const std::vector<CMatrix>& lifts, const CMatrix& u, double floor_tol, double scale,
                        std::vector<CMatrix>& out) {
    for (const auto& l : lifts) {
        const CMatrix r = u.adjoint() * l * u;
        if (r.rows() < 2)
            break;
        Eigen::ComplexSchur<CMatrix> schur(r);
        if (schur.info() != Eigen::Success)
            throw NumericalError("Schur decomposition did not converge");
        const CMatrix& t = schur.matrixT();
        const CVector diag = t.diagonal();
        auto clusters = cluster_eigenvalues(diag, floor_tol, scale);
        if (clusters.size() < 2)
            continue;
        for (const auto& c : clusters) {
            std::vector<bool> take(static_cast<std::size_t>(diag.size()), false);
            for (Index x : c.members)
                take[static_cast<std::size_t>(x)] = true;
            const CMatrix y = spectral_subspace(t, schur.matrixU(), take);
            split_joint(lifts, u * y, floor_tol, scale, out);
        }
        return;
    }
    out.push_back(u);
}

/// Unitary V with V^H N_i V strictly lower triangular (approximately) for a
/// commuting family of nilpotent matrices: the last column is a common null
/// vector, the rest recurses on the orthogonal complement.
inline CMatrix triangularize_nilpotent(const std::vector<CMatrix>& ns, Index d) {
    if (d <= 1)
        return CMatrix::Identity(d, d);
    CMatrix stacked(static_cast<Index>(ns.size()) * d, d);
    for (std::size_t i = 0; i < ns.size(); ++i)
        stacked.middleRows(static_cast<Index>(i) * d, d) = ns[i];
    Eigen::JacobiSVD<CMatrix> svd(stacked, Eigen::ComputeFullV);
    const CVector c = svd.matrixV().col(d - 1);
    const CMatrix comp = orthonormal_complement(c);
    std::vector<CMatrix> sub;
    for (const auto& n : ns)
        sub.push_back(comp.adjoint() * n * comp);
    const CMatrix inner = triangularize_nilpotent(sub, d - 1);
    CMatrix v(d, d);
    v.leftCols(d - 1) = comp * inner;
    v.col(d - 1) = c;
    return v;
}

inline std::vector<CMatrix> shifted_restrictions(const std::vector<CMatrix>& lifts, const CMatrix& basis,
                                                 std::vector<Complex>* means = nullptr) {
    std::vector<CMatrix> out;
    const Index k = basis.cols();
    for (const auto& l : lifts) {
        CMatrix r = basis.adjoint() * l * basis;
        const Complex mu = k > 0 ? r.trace() / static_cast<double>(k) : Complex(0.0);
        if (means)
            means->push_back(mu);
        r.diagonal().array() -= mu;
        out.push_back(std::move(r));
    }
    return out;
}

inline bool tuple_less(const std::vector<Complex>& a, const std::vector<Complex>& b, double tol) {
    for (std::size_t i = 0; i < a.size(); ++i) {
        if (std::abs(a[i].real() - b[i].real()) > tol)
            return a[i].real() < b[i].real();
        if (std::abs(a[i].imag() - b[i].imag()) > tol)
            return a[i].imag() < b[i].imag();
    }
    return false;
}

} // namespace detail

/// P in the phi image with P^{-1} phi(f_i) P block lower triangular with
/// scalar block diagonals for every generator. The block carrying the first
/// coordinate (joint eigenvalue 1) comes first; the others are ordered
/// lexicographically by their joint eigenvalues.
inline BlockStructure compute_normal_form(std::span<const AffineMap> gens, const NormalFormOptions& opt = {}) {
    if (gens.empty())
        throw InputError("normal form of an empty generator list is undefined (need at least one generator)");
    const Index n = gens.front().dim();
    if (n < 1)
        throw InputError("dimension must be at least 1");
    for (const auto& f : gens)
        if (f.dim() != n)
            throw InputError("generators have different dimensions");
    check_commuting(gens, opt.commute_tol);

    const Index size = n + 1;
    std::vector<CMatrix> lifts;
    double scale = 1.0;
    for (const auto& f : gens) {
        lifts.push_back(phi(f).entries());
        scale = std::max(scale, max_abs(lifts.back()));
    }

    std::vector<CMatrix> spaces;
    detail::split_joint(lifts, CMatrix::Identity(size, size), opt.cluster_tol, scale, spaces);

    std::size_t first = 0;
    double best = -1.0;
    for (std::size_t c = 0; c < spaces.size(); ++c) {
        const double w = spaces[c].row(0).norm();
        if (w > best) {
            best = w;
            first = c;
        }
    }
    if (best < 1e-6)
        throw NumericalError("normal form: no invariant block carries the first coordinate");

    struct Block {
        CMatrix basis;
        std::vector<Complex> eig;
    };
    std::vector<Block> blocks;
    for (std::size_t c = 0; c < spaces.size(); ++c) {
        const CMatrix& u = spaces[c];
        const Index k = u.cols();
        Block b;
        if (c == first) {
            // Triangularize on the hyperplane part W ∩ ({0} x C^n), then put
            // the vector of W with first coordinate 1 in front.
            const CVector a = u.row(0).adjoint();
            const CMatrix z = detail::orthonormal_complement(a);
            const CMatrix h = u * z;
            auto ns = detail::shifted_restrictions(lifts, h);
            CMatrix hv = h * detail::triangularize_nilpotent(ns, k - 1);
            detail::normalize_column_phases(hv);
            b.basis.resize(size, k);
            b.basis.col(0) = u * a / a.squaredNorm();
            b.basis.rightCols(k - 1) = hv;
            detail::shifted_restrictions(lifts, u, &b.eig);
        } else {
            auto ns = detail::shifted_restrictions(lifts, u, &b.eig);
            b.basis = u * detail::triangularize_nilpotent(ns, k);
            detail::normalize_column_phases(b.basis);
        }
        blocks.push_back(std::move(b));
    }
    std::swap(blocks[0], blocks[first]);
    const double order_tol = opt.cluster_tol * scale;
    std::stable_sort(blocks.begin() + 1, blocks.end(),
                     [&](const Block& x, const Block& y) { return detail::tuple_less(x.eig, y.eig, order_tol); });

    BlockStructure s;
    s.P.resize(size, size);
    Index at = 0;
    for (auto& b : blocks) {
        s.eta.push_back(static_cast<int>(b.basis.cols()));
        s.P.middleCols(at, b.basis.cols()) = b.basis;
        at += b.basis.cols();
        s.block_eigenvalues.push_back(b.eig);
    }
    s.P.row(0).setZero();
    s.P(0, 0) = 1.0;
    Eigen::FullPivLU<CMatrix> lu(s.P);
    if (!lu.isInvertible())
        throw NumericalError("normal form: assembled basis is singular (spectra not separated)");
    s.P_inv = lu.inverse();
    s.P_inv.row(0).setZero();
    s.P_inv(0, 0) = 1.0;

    for (std::size_t i = 0; i < lifts.size(); ++i) {
        const CMatrix m = s.P_inv * lifts[i] * s.P;
        const auto check = validate_block_shape(m, s.eta, opt.residual_tol * std::max(1.0, max_abs(m)));
        s.residual = std::max(s.residual, check.residual);
        if (!check.ok)
            throw NumericalError("normal form: generator " + std::to_string(i) +
                                 " is not block triangular after conjugation (residual " +
                                 std::to_string(check.residual) + ")");
    }
    CVector u0 = CVector::Zero(size);
    for (Index st : block_starts(s.eta))
        u0(st) = 1.0;
    s.v0 = s.P * u0;
    s.v0(0) = 1.0;
    s.w0 = drop_first(s.v0);
    return s;
}

/// Exact family already in normal form (P = I): blocks are the maximal runs
/// of coordinates on which every matrix has the same diagonal entry. Throws
/// UnsupportedExact if some matrix is not of that shape.
inline ExactBlockStructure exact_block_structure(std::span<const ExactMatrix> family) {
    if (family.empty())
        throw InputError("exact block structure of an empty family");
    const Index size = family.front().rows();
    Partition eta{1};
    for (Index i = 0; i + 1 < size; ++i) {
        bool same = true;
        for (const auto& m : family)
            if (!(m(i, i) == m(i + 1, i + 1)))
                same = false;
        if (same)
            ++eta.back();
        else
            eta.push_back(1);
    }
    for (std::size_t k = 0; k < family.size(); ++k)
        if (!validate_block_shape(family[k], eta).ok)
            throw UnsupportedExact("exact mode needs the family already in block lower triangular form "
                                   "(matrix " + std::to_string(k) + " is not); use float mode");
    ExactBlockStructure s;
    s.eta = eta;
    s.P = ExactMatrix::identity(size);
    s.P_inv = ExactMatrix::identity(size);
    s.v0 = ExactMatrix::column(size);
    for (Index st : block_starts(eta))
        s.v0(st) = ExactComplex(1);
    s.w0 = drop_first(s.v0);
    for (Index st : block_starts(eta)) {
        std::vector<Complex> eig;
        for (const auto& m : family)
            eig.push_back(m(st, st).to_complex());
        s.block_eigenvalues.push_back(std::move(eig));
    }
    return s;
}

} // namespace affdyn

#endif // AFFDYN_NORMAL_FORM_HPP
