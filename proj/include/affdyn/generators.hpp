#ifndef AFFDYN_GENERATORS_HPP
#define AFFDYN_GENERATORS_HPP

// Logarithmic lifts f'_k of the generators and the additive generator sets
// built from them.

#include "affdyn/affine.hpp"
#include "affdyn/matrix_functions.hpp"
#include "affdyn/normal_form.hpp"

#include <optional>
#include <span>
#include <string>
#include <vector>

namespace affdyn {

enum class Coefficients { Natural, Integer };

inline const char* to_string(Coefficients c) { return c == Coefficients::Natural ? "N" : "Z"; }

struct GeneratorVector {
    CVector value;
    std::optional<ExactMatrix> exact; ///< column vector, when known exactly
    Coefficients coeff = Coefficients::Integer;
    std::string provenance;
};

/// Finite list of vectors of C^dim with N or Z coefficient tags, standing for
/// the set of their tagged combinations. `complex_line`, when set, stands for
/// an extra summand C * v that is kept symbolic.
struct GeneratorSet {
    Index dim = 0;
    std::vector<GeneratorVector> vectors;
    std::optional<CVector> complex_line;

    std::size_t size() const { return vectors.size(); }
    std::size_t count(Coefficients c) const {
        std::size_t k = 0;
        for (const auto& v : vectors)
            k += v.coeff == c;
        return k;
    }
    bool all_exact() const {
        for (const auto& v : vectors)
            if (!v.exact)
                return false;
        return true;
    }

    void add(CVector v, Coefficients c, std::string provenance, std::optional<ExactMatrix> exact = std::nullopt) {
        if (v.size() != dim)
            throw InputError("generator vector has length " + std::to_string(v.size()) + ", expected " +
                             std::to_string(dim));
        vectors.push_back({std::move(v), std::move(exact), c, std::move(provenance)});
    }
};

/// Same vectors, every tag upgraded to Z.
inline GeneratorSet group_closure(GeneratorSet s) {
    for (auto& v : s.vectors)
        v.coeff = Coefficients::Integer;
    return s;
}

namespace detail {

template <class V>
void push_vector(GeneratorSet& set, const V& v, Coefficients c, std::string provenance) {
    if constexpr (std::is_same_v<V, ExactMatrix>)
        set.add(to_float(v), c, std::move(provenance), v);
    else
        set.add(v, c, std::move(provenance));
}

} // namespace detail

template <class B>
struct BasicLogLift {
    std::vector<BasicAffineMap<B>> f_primes; ///< one per invertible generator
    std::vector<std::size_t> lifted;         ///< input index of each f'
    std::vector<std::size_t> excluded;       ///< non-invertible generators
};

using LogLift = BasicLogLift<FloatBackend>;
using ExactLogLift = BasicLogLift<ExactBackend>;

/// f'_k = psi_inv(psi_normalize(P block_log(P^{-1} phi(f_k) P, branch_k) P^{-1})).
/// branches[k] (if given) is the per-block branch vector of generator k.
/// Float mode checks exp(psi(f'_k)) = phi(f_k) within tol relative to the
/// entries; exact mode checks it exactly.
template <class B>
BasicLogLift<B> log_lift_generators(std::span<const BasicAffineMap<B>> gens, const BasicBlockStructure<B>& s,
                                    const std::vector<std::vector<int>>& branches = {}, double tol = 1e-9) {
    BasicLogLift<B> out;
    for (std::size_t k = 0; k < gens.size(); ++k) {
        const auto& f = gens[k];
        if (f.dim() != s.n())
            throw InputError("generator dimension does not match the block structure");
        if (!f.is_invertible()) {
            out.excluded.push_back(k);
            continue;
        }
        std::span<const int> branch;
        if (k < branches.size())
            branch = branches[k];
        const auto lift = phi(f).entries();
        if constexpr (B::exact) {
            const ExactMatrix log = s.P * block_log(ExactMatrix(s.P_inv * lift * s.P), s.eta, branch) * s.P_inv;
            auto fp = psi_inv(psi_normalize(log));
            ExactMatrix conj = s.P_inv * psi(fp).entries() * s.P;
            if (!(block_exp(conj, s.eta) == ExactMatrix(s.P_inv * lift * s.P)))
                throw NumericalError("log lift of generator " + std::to_string(k) + " does not exponentiate back");
            out.f_primes.push_back(std::move(fp));
        } else {
            const CMatrix conj = s.P_inv * lift * s.P;
            const CMatrix log = s.P * block_log(conj, s.eta, branch, tol) * s.P_inv;
            auto fp = psi_inv(psi_normalize(log, tol));
            const CMatrix back = matrix_exp(psi(fp).entries());
            const double err = max_abs(back - lift);
            if (err > tol * std::max(1.0, max_abs(lift)))
                throw NumericalError("log lift of generator " + std::to_string(k) + " misses exp(psi(f')) = phi(f) by " +
                                     std::to_string(err));
            out.f_primes.push_back(std::move(fp));
        }
        out.lifted.push_back(k);
    }
    return out;
}

/// { f'_k(w0) : N } together with { 2 pi i p2(P e^(k)) : Z, k = 2..r }.
template <class B>
GeneratorSet q_w0_generators(std::span<const BasicAffineMap<B>> f_primes, const BasicBlockStructure<B>& s) {
    GeneratorSet out;
    out.dim = s.n();
    for (std::size_t k = 0; k < f_primes.size(); ++k)
        detail::push_vector(out, typename B::Vector(f_primes[k](s.w0)), Coefficients::Natural,
                            "log-lift " + std::to_string(k + 1));
    const auto cv = canonical_vectors(s);
    for (std::size_t k = 1; k < cv.p2_Pe.size(); ++k)
        detail::push_vector(out, typename B::Vector(B::two_pi_i() * cv.p2_Pe[k]), Coefficients::Integer,
                            "2*pi*i block " + std::to_string(k + 1));
    return out;
}

/// { psi(f'_k) v0 : N } together with { 2 pi i P e^(k) : Z, k = 1..r }, in C^{n+1}.
template <class B>
GeneratorSet g_v0_generators(std::span<const BasicAffineMap<B>> f_primes, const BasicBlockStructure<B>& s) {
    GeneratorSet out;
    out.dim = s.size();
    for (std::size_t k = 0; k < f_primes.size(); ++k)
        detail::push_vector(out, typename B::Vector(psi(f_primes[k]).entries() * s.v0), Coefficients::Natural,
                            "log-lift " + std::to_string(k + 1));
    const auto cv = canonical_vectors(s);
    for (std::size_t k = 0; k < cv.Pe.size(); ++k)
        detail::push_vector(out, typename B::Vector(B::two_pi_i() * cv.Pe[k]), Coefficients::Integer,
                            "2*pi*i block " + std::to_string(k + 1));
    return out;
}

/// The same generators plus the symbolic complex line C * v0 (the C I
/// summand applied to v0).
template <class B>
GeneratorSet g_tilde_v0_generators(std::span<const BasicAffineMap<B>> f_primes, const BasicBlockStructure<B>& s) {
    GeneratorSet out = g_v0_generators(f_primes, s);
    out.complex_line = to_float(s.v0);
    return out;
}

/// Drops the 2 pi i P e^(1) generator (the one absorbed by the complex line)
/// and the first coordinate of every vector.
inline GeneratorSet project_hyperplane(const GeneratorSet& g) {
    GeneratorSet out;
    out.dim = g.dim - 1;
    for (const auto& v : g.vectors) {
        if (v.provenance == "2*pi*i block 1")
            continue;
        std::optional<ExactMatrix> exact;
        if (v.exact)
            exact = drop_first(*v.exact);
        out.add(drop_first(v.value), v.coeff, v.provenance, std::move(exact));
    }
    return out;
}

} // namespace affdyn

#endif // AFFDYN_GENERATORS_HPP
