#ifndef AFFDYN_ANALYSIS_HPP
#define AFFDYN_ANALYSIS_HPP

// End-to-end pipeline: normal form, log lifts, generator set at w0, count
// bound, density criterion, optional orbit simulation.

#include "affdyn/density.hpp"
#include "affdyn/generators.hpp"
#include "affdyn/normal_form.hpp"
#include "affdyn/orbit.hpp"

#include <algorithm>
#include <optional>
#include <random>
#include <string>
#include <vector>

namespace affdyn {

struct SemigroupSpec {
    Index n = 0;
    std::vector<AffineMap> generators;
    /// Exact form of each generator when every entry was given exactly.
    std::vector<std::optional<ExactAffineMap>> exact_generators;
    /// Optional exact logarithm f'_k supplied with generator k.
    std::vector<std::optional<ExactAffineMap>> exact_logs;
    Arithmetic arithmetic = Arithmetic::Float;
    SymbolTable symbols;
    std::uint64_t seed = 0;
    std::optional<long> budget;
    Box box;
    double epsilon = 0.05;
    std::vector<CVector> points;

    /// Float generators plus empty exact slots.
    static SemigroupSpec from_maps(std::vector<AffineMap> gens) {
        SemigroupSpec s;
        if (!gens.empty())
            s.n = gens.front().dim();
        s.exact_generators.resize(gens.size());
        s.exact_logs.resize(gens.size());
        s.generators = std::move(gens);
        return s;
    }
    static SemigroupSpec from_maps(const std::vector<ExactAffineMap>& gens) {
        std::vector<AffineMap> f;
        for (const auto& g : gens)
            f.push_back(to_float(g));
        SemigroupSpec s = from_maps(std::move(f));
        s.exact_generators.assign(gens.begin(), gens.end());
        s.arithmetic = Arithmetic::Exact;
        return s;
    }
};

struct AnalysisOptions {
    Arithmetic mode = Arithmetic::Float;
    DensityOptions density;
    NormalFormOptions normal_form;
    std::vector<std::vector<int>> branches;
    long budget = 0; ///< orbit corroboration when positive
    Box box;
    double epsilon = 0.05;
    std::vector<CVector> points;
    unsigned threads = 0;
};

struct Corroboration {
    std::string label;
    CVector base;
    std::size_t words = 0;
    CoverageReport coverage;
};

struct AnalysisReport {
    Index n = 0;
    std::size_t generator_count = 0;
    std::vector<std::size_t> excluded; ///< non-invertible generators
    int p = 0;
    Partition eta;
    int r = 0;
    std::size_t m = 0;
    Arithmetic mode = Arithmetic::Float;
    CVector w0;
    double residual = 0.0;
    std::vector<AffineMap> f_primes;
    GeneratorSet q;
    DensityVerdict verdict;
    std::string headline;
    std::vector<Corroboration> simulations;
};

inline std::string headline_for(const DensityVerdict& v) {
    switch (v.status) {
    case DensityStatus::NotDense: return "not hypercyclic (certified)";
    case DensityStatus::Dense: return "candidate hypercyclic (group-level certificate)";
    default: return "candidate hypercyclic (empirical)";
    }
}

namespace detail {

struct ExactLifts {
    ExactBlockStructure structure;
    std::vector<ExactAffineMap> f_primes;
};

inline ExactLifts exact_lifts(const SemigroupSpec& spec, const std::vector<std::size_t>& lifted,
                              const BlockStructure& float_structure, const std::vector<std::vector<int>>& branches) {
    std::vector<ExactMatrix> family;
    for (std::size_t k : lifted) {
        if (spec.exact_logs[k])
            family.push_back(psi(*spec.exact_logs[k]).entries());
        else if (spec.exact_generators[k])
            family.push_back(phi(*spec.exact_generators[k]).entries());
        else
            throw UnsupportedExact("generator " + std::to_string(k) +
                                   " has inexact entries and no exact logarithm; use float mode");
    }
    ExactLifts out;
    out.structure = exact_block_structure(family);
    Partition a = out.structure.eta;
    Partition b = float_structure.eta;
    std::sort(a.begin(), a.end());
    std::sort(b.begin(), b.end());
    if (a != b)
        throw UnsupportedExact("exact coordinates split into blocks different from the normal form; use float mode");
    for (std::size_t i = 0; i < lifted.size(); ++i) {
        const std::size_t k = lifted[i];
        if (spec.exact_logs[k]) {
            const auto& fp = *spec.exact_logs[k];
            const CMatrix lift = phi(spec.generators[k]).entries();
            const double err = max_abs(matrix_exp(to_float(psi(fp).entries())) - lift);
            if (err > 1e-9 * std::max(1.0, max_abs(lift)))
                throw InputError("supplied logarithm of generator " + std::to_string(k) +
                                 " does not exponentiate to it (error " + std::to_string(err) + ")");
            out.f_primes.push_back(fp);
        } else {
            std::vector<std::vector<int>> br;
            if (k < branches.size())
                br.push_back(branches[k]);
            const ExactAffineMap& g = *spec.exact_generators[k];
            auto lift = log_lift_generators<ExactBackend>(std::span<const ExactAffineMap>(&g, 1), out.structure, br);
            out.f_primes.push_back(lift.f_primes.front());
        }
    }
    return out;
}

} // namespace detail

inline AnalysisReport analyze_hypercyclicity(const SemigroupSpec& spec, const AnalysisOptions& opt = {}) {
    const auto& gens = spec.generators;
    if (gens.empty())
        throw InputError("analysis needs at least one generator");
    if (spec.exact_generators.size() != gens.size() || spec.exact_logs.size() != gens.size())
        throw InputError("spec: exact slots do not match the generator list");
    AnalysisReport rep;
    rep.n = gens.front().dim();
    rep.generator_count = gens.size();
    rep.mode = opt.mode;

    const BlockStructure s = compute_normal_form(gens, opt.normal_form);
    rep.eta = s.eta;
    rep.r = s.r();
    rep.residual = s.residual;

    std::vector<std::size_t> lifted;
    for (std::size_t k = 0; k < gens.size(); ++k) {
        const bool invertible = spec.exact_generators[k] ? spec.exact_generators[k]->is_invertible() : gens[k].is_invertible();
        if (invertible)
            lifted.push_back(k);
        else
            rep.excluded.push_back(k);
    }
    rep.p = static_cast<int>(lifted.size());

    if (opt.mode == Arithmetic::Exact) {
        if (spec.exact_generators.size() == gens.size()) {
            std::vector<ExactAffineMap> exact;
            for (const auto& g : spec.exact_generators)
                if (g)
                    exact.push_back(*g);
            if (exact.size() == gens.size())
                check_commuting(std::span<const ExactAffineMap>(exact));
        }
        auto ex = detail::exact_lifts(spec, lifted, s, opt.branches);
        rep.q = q_w0_generators<ExactBackend>(ex.f_primes, ex.structure);
        rep.w0 = to_float(ex.structure.w0);
        for (const auto& f : ex.f_primes)
            rep.f_primes.push_back(to_float(f));
    } else {
        std::vector<AffineMap> inv;
        std::vector<std::vector<int>> br;
        for (std::size_t k : lifted) {
            inv.push_back(gens[k]);
            br.push_back(k < opt.branches.size() ? opt.branches[k] : std::vector<int>{});
        }
        auto lift = log_lift_generators<FloatBackend>(inv, s, br);
        rep.f_primes = lift.f_primes;
        rep.q = q_w0_generators<FloatBackend>(rep.f_primes, s);
        rep.w0 = s.w0;
    }
    rep.m = rep.q.size();

    if (auto cb = count_bound(rep.p, rep.r, static_cast<int>(rep.n))) {
        rep.verdict = *cb;
        rep.verdict.mode = opt.mode;
        rep.verdict.bound = opt.density.search_bound;
        rep.verdict.tolerance = opt.mode == Arithmetic::Float ? opt.density.rank_tol : 0.0;
        if (rep.verdict.m != rep.m)
            throw NumericalError("generator count " + std::to_string(rep.m) + " disagrees with p + r - 1");
    } else {
        rep.verdict = group_rank_density(group_closure(rep.q), opt.mode, opt.density);
    }
    rep.headline = headline_for(rep.verdict);

    if (opt.budget > 0) {
        OrbitOptions oo;
        oo.budget = opt.budget;
        oo.threads = opt.threads;
        std::vector<std::pair<std::string, CVector>> bases{{"w0", rep.w0}};
        for (std::size_t i = 0; i < opt.points.size(); ++i)
            bases.emplace_back("point " + std::to_string(i), opt.points[i]);
        for (const auto& [label, x] : bases) {
            const auto sample = simulate_orbit(gens, x, oo);
            rep.simulations.push_back({label, x, sample.words.size(), coverage_report(sample, opt.box, opt.epsilon)});
        }
    }
    return rep;
}

/// Largest budget whose lattice word count C(budget + p, p) stays <= limit.
inline long budget_for_word_limit(std::size_t p, double limit) {
    long b = 0;
    for (;;) {
        double words = 1.0;
        for (std::size_t i = 1; i <= p; ++i)
            words = words * static_cast<double>(b + 1 + static_cast<long>(i)) / static_cast<double>(i);
        if (words > limit)
            return b;
        ++b;
    }
}

/// n + 1 commuting diagonal maps x -> diag(e^{lambda_k}) x on C^n with
/// logarithms lambda_kj = +-sqrt(d)/20 + 2 pi i sqrt(d') (the very first
/// real part is 1/20), radicands distinct squarefree integers drawn by the
/// seed. The draw is repeated until the exact density check passes.
inline SemigroupSpec construct_example(int n, std::uint64_t seed = 0) {
    if (n < 1)
        throw InputError("construct_example needs n >= 1");
    if (n > 4)
        throw InputError("construct_example supports n <= 4 (exact density check cost)");
    std::vector<std::uint64_t> pool{2,  3,  5,  6,  7,  10, 11, 13, 14, 15, 17, 19, 21, 22, 23, 26, 29, 30, 31, 33, 34, 35,
                                    37, 38, 39, 41, 42, 43, 46, 47, 51, 53, 55, 57, 58, 59, 61, 62, 65, 66, 67, 69, 70};
    std::mt19937_64 rng(seed);
    const std::size_t p = static_cast<std::size_t>(n) + 1;
    for (int attempt = 0;; ++attempt) {
        if (attempt > 0 || seed != 0)
            std::shuffle(pool.begin(), pool.end(), rng);
        std::size_t next = 0;
        SemigroupSpec spec;
        spec.n = n;
        spec.arithmetic = Arithmetic::Exact;
        spec.seed = seed;
        std::vector<std::vector<ExactComplex>> lambda(p, std::vector<ExactComplex>(static_cast<std::size_t>(n)));
        std::vector<std::uint64_t> used;
        for (std::size_t k = 0; k < p; ++k)
            for (int j = 0; j < n; ++j) {
                ExactReal re;
                if (k == 0 && j == 0) {
                    re = ExactReal(Rational(1, 20));
                } else {
                    const std::uint64_t d = pool[next++];
                    used.push_back(d);
                    const int sign = (k + static_cast<std::size_t>(j)) % 2 == 0 ? 1 : -1;
                    re = ExactReal(Rational(sign, 20)) * ExactReal::sqrt(d);
                }
                lambda[k][static_cast<std::size_t>(j)] = ExactComplex(re);
            }
        for (std::size_t k = 0; k < p; ++k)
            for (int j = 0; j < n; ++j) {
                const std::uint64_t d = pool[next++];
                used.push_back(d);
                auto& l = lambda[k][static_cast<std::size_t>(j)];
                l = ExactComplex(l.real(), ExactReal(2) * ExactReal::pi() * ExactReal::sqrt(d));
            }
        std::sort(used.begin(), used.end());
        for (auto d : used)
            spec.symbols.add_square_root("s" + std::to_string(d), d);

        for (std::size_t k = 0; k < p; ++k) {
            CMatrix a = CMatrix::Zero(n, n);
            ExactMatrix log = ExactMatrix::zero(n, n);
            for (int j = 0; j < n; ++j) {
                a(j, j) = std::exp(lambda[k][static_cast<std::size_t>(j)].to_complex());
                log(j, j) = lambda[k][static_cast<std::size_t>(j)];
            }
            spec.generators.emplace_back(a, CVector::Zero(n));
            spec.exact_generators.emplace_back(std::nullopt);
            spec.exact_logs.emplace_back(ExactAffineMap(log, ExactMatrix::column(n)));
        }
        spec.budget = n == 1 ? 100 : budget_for_word_limit(p, 1e4);
        spec.box = Box{-1.0, 1.0};
        spec.epsilon = 0.1;
        spec.points.push_back(CVector::Ones(n));

        AnalysisOptions opt;
        opt.mode = Arithmetic::Exact;
        if (analyze_hypercyclicity(spec, opt).verdict.status == DensityStatus::Dense)
            return spec;
        if (attempt > 32)
            throw NumericalError("construct_example: no dense configuration found");
    }
}

} // namespace affdyn

#endif // AFFDYN_ANALYSIS_HPP
