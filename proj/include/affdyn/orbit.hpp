#ifndef AFFDYN_ORBIT_HPP
#define AFFDYN_ORBIT_HPP

// Orbit sampling for a commuting family: every word f_1^{m_1} ... f_p^{m_p}
// with m_1 + ... + m_p <= budget, applied to one point or to a k-tuple.

#include "affdyn/affine.hpp"
#include "affdyn/normal_form.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdlib>
#include <random>
#include <set>
#include <span>
#include <string>
#include <thread>
#include <unordered_set>
#include <vector>

namespace affdyn {

enum class OrbitStrategy { Lattice, Random };

inline const char* to_string(OrbitStrategy s) { return s == OrbitStrategy::Lattice ? "lattice" : "random"; }

struct OrbitOptions {
    long budget = 0;
    OrbitStrategy strategy = OrbitStrategy::Lattice;
    std::size_t samples = 1000; ///< words drawn by the random strategy
    std::uint64_t seed = 0;
    double escape_radius = 1e6;
    unsigned threads = 0; ///< 0: AFFDYN_THREADS or hardware concurrency
};

using Word = std::vector<int>;

struct OrbitSample {
    Index n = 0;
    std::vector<CVector> base_points;
    std::vector<Word> words;
    /// points[w] concatenates the images of all base points under word w.
    std::vector<CVector> points;
    std::vector<bool> escaped;
    long budget = 0;
    OrbitStrategy strategy = OrbitStrategy::Lattice;
    std::uint64_t seed = 0;
    std::vector<std::string> warnings;

    std::size_t k() const { return base_points.size(); }
    std::size_t escaped_count() const { return static_cast<std::size_t>(std::count(escaped.begin(), escaped.end(), true)); }
};

/// Degree ascending; inside a degree, exponent vectors in descending
/// lexicographic order, so (d,0,..,0) comes first.
inline bool graded_less(const Word& a, const Word& b) {
    long da = 0, db = 0;
    for (int x : a)
        da += x;
    for (int x : b)
        db += x;
    if (da != db)
        return da < db;
    return a > b;
}

/// All exponent vectors of length p with sum <= budget, in graded order.
inline std::vector<Word> lattice_words(std::size_t p, long budget) {
    std::vector<Word> out;
    if (p == 0) {
        out.emplace_back();
        return out;
    }
    Word w(p, 0);
    for (long d = 0; d <= budget; ++d) {
        // compositions of d into p parts, first part descending
        auto rec = [&](auto&& self, std::size_t i, long left) -> void {
            if (i + 1 == p) {
                w[i] = static_cast<int>(left);
                out.push_back(w);
                return;
            }
            for (long x = left; x >= 0; --x) {
                w[i] = static_cast<int>(x);
                self(self, i + 1, left - x);
            }
        };
        rec(rec, 0, d);
    }
    return out;
}

/// Distinct words drawn uniformly among exponent vectors with sum <= budget
/// (stars and bars), returned in graded order.
inline std::vector<Word> random_words(std::size_t p, long budget, std::size_t samples, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::set<Word, decltype(&graded_less)> chosen(&graded_less);
    if (p == 0 || budget < 0)
        return lattice_words(p, std::max(budget, 0L));
    // A word with sum <= budget is a choice of p bar positions among
    // budget + p slots; the gaps before the bars are the exponents.
    const long slots = budget + static_cast<long>(p);
    std::vector<long> positions(static_cast<std::size_t>(slots));
    for (long i = 0; i < slots; ++i)
        positions[static_cast<std::size_t>(i)] = i;
    const std::size_t attempts = samples * 4 + 16;
    for (std::size_t t = 0; t < attempts && chosen.size() < samples; ++t) {
        for (std::size_t i = 0; i < p; ++i) {
            std::uniform_int_distribution<long> pick(static_cast<long>(i), slots - 1);
            std::swap(positions[i], positions[static_cast<std::size_t>(pick(rng))]);
        }
        std::vector<long> bars(positions.begin(), positions.begin() + static_cast<std::ptrdiff_t>(p));
        std::sort(bars.begin(), bars.end());
        Word w(p);
        long prev = -1;
        for (std::size_t i = 0; i < p; ++i) {
            w[i] = static_cast<int>(bars[i] - prev - 1);
            prev = bars[i];
        }
        chosen.insert(w);
    }
    return {chosen.begin(), chosen.end()};
}

inline unsigned worker_count(unsigned requested) {
    unsigned n = requested;
    if (n == 0) {
        if (const char* env = std::getenv("AFFDYN_THREADS")) {
            const long v = std::strtol(env, nullptr, 10);
            if (v > 0)
                n = static_cast<unsigned>(v);
        }
    }
    if (n == 0)
        n = std::max(1u, std::thread::hardware_concurrency());
    return n;
}

/// Runs body(i) for i in [0, count) over contiguous chunks.
template <class F>
void parallel_for(std::size_t count, unsigned threads, F&& body) {
    const std::size_t workers = std::min<std::size_t>(threads, std::max<std::size_t>(1, count / 64));
    if (workers <= 1) {
        for (std::size_t i = 0; i < count; ++i)
            body(i);
        return;
    }
    std::vector<std::thread> pool;
    const std::size_t chunk = (count + workers - 1) / workers;
    for (std::size_t w = 0; w < workers; ++w) {
        const std::size_t lo = w * chunk;
        const std::size_t hi = std::min(count, lo + chunk);
        pool.emplace_back([lo, hi, &body] {
            for (std::size_t i = lo; i < hi; ++i)
                body(i);
        });
    }
    for (auto& t : pool)
        t.join();
}

/// Diagonal action of each word on the k base points.
inline OrbitSample k_fold_orbit(std::span<const AffineMap> gens, std::span<const CVector> points,
                                const OrbitOptions& opt = {}) {
    if (gens.empty())
        throw InputError("orbit of an empty generator list");
    if (points.empty())
        throw InputError("orbit needs at least one base point");
    if (opt.budget < 0)
        throw InputError("budget must be non-negative");
    const Index n = gens.front().dim();
    for (const auto& f : gens)
        if (f.dim() != n)
            throw InputError("generators have different dimensions");
    for (const auto& x : points)
        if (x.size() != n)
            throw InputError("base point has length " + std::to_string(x.size()) + ", expected " + std::to_string(n));
    check_commuting(gens);

    OrbitSample s;
    s.n = n;
    s.base_points.assign(points.begin(), points.end());
    s.budget = opt.budget;
    s.strategy = opt.strategy;
    s.seed = opt.seed;
    for (std::size_t a = 0; a < points.size(); ++a)
        for (std::size_t b = a + 1; b < points.size(); ++b)
            if (points[a] == points[b])
                s.warnings.push_back("base points " + std::to_string(a) + " and " + std::to_string(b) + " coincide");

    const std::size_t p = gens.size();
    s.words = opt.strategy == OrbitStrategy::Lattice ? lattice_words(p, opt.budget)
                                                     : random_words(p, opt.budget, opt.samples, opt.seed);

    // Powers of the lifted generators up to the largest exponent used.
    std::vector<int> top(p, 0);
    for (const auto& w : s.words)
        for (std::size_t i = 0; i < p; ++i)
            top[i] = std::max(top[i], w[i]);
    std::vector<std::vector<CMatrix>> powers(p);
    for (std::size_t i = 0; i < p; ++i) {
        const CMatrix lift = phi(gens[i]).entries();
        powers[i].push_back(CMatrix::Identity(n + 1, n + 1));
        for (int e = 1; e <= top[i]; ++e)
            powers[i].push_back(powers[i].back() * lift);
    }

    const std::size_t k = points.size();
    CMatrix lifted_points(n + 1, static_cast<Index>(k));
    for (std::size_t j = 0; j < k; ++j) {
        lifted_points(0, static_cast<Index>(j)) = 1.0;
        lifted_points.col(static_cast<Index>(j)).tail(n) = points[j];
    }
    s.points.assign(s.words.size(), CVector());
    std::vector<char> escaped(s.words.size(), 0);
    parallel_for(s.words.size(), worker_count(opt.threads), [&](std::size_t w) {
        CMatrix v = lifted_points;
        for (std::size_t i = 0; i < p; ++i)
            if (s.words[w][i] > 0)
                v = powers[i][static_cast<std::size_t>(s.words[w][i])] * v;
        CVector out(n * static_cast<Index>(k));
        bool bad = false;
        for (std::size_t j = 0; j < k; ++j) {
            out.segment(static_cast<Index>(j) * n, n) = v.col(static_cast<Index>(j)).tail(n);
        }
        for (Index t = 0; t < out.size(); ++t)
            if (!std::isfinite(out(t).real()) || !std::isfinite(out(t).imag()) ||
                std::max(std::abs(out(t).real()), std::abs(out(t).imag())) > opt.escape_radius)
                bad = true;
        s.points[w] = std::move(out);
        escaped[w] = bad;
    });
    s.escaped.assign(escaped.begin(), escaped.end());
    return s;
}

inline OrbitSample simulate_orbit(std::span<const AffineMap> gens, const CVector& x, const OrbitOptions& opt = {}) {
    return k_fold_orbit(gens, std::span<const CVector>(&x, 1), opt);
}

/// Axis-aligned box [lo, hi] in every real coordinate.
struct Box {
    double lo = -1.0;
    double hi = 1.0;
};

struct CoverageReport {
    Box box;
    double epsilon = 0.0;
    int real_dims = 0;
    std::uint64_t cells_per_axis = 0;
    std::uint64_t cells_total = 0;
    std::uint64_t cells_hit = 0;
    double coverage = 0.0;
    std::size_t points_used = 0;
    std::size_t points_escaped = 0;
};

/// Grid of cells with pitch epsilon over the box in the realified
/// coordinates; a cell counts as hit when its center is within epsilon
/// (Euclidean) of a non-escaped orbit point.
inline CoverageReport coverage_report(const OrbitSample& s, Box box, double epsilon) {
    if (!(epsilon > 0.0))
        throw InputError("epsilon must be positive");
    if (!(box.hi > box.lo))
        throw InputError("coverage box is empty");
    CoverageReport r;
    r.box = box;
    r.epsilon = epsilon;
    r.real_dims = static_cast<int>(2 * s.n * static_cast<Index>(s.k()));
    const auto per_axis = static_cast<std::uint64_t>(std::ceil((box.hi - box.lo) / epsilon - 1e-9));
    r.cells_per_axis = per_axis;
    const int dims = r.real_dims;
    if (static_cast<double>(dims) * std::log2(static_cast<double>(per_axis)) > 62.0)
        throw InputError("coverage grid too large (" + std::to_string(per_axis) + "^" + std::to_string(dims) + " cells)");
    std::uint64_t total = 1;
    for (int d = 0; d < dims; ++d)
        total *= per_axis;
    r.cells_total = total;
    r.points_escaped = s.escaped_count();

    std::unordered_set<std::uint64_t> hit;
    std::vector<double> y(static_cast<std::size_t>(dims));
    std::vector<long> base(static_cast<std::size_t>(dims));
    std::vector<int> offset(static_cast<std::size_t>(dims));
    const double eps2 = epsilon * epsilon;
    auto center = [&](long i) { return box.lo + (static_cast<double>(i) + 0.5) * epsilon; };
    for (std::size_t w = 0; w < s.points.size(); ++w) {
        if (s.escaped[w])
            continue;
        ++r.points_used;
        const CVector& pt = s.points[w];
        bool far = false;
        for (Index t = 0; t < pt.size(); ++t) {
            y[static_cast<std::size_t>(2 * t)] = pt(t).real();
            y[static_cast<std::size_t>(2 * t + 1)] = pt(t).imag();
        }
        for (int d = 0; d < dims; ++d) {
            const double v = y[static_cast<std::size_t>(d)];
            if (v < box.lo - epsilon || v > box.hi + epsilon)
                far = true;
            base[static_cast<std::size_t>(d)] = static_cast<long>(std::floor((v - box.lo) / epsilon));
        }
        if (far)
            continue;
        // Odometer over offsets in {-1, 0, 1}^dims with running distance.
        std::fill(offset.begin(), offset.end(), -1);
        for (;;) {
            double dist = 0.0;
            std::uint64_t index = 0;
            bool inside = true;
            for (int d = dims - 1; d >= 0; --d) {
                const long c = base[static_cast<std::size_t>(d)] + offset[static_cast<std::size_t>(d)];
                if (c < 0 || c >= static_cast<long>(per_axis)) {
                    inside = false;
                    break;
                }
                const double diff = center(c) - y[static_cast<std::size_t>(d)];
                dist += diff * diff;
                index = index * per_axis + static_cast<std::uint64_t>(c);
            }
            if (inside && dist <= eps2)
                hit.insert(index);
            int d = 0;
            while (d < dims && offset[static_cast<std::size_t>(d)] == 1)
                offset[static_cast<std::size_t>(d++)] = -1;
            if (d == dims)
                break;
            ++offset[static_cast<std::size_t>(d)];
        }
    }
    r.cells_hit = hit.size();
    r.coverage = static_cast<double>(r.cells_hit) / static_cast<double>(r.cells_total);
    return r;
}

struct RefuteOptions {
    int k = 2;
    int trials = 20;
    long budget = 100;
    Box box;
    double epsilon = 0.1;
    double threshold = 0.5;
    std::uint64_t seed = 0;
    std::optional<CVector> one_fold_point; ///< base point of the 1-fold contrast run
    unsigned threads = 0;
};

struct RefutationReport {
    int k = 0;
    int trials = 0;
    long budget = 0;
    Box box;
    double epsilon = 0.0;
    double threshold = 0.0;
    std::uint64_t seed = 0;
    std::size_t words = 0;
    std::vector<double> coverages;
    std::vector<std::vector<CVector>> base_points;
    double max_coverage = 0.0;
    bool below_threshold = true;
    std::optional<double> one_fold_coverage;
};

/// k-fold orbits of random k-tuples drawn uniformly from the box; every
/// trial's coverage is compared with the threshold.
inline RefutationReport refute_k_transitivity(std::span<const AffineMap> gens, const RefuteOptions& opt) {
    if (opt.k < 2)
        throw InputError("refutation needs k >= 2");
    if (opt.trials < 1)
        throw InputError("refutation needs at least one trial");
    if (gens.empty())
        throw InputError("orbit of an empty generator list");
    const Index n = gens.front().dim();
    RefutationReport rep;
    rep.k = opt.k;
    rep.trials = opt.trials;
    rep.budget = opt.budget;
    rep.box = opt.box;
    rep.epsilon = opt.epsilon;
    rep.threshold = opt.threshold;
    rep.seed = opt.seed;

    OrbitOptions oo;
    oo.budget = opt.budget;
    oo.threads = opt.threads;
    std::mt19937_64 rng(opt.seed);
    std::uniform_real_distribution<double> coord(opt.box.lo, opt.box.hi);
    for (int t = 0; t < opt.trials; ++t) {
        std::vector<CVector> pts;
        for (int j = 0; j < opt.k; ++j) {
            CVector x(n);
            for (Index i = 0; i < n; ++i) {
                const double re = coord(rng);
                const double im = coord(rng);
                x(i) = Complex(re, im);
            }
            pts.push_back(std::move(x));
        }
        const auto sample = k_fold_orbit(gens, pts, oo);
        rep.words = sample.words.size();
        const auto cov = coverage_report(sample, opt.box, opt.epsilon);
        rep.coverages.push_back(cov.coverage);
        rep.max_coverage = std::max(rep.max_coverage, cov.coverage);
        rep.base_points.push_back(std::move(pts));
    }
    rep.below_threshold = rep.max_coverage <= opt.threshold;
    if (opt.one_fold_point) {
        const auto sample = simulate_orbit(gens, *opt.one_fold_point, oo);
        rep.one_fold_coverage = coverage_report(sample, opt.box, opt.epsilon).coverage;
    }
    return rep;
}

} // namespace affdyn

#endif // AFFDYN_ORBIT_HPP
