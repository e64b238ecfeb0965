// affdyn: analyze, simulate and refute commuting affine semigroups from JSON specs.
//
// Exit codes: 0 completed, 1 input error, 2 numerical failure.

#include "affdyn/affdyn.hpp"

#include <CLI11.hpp>

#include <fstream>
#include <iostream>

namespace {

using namespace affdyn;

struct Common {
    std::string spec_path;
    std::string out;
    std::optional<long> budget;
    std::vector<double> box;
    std::optional<double> epsilon;
    std::optional<std::uint64_t> seed;
};

void add_common(CLI::App* cmd, Common& c) {
    cmd->add_option("spec", c.spec_path, "semigroup spec (JSON)")->required();
    cmd->add_option("--out", c.out, "output path");
    cmd->add_option("--budget", c.budget, "total word degree");
    cmd->add_option("--box", c.box, "coverage box lo,hi")->delimiter(',')->expected(2);
    cmd->add_option("--epsilon", c.epsilon, "coverage cell size");
    cmd->add_option("--seed", c.seed, "random seed");
}

Box resolve_box(const Common& c, const SemigroupSpec& spec) {
    if (c.box.empty())
        return spec.box;
    if (!(c.box[0] < c.box[1]))
        throw InputError("--box: need lo < hi");
    return {c.box[0], c.box[1]};
}

double resolve_epsilon(const Common& c, const SemigroupSpec& spec) {
    const double e = c.epsilon.value_or(spec.epsilon);
    if (!(e > 0))
        throw InputError("--epsilon: must be positive");
    return e;
}

void emit(const std::string& path, const std::string& text) {
    if (path.empty()) {
        std::cout << text;
        return;
    }
    std::ofstream f(path);
    if (!f)
        throw InputError("cannot write '" + path + "'");
    f << text;
}

std::string dump(const Json& j) { return j.dump(2) + "\n"; }

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Hypercyclicity analysis for commuting affine maps on C^n"};
    app.require_subcommand(1);

    Common an;
    std::string mode;
    long long relation_bound = 1'000'000;
    auto* analyze = app.add_subcommand("analyze", "normal form, generator set at w0 and density verdict");
    add_common(analyze, an);
    analyze->add_option("--mode", mode, "exact|float (default: spec arithmetic)")
        ->check(CLI::IsMember({"exact", "float"}));
    analyze->add_option("--relation-bound", relation_bound, "largest integer relation coefficient searched");

    Common sim;
    int sim_k = 1;
    std::string strategy = "lattice";
    std::size_t samples = 1000;
    auto* simulate = app.add_subcommand("simulate", "orbit CSV (--out) and coverage report");
    add_common(simulate, sim);
    simulate->add_option("--k", sim_k, "number of spec points moved jointly")->check(CLI::PositiveNumber);
    simulate->add_option("--strategy", strategy, "lattice|random")->check(CLI::IsMember({"lattice", "random"}));
    simulate->add_option("--samples", samples, "words drawn by the random strategy");

    Common ref;
    int ref_k = 2;
    int trials = 20;
    double threshold = 0.5;
    auto* refute = app.add_subcommand("refute", "k-fold coverage trials against a ceiling");
    add_common(refute, ref);
    refute->add_option("--k", ref_k, "product order")->check(CLI::PositiveNumber);
    refute->add_option("--trials", trials, "random base tuples")->check(CLI::PositiveNumber);
    refute->add_option("--threshold", threshold, "coverage ceiling");

    int ex_n = 1;
    std::uint64_t ex_seed = 0;
    std::string ex_out;
    auto* construct = app.add_subcommand("construct-example", "spec of n+1 maps with a dense group on C^n");
    construct->add_option("--n", ex_n, "dimension (1..4)");
    construct->add_option("--seed", ex_seed, "radicand draw");
    construct->add_option("--out", ex_out, "output path");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 1;
    }

    try {
        if (*analyze) {
            const auto spec = load_spec(an.spec_path);
            AnalysisOptions opt;
            opt.mode = mode.empty() ? spec.arithmetic : (mode == "exact" ? Arithmetic::Exact : Arithmetic::Float);
            if (relation_bound < 1)
                throw InputError("--relation-bound: must be positive");
            opt.density.search_bound = relation_bound;
            opt.budget = an.budget.value_or(spec.budget.value_or(0));
            opt.box = resolve_box(an, spec);
            opt.epsilon = resolve_epsilon(an, spec);
            opt.points = spec.points;
            emit(an.out, dump(to_json(analyze_hypercyclicity(spec, opt), &spec.symbols)));
        } else if (*simulate) {
            const auto spec = load_spec(sim.spec_path);
            std::vector<CVector> base;
            for (int i = 0; i < sim_k; ++i)
                base.push_back(static_cast<std::size_t>(i) < spec.points.size() ? spec.points[static_cast<std::size_t>(i)]
                                                                                : CVector(CVector::Zero(spec.n)));
            OrbitOptions oo;
            oo.budget = sim.budget.value_or(spec.budget.value_or(20));
            oo.strategy = strategy == "random" ? OrbitStrategy::Random : OrbitStrategy::Lattice;
            oo.samples = samples;
            oo.seed = sim.seed.value_or(spec.seed);
            const auto sample = k_fold_orbit(spec.generators, base, oo);
            if (!sim.out.empty()) {
                std::ofstream f(sim.out);
                if (!f)
                    throw InputError("cannot write '" + sim.out + "'");
                write_orbit_csv(f, sample);
            }
            Json rep = to_json(coverage_report(sample, resolve_box(sim, spec), resolve_epsilon(sim, spec)));
            rep["words"] = sample.words.size();
            rep["strategy"] = to_string(sample.strategy);
            rep["seed"] = sample.seed;
            rep["warnings"] = sample.warnings;
            std::cout << dump(rep);
        } else if (*refute) {
            const auto spec = load_spec(ref.spec_path);
            RefuteOptions ro;
            ro.k = ref_k;
            ro.trials = trials;
            ro.budget = ref.budget.value_or(spec.budget.value_or(100));
            ro.box = resolve_box(ref, spec);
            ro.epsilon = resolve_epsilon(ref, spec);
            ro.threshold = threshold;
            ro.seed = ref.seed.value_or(spec.seed);
            if (!spec.points.empty())
                ro.one_fold_point = spec.points.front();
            emit(ref.out, dump(to_json(refute_k_transitivity(spec.generators, ro))));
        } else if (*construct) {
            emit(ex_out, dump(to_json(construct_example(ex_n, ex_seed))));
        }
    } catch (const InputError& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    } catch (const NumericalError& e) {
        std::cerr << "numerical failure: " << e.what() << '\n';
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "numerical failure: " << e.what() << '\n';
        return 2;
    }
    return 0;
}
