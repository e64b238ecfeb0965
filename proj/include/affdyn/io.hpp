#ifndef AFFDYN_IO_HPP
#define AFFDYN_IO_HPP

// JSON specs and reports, orbit CSV export.
//
// Complex scalars are [re, im] pairs. Each part is a JSON number or a string
// in the exact grammar ("3/4", "2*pi*s3", "sqrt(2)/20"); a bare number or
// string stands for a real scalar. Integer numbers and strings are exact,
// other numbers are float only.

#include "affdyn/analysis.hpp"

#include <json.hpp>

#include <fstream>
#include <sstream>
#include <string>

namespace affdyn {

using Json = nlohmann::ordered_json;

namespace detail {

struct ParsedScalar {
    Complex value;
    std::optional<ExactComplex> exact;
};

inline std::optional<ExactReal> exact_part(const Json& j, const SymbolTable& symbols, const std::string& where,
                                           double& value) {
    if (j.is_number_integer()) {
        const auto v = j.get<long long>();
        value = static_cast<double>(v);
        return ExactReal(v);
    }
    if (j.is_number()) {
        value = j.get<double>();
        return std::nullopt;
    }
    if (j.is_string()) {
        try {
            ExactReal x = parse_exact_real(j.get<std::string>(), &symbols);
            value = x.to_double();
            return x;
        } catch (const InputError& e) {
            throw InputError(where + ": " + e.what());
        }
    }
    throw InputError(where + ": expected a number or an exact string");
}

inline ParsedScalar parse_scalar(const Json& j, const SymbolTable& symbols, const std::string& where) {
    ParsedScalar out;
    if (j.is_array()) {
        if (j.size() != 2)
            throw InputError(where + ": complex scalar must be [re, im]");
        double re = 0, im = 0;
        auto a = exact_part(j[0], symbols, where + "[0]", re);
        auto b = exact_part(j[1], symbols, where + "[1]", im);
        out.value = {re, im};
        if (a && b)
            out.exact = ExactComplex(*a, *b);
        return out;
    }
    double re = 0;
    auto a = exact_part(j, symbols, where, re);
    out.value = {re, 0.0};
    if (a)
        out.exact = ExactComplex(*a);
    return out;
}

struct ParsedMatrix {
    CMatrix value;
    std::optional<ExactMatrix> exact;
};

inline ParsedMatrix parse_matrix(const Json& j, Index rows, Index cols, const SymbolTable& symbols,
                                 const std::string& where) {
    if (!j.is_array() || static_cast<Index>(j.size()) != rows)
        throw InputError(where + ": expected " + std::to_string(rows) + " rows");
    ParsedMatrix out{CMatrix(rows, cols), ExactMatrix(rows, cols)};
    for (Index i = 0; i < rows; ++i) {
        const auto& row = j[static_cast<std::size_t>(i)];
        const std::string rw = where + "[" + std::to_string(i) + "]";
        if (!row.is_array() || static_cast<Index>(row.size()) != cols)
            throw InputError(rw + ": expected " + std::to_string(cols) + " entries");
        for (Index c = 0; c < cols; ++c) {
            auto s = parse_scalar(row[static_cast<std::size_t>(c)], symbols, rw + "[" + std::to_string(c) + "]");
            out.value(i, c) = s.value;
            if (out.exact && s.exact)
                (*out.exact)(i, c) = *s.exact;
            else
                out.exact.reset();
        }
    }
    return out;
}

inline ParsedMatrix parse_vector(const Json& j, Index n, const SymbolTable& symbols, const std::string& where) {
    if (!j.is_array() || static_cast<Index>(j.size()) != n)
        throw InputError(where + ": expected a vector of length " + std::to_string(n));
    ParsedMatrix out{CMatrix(n, 1), ExactMatrix(n, 1)};
    for (Index i = 0; i < n; ++i) {
        auto s = parse_scalar(j[static_cast<std::size_t>(i)], symbols, where + "[" + std::to_string(i) + "]");
        out.value(i, 0) = s.value;
        if (out.exact && s.exact)
            (*out.exact)(i, 0) = *s.exact;
        else
            out.exact.reset();
    }
    return out;
}

template <class T>
T get_field(const Json& j, const char* key, const std::string& where) {
    try {
        return j.at(key).get<T>();
    } catch (const nlohmann::json::exception&) {
        throw InputError(where + "." + key + ": missing or of the wrong type");
    }
}

inline void parse_symbols(const Json& j, SymbolTable& symbols) {
    if (!j.is_array())
        throw InputError("symbols: expected an array");
    for (std::size_t i = 0; i < j.size(); ++i) {
        const std::string where = "symbols[" + std::to_string(i) + "]";
        const auto& s = j[i];
        if (!s.is_object())
            throw InputError(where + ": expected an object");
        const auto name = get_field<std::string>(s, "name", where);
        const auto poly = get_field<std::vector<long long>>(s, "minpoly", where);
        if (poly.size() != 3 || poly[1] != 0 || poly[2] != 1 || poly[0] >= 0)
            throw InputError(where + ": only minimal polynomials x^2 - d with d > 0 are supported, given as [-d, 0, 1]");
        const int sign = s.contains("sign") ? get_field<int>(s, "sign", where) : 1;
        if (sign != 1 && sign != -1)
            throw InputError(where + ".sign: must be 1 or -1");
        symbols.add_square_root(name, static_cast<std::uint64_t>(-poly[0]), sign == 1);
    }
}

} // namespace detail

/// Parses a spec document. Throws InputError with a position or a field path
/// on malformed input; commutativity is validated here.
inline SemigroupSpec parse_spec(std::string_view text) {
    Json j;
    try {
        j = Json::parse(text.begin(), text.end());
    } catch (const nlohmann::json::parse_error& e) {
        throw InputError(std::string("malformed JSON at byte ") + std::to_string(e.byte) + ": " + e.what());
    }
    if (!j.is_object())
        throw InputError("spec: top level must be an object");
    SemigroupSpec spec;
    const auto n = detail::get_field<long long>(j, "n", "spec");
    if (n < 1)
        throw InputError("spec.n: must be at least 1");
    spec.n = static_cast<Index>(n);
    if (j.contains("arithmetic")) {
        const auto a = detail::get_field<std::string>(j, "arithmetic", "spec");
        if (a == "exact")
            spec.arithmetic = Arithmetic::Exact;
        else if (a == "float")
            spec.arithmetic = Arithmetic::Float;
        else
            throw InputError("spec.arithmetic: expected \"exact\" or \"float\"");
    }
    if (j.contains("symbols"))
        detail::parse_symbols(j["symbols"], spec.symbols);
    if (!j.contains("generators") || !j["generators"].is_array() || j["generators"].empty())
        throw InputError("spec.generators: expected a non-empty array");
    const auto& gens = j["generators"];
    for (std::size_t k = 0; k < gens.size(); ++k) {
        const std::string where = "generators[" + std::to_string(k) + "]";
        const auto& g = gens[k];
        if (!g.is_object() || !g.contains("A") || !g.contains("a"))
            throw InputError(where + ": expected an object with fields A and a");
        auto A = detail::parse_matrix(g["A"], spec.n, spec.n, spec.symbols, where + ".A");
        auto a = detail::parse_vector(g["a"], spec.n, spec.symbols, where + ".a");
        spec.generators.emplace_back(A.value, CVector(a.value.col(0)));
        if (A.exact && a.exact)
            spec.exact_generators.emplace_back(ExactAffineMap(*A.exact, *a.exact));
        else
            spec.exact_generators.emplace_back(std::nullopt);
        if (g.contains("log")) {
            const auto& l = g["log"];
            if (!l.is_object() || !l.contains("B") || !l.contains("b"))
                throw InputError(where + ".log: expected an object with fields B and b");
            auto B = detail::parse_matrix(l["B"], spec.n, spec.n, spec.symbols, where + ".log.B");
            auto b = detail::parse_vector(l["b"], spec.n, spec.symbols, where + ".log.b");
            if (!B.exact || !b.exact)
                throw InputError(where + ".log: logarithms must be given exactly");
            spec.exact_logs.emplace_back(ExactAffineMap(*B.exact, *b.exact));
        } else {
            spec.exact_logs.emplace_back(std::nullopt);
        }
    }
    if (j.contains("seed"))
        spec.seed = detail::get_field<std::uint64_t>(j, "seed", "spec");
    if (j.contains("budget")) {
        const auto b = detail::get_field<long>(j, "budget", "spec");
        if (b < 0)
            throw InputError("spec.budget: must be non-negative");
        spec.budget = b;
    }
    if (j.contains("box")) {
        const auto box = detail::get_field<std::vector<double>>(j, "box", "spec");
        if (box.size() != 2 || !(box[0] < box[1]))
            throw InputError("spec.box: expected [lo, hi] with lo < hi");
        spec.box = {box[0], box[1]};
    }
    if (j.contains("epsilon")) {
        spec.epsilon = detail::get_field<double>(j, "epsilon", "spec");
        if (!(spec.epsilon > 0))
            throw InputError("spec.epsilon: must be positive");
    }
    if (j.contains("points")) {
        const auto& pts = j["points"];
        if (!pts.is_array())
            throw InputError("spec.points: expected an array");
        for (std::size_t i = 0; i < pts.size(); ++i)
            spec.points.push_back(
                detail::parse_vector(pts[i], spec.n, spec.symbols, "points[" + std::to_string(i) + "]").value.col(0));
    }

    std::vector<ExactAffineMap> exact;
    for (const auto& g : spec.exact_generators)
        if (g)
            exact.push_back(*g);
    if (exact.size() == spec.generators.size())
        check_commuting(std::span<const ExactAffineMap>(exact));
    else
        check_commuting(std::span<const AffineMap>(spec.generators));
    return spec;
}

inline SemigroupSpec load_spec(const std::string& path) {
    std::ifstream in(path);
    if (!in)
        throw InputError("cannot open spec file '" + path + "'");
    std::stringstream buf;
    buf << in.rdbuf();
    try {
        return parse_spec(buf.str());
    } catch (const UnsupportedExact& e) {
        throw;
    } catch (const InputError& e) {
        throw InputError(path + ": " + e.what());
    }
}

// ---- writers ----

inline Json to_json(Complex z) { return Json::array({z.real(), z.imag()}); }

inline Json to_json(const ExactComplex& z, const SymbolTable* symbols = nullptr) {
    return Json::array({to_string(z.real(), symbols), to_string(z.imag(), symbols)});
}

inline Json to_json(const CVector& v) {
    Json out = Json::array();
    for (Index i = 0; i < v.size(); ++i)
        out.push_back(to_json(v(i)));
    return out;
}

inline Json to_json(const CMatrix& m) {
    Json rows = Json::array();
    for (Index i = 0; i < m.rows(); ++i) {
        Json row = Json::array();
        for (Index c = 0; c < m.cols(); ++c)
            row.push_back(to_json(m(i, c)));
        rows.push_back(std::move(row));
    }
    return rows;
}

/// Column vector as a flat list.
inline Json exact_vector_json(const ExactMatrix& v, const SymbolTable* symbols = nullptr) {
    Json out = Json::array();
    for (Index i = 0; i < v.rows(); ++i)
        out.push_back(to_json(v(i, 0), symbols));
    return out;
}

inline Json to_json(const ExactMatrix& m, const SymbolTable* symbols = nullptr) {
    Json rows = Json::array();
    for (Index i = 0; i < m.rows(); ++i) {
        Json row = Json::array();
        for (Index c = 0; c < m.cols(); ++c)
            row.push_back(to_json(m(i, c), symbols));
        rows.push_back(std::move(row));
    }
    return rows;
}

inline Json to_json(const AffineMap& f) { return {{"A", to_json(f.linear())}, {"a", to_json(CVector(f.translation()))}}; }

inline Json to_json(const GeneratorSet& g, const SymbolTable* symbols = nullptr) {
    Json vectors = Json::array();
    for (const auto& v : g.vectors) {
        Json e = {{"v", to_json(v.value)}, {"coeff", to_string(v.coeff)}, {"provenance", v.provenance}};
        if (v.exact)
            e["exact"] = exact_vector_json(*v.exact, symbols);
        vectors.push_back(std::move(e));
    }
    Json out = {{"dim", g.dim}, {"vectors", std::move(vectors)}};
    if (g.complex_line)
        out["complex_line"] = to_json(*g.complex_line);
    return out;
}

inline Json to_json(const DensityVerdict& v) {
    Json out = {{"status", to_string(v.status)},
                {"reason", to_string(v.reason)},
                {"witness", v.witness ? Json(*v.witness) : Json(nullptr)},
                {"m", v.m},
                {"rank", v.rank},
                {"bound", v.bound},
                {"tolerance", v.tolerance},
                {"mode", to_string(v.mode)}};
    if (v.normal)
        out["normal"] = *v.normal;
    return out;
}

inline Json to_json(const Box& b) { return Json::array({b.lo, b.hi}); }

inline Json to_json(const CoverageReport& r) {
    return {{"box", to_json(r.box)},
            {"epsilon", r.epsilon},
            {"real_dims", r.real_dims},
            {"cells_per_axis", r.cells_per_axis},
            {"cells_total", r.cells_total},
            {"cells_hit", r.cells_hit},
            {"coverage", r.coverage},
            {"points_used", r.points_used},
            {"points_escaped", r.points_escaped}};
}

inline Json to_json(const RefutationReport& r) {
    Json bases = Json::array();
    for (const auto& trial : r.base_points) {
        Json t = Json::array();
        for (const auto& x : trial)
            t.push_back(to_json(x));
        bases.push_back(std::move(t));
    }
    return {{"k", r.k},
            {"trials", r.trials},
            {"budget", r.budget},
            {"box", to_json(r.box)},
            {"epsilon", r.epsilon},
            {"threshold", r.threshold},
            {"seed", r.seed},
            {"words", r.words},
            {"coverages", r.coverages},
            {"max_coverage", r.max_coverage},
            {"below_threshold", r.below_threshold},
            {"one_fold_coverage", r.one_fold_coverage ? Json(*r.one_fold_coverage) : Json(nullptr)},
            {"base_points", std::move(bases)}};
}

inline Json to_json(const AnalysisReport& r, const SymbolTable* symbols = nullptr) {
    Json lifts = Json::array();
    for (const auto& f : r.f_primes)
        lifts.push_back(to_json(f));
    Json sims = Json::array();
    for (const auto& s : r.simulations)
        sims.push_back({{"label", s.label}, {"base", to_json(s.base)}, {"words", s.words}, {"coverage", to_json(s.coverage)}});
    return {{"headline", r.headline},
            {"n", r.n},
            {"generators", r.generator_count},
            {"excluded", r.excluded},
            {"p", r.p},
            {"eta", r.eta},
            {"r", r.r},
            {"m", r.m},
            {"mode", to_string(r.mode)},
            {"w0", to_json(r.w0)},
            {"normal_form_residual", r.residual},
            {"f_primes", std::move(lifts)},
            {"q_w0", to_json(r.q, symbols)},
            {"verdict", to_json(r.verdict)},
            {"simulations", std::move(sims)}};
}

/// Self-describing spec document; parse_spec(to_json(spec).dump()) restores it.
inline Json to_json(const SemigroupSpec& s) {
    Json symbols = Json::array();
    for (const auto& d : s.symbols.declarations())
        symbols.push_back({{"name", d.name},
                           {"minpoly", Json::array({-static_cast<long long>(d.radicand), 0, 1})},
                           {"sign", d.positive ? 1 : -1}});
    Json gens = Json::array();
    for (std::size_t k = 0; k < s.generators.size(); ++k) {
        Json g;
        if (k < s.exact_generators.size() && s.exact_generators[k])
            g = {{"A", to_json(s.exact_generators[k]->linear(), &s.symbols)},
                 {"a", exact_vector_json(s.exact_generators[k]->translation(), &s.symbols)}};
        else
            g = to_json(s.generators[k]);
        if (k < s.exact_logs.size() && s.exact_logs[k])
            g["log"] = {{"B", to_json(s.exact_logs[k]->linear(), &s.symbols)},
                        {"b", exact_vector_json(s.exact_logs[k]->translation(), &s.symbols)}};
        gens.push_back(std::move(g));
    }
    Json out = {{"n", s.n}, {"arithmetic", to_string(s.arithmetic)}, {"symbols", std::move(symbols)},
                {"generators", std::move(gens)}, {"seed", s.seed}};
    if (s.budget)
        out["budget"] = *s.budget;
    out["box"] = to_json(s.box);
    out["epsilon"] = s.epsilon;
    Json pts = Json::array();
    for (const auto& p : s.points)
        pts.push_back(to_json(p));
    out["points"] = std::move(pts);
    return out;
}

/// Header m1..mp, re1, im1, ..., one row per non-escaped word; the k base
/// points of a k-fold sample are concatenated.
inline void write_orbit_csv(std::ostream& os, const OrbitSample& s) {
    const std::size_t p = s.words.empty() ? 0 : s.words.front().size();
    for (std::size_t i = 0; i < p; ++i)
        os << (i ? "," : "") << 'm' << i + 1;
    const Index coords = s.n * static_cast<Index>(s.k());
    for (Index i = 0; i < coords; ++i)
        os << (p || i ? "," : "") << "re" << i + 1 << ",im" << i + 1;
    os << '\n';
    std::ostringstream num;
    num.precision(17);
    for (std::size_t w = 0; w < s.words.size(); ++w) {
        if (s.escaped[w])
            continue;
        std::string row;
        for (std::size_t i = 0; i < p; ++i)
            row += (i ? "," : "") + std::to_string(s.words[w][i]);
        for (Index i = 0; i < s.points[w].size(); ++i)
            for (double x : {s.points[w](i).real(), s.points[w](i).imag()}) {
                num.str("");
                num << x;
                row += (row.empty() ? "" : ",") + num.str();
            }
        os << row << '\n';
    }
}

} // namespace affdyn

#endif // AFFDYN_IO_HPP
