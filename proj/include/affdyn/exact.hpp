#ifndef AFFDYN_EXACT_HPP
#define AFFDYN_EXACT_HPP

// Exact scalars: real numbers of the form  sum_k q_k * pi^{a_k} * sqrt(r_k)
// with q_k rational, a_k >= 0 and r_k squarefree. Distinct (a, r) monomials
// are linearly independent over Q (pi is transcendental, square roots of
// distinct squarefree integers are independent), so an element is zero iff
// every stored coefficient is zero. That property is what makes exact rank
// decisions possible further up.

#include "affdyn/errors.hpp"

#include <boost/multiprecision/cpp_int.hpp>

#include <algorithm>
#include <bit>
#include <cctype>
#include <cmath>
#include <complex>
#include <cstdint>
#include <map>
#include <numbers>
#include <numeric>
#include <optional>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

namespace affdyn {

using BigInt = boost::multiprecision::cpp_int;
using Rational = boost::multiprecision::cpp_rational;

namespace detail {

inline std::uint64_t checked_mul(std::uint64_t a, std::uint64_t b) {
    std::uint64_t out = 0;
    if (__builtin_mul_overflow(a, b, &out))
        throw UnsupportedExact("radicand overflow in exact arithmetic");
    return out;
}

struct SquarefreeSplit {
    std::uint64_t outside = 1; // d = outside^2 * radicand
    std::uint64_t radicand = 1;
};

inline SquarefreeSplit split_squarefree(std::uint64_t d) {
    SquarefreeSplit s;
    for (std::uint64_t p = 2; p * p <= d; ++p) {
        int e = 0;
        while (d % p == 0) {
            d /= p;
            ++e;
        }
        for (int k = 0; k < e / 2; ++k)
            s.outside *= p;
        if (e % 2)
            s.radicand *= p;
    }
    s.radicand = checked_mul(s.radicand, d);
    return s;
}

inline std::vector<std::uint64_t> prime_factors(std::uint64_t r) {
    std::vector<std::uint64_t> out;
    for (std::uint64_t p = 2; p * p <= r; ++p) {
        if (r % p == 0) {
            out.push_back(p);
            while (r % p == 0)
                r /= p;
        }
    }
    if (r > 1)
        out.push_back(r);
    return out;
}

inline long double to_long_double(const Rational& q) {
    return boost::multiprecision::numerator(q).convert_to<long double>() /
           boost::multiprecision::denominator(q).convert_to<long double>();
}

inline bool is_integer(const Rational& q) {
    return boost::multiprecision::denominator(q) == 1;
}

} // namespace detail

/// Dense row-major matrix over an arbitrary scalar ring; used for the exact
/// backend where Eigen's NumTraits machinery is not worth the trouble.
/// A column vector is a DenseMatrix with one column.
template <class T>
class DenseMatrix {
public:
    using Index = std::ptrdiff_t;
    using Scalar = T;

    DenseMatrix() = default;
    DenseMatrix(Index rows, Index cols) : rows_(rows), cols_(cols), data_(static_cast<std::size_t>(rows * cols)) {}

    static DenseMatrix identity(Index n) {
        DenseMatrix m(n, n);
        for (Index i = 0; i < n; ++i)
            m(i, i) = T(1);
        return m;
    }
    static DenseMatrix zero(Index rows, Index cols) { return DenseMatrix(rows, cols); }
    static DenseMatrix column(Index n) { return DenseMatrix(n, 1); }

    Index rows() const { return rows_; }
    Index cols() const { return cols_; }
    Index size() const { return rows_ * cols_; }

    T& operator()(Index i, Index j) { return data_[static_cast<std::size_t>(i * cols_ + j)]; }
    const T& operator()(Index i, Index j) const { return data_[static_cast<std::size_t>(i * cols_ + j)]; }
    T& operator()(Index i) { return data_[static_cast<std::size_t>(i)]; }
    const T& operator()(Index i) const { return data_[static_cast<std::size_t>(i)]; }

    DenseMatrix block(Index r0, Index c0, Index nr, Index nc) const {
        DenseMatrix out(nr, nc);
        for (Index i = 0; i < nr; ++i)
            for (Index j = 0; j < nc; ++j)
                out(i, j) = (*this)(r0 + i, c0 + j);
        return out;
    }

    friend DenseMatrix operator+(const DenseMatrix& a, const DenseMatrix& b) {
        check_same(a, b);
        DenseMatrix out(a.rows_, a.cols_);
        for (std::size_t k = 0; k < a.data_.size(); ++k)
            out.data_[k] = a.data_[k] + b.data_[k];
        return out;
    }
    friend DenseMatrix operator-(const DenseMatrix& a, const DenseMatrix& b) {
        check_same(a, b);
        DenseMatrix out(a.rows_, a.cols_);
        for (std::size_t k = 0; k < a.data_.size(); ++k)
            out.data_[k] = a.data_[k] - b.data_[k];
        return out;
    }
    friend DenseMatrix operator-(const DenseMatrix& a) {
        DenseMatrix out(a.rows_, a.cols_);
        for (std::size_t k = 0; k < a.data_.size(); ++k)
            out.data_[k] = -a.data_[k];
        return out;
    }
    friend DenseMatrix operator*(const DenseMatrix& a, const DenseMatrix& b) {
        if (a.cols_ != b.rows_)
            throw InputError("matrix product dimension mismatch");
        DenseMatrix out(a.rows_, b.cols_);
        for (Index i = 0; i < a.rows_; ++i)
            for (Index k = 0; k < a.cols_; ++k) {
                const T& aik = a(i, k);
                if (aik == T(0))
                    continue;
                for (Index j = 0; j < b.cols_; ++j)
                    out(i, j) = out(i, j) + aik * b(k, j);
            }
        return out;
    }
    friend DenseMatrix operator*(const T& s, const DenseMatrix& a) {
        DenseMatrix out(a.rows_, a.cols_);
        for (std::size_t k = 0; k < a.data_.size(); ++k)
            out.data_[k] = s * a.data_[k];
        return out;
    }
    friend bool operator==(const DenseMatrix& a, const DenseMatrix& b) {
        return a.rows_ == b.rows_ && a.cols_ == b.cols_ && a.data_ == b.data_;
    }

private:
    static void check_same(const DenseMatrix& a, const DenseMatrix& b) {
        if (a.rows_ != b.rows_ || a.cols_ != b.cols_)
            throw InputError("matrix sum dimension mismatch");
    }

    Index rows_ = 0;
    Index cols_ = 0;
    std::vector<T> data_;
};

/// Monomial pi^pi_power * sqrt(radicand), radicand squarefree.
struct Monomial {
    int pi_power = 0;
    std::uint64_t radicand = 1;

    auto operator<=>(const Monomial&) const = default;
};

class ExactReal {
public:
    ExactReal() = default;
    ExactReal(long long v) { // NOLINT(google-explicit-constructor)
        if (v != 0)
            terms_[{}] = Rational(v);
    }
    ExactReal(int v) : ExactReal(static_cast<long long>(v)) {} // NOLINT
    ExactReal(const Rational& q) { // NOLINT
        if (q != 0)
            terms_[{}] = q;
    }

    static ExactReal pi() { return monomial(Rational(1), {1, 1}); }

    /// sqrt(d) for an integer d >= 0, normalized to outside * sqrt(squarefree).
    static ExactReal sqrt(std::uint64_t d) {
        if (d == 0)
            return {};
        auto s = detail::split_squarefree(d);
        return monomial(Rational(BigInt(s.outside)), {0, s.radicand});
    }

    static ExactReal monomial(const Rational& c, Monomial m) {
        ExactReal out;
        if (c != 0)
            out.terms_[m] = c;
        return out;
    }

    const std::map<Monomial, Rational>& terms() const { return terms_; }

    bool is_zero() const { return terms_.empty(); }
    bool is_rational() const { return terms_.empty() || (terms_.size() == 1 && terms_.begin()->first == Monomial{}); }
    std::optional<Rational> as_rational() const {
        if (terms_.empty())
            return Rational(0);
        if (is_rational())
            return terms_.begin()->second;
        return std::nullopt;
    }
    bool has_pi() const {
        return std::any_of(terms_.begin(), terms_.end(), [](const auto& t) { return t.first.pi_power > 0; });
    }

    /// Coefficient of a single monomial (zero if absent).
    Rational coefficient(Monomial m) const {
        auto it = terms_.find(m);
        return it == terms_.end() ? Rational(0) : it->second;
    }

    long double to_long_double() const {
        long double acc = 0;
        for (const auto& [m, c] : terms_) {
            long double v = detail::to_long_double(c);
            for (int k = 0; k < m.pi_power; ++k)
                v *= std::numbers::pi_v<long double>;
            if (m.radicand != 1)
                v *= std::sqrt(static_cast<long double>(m.radicand));
            acc += v;
        }
        return acc;
    }
    double to_double() const { return static_cast<double>(to_long_double()); }

    ExactReal& operator+=(const ExactReal& o) {
        for (const auto& [m, c] : o.terms_) {
            auto& slot = terms_[m];
            slot += c;
            if (slot == 0)
                terms_.erase(m);
        }
        return *this;
    }
    ExactReal& operator-=(const ExactReal& o) { return *this += -o; }

    friend ExactReal operator+(ExactReal a, const ExactReal& b) { return a += b; }
    friend ExactReal operator-(ExactReal a, const ExactReal& b) { return a -= b; }
    friend ExactReal operator-(const ExactReal& a) {
        ExactReal out = a;
        for (auto& [m, c] : out.terms_)
            c = -c;
        return out;
    }
    friend ExactReal operator*(const ExactReal& a, const ExactReal& b) {
        ExactReal out;
        for (const auto& [ma, ca] : a.terms_)
            for (const auto& [mb, cb] : b.terms_) {
                std::uint64_t g = std::gcd(ma.radicand, mb.radicand);
                Monomial m{ma.pi_power + mb.pi_power, detail::checked_mul(ma.radicand / g, mb.radicand / g)};
                Rational c = ca * cb * Rational(BigInt(g));
                auto& slot = out.terms_[m];
                slot += c;
                if (slot == 0)
                    out.terms_.erase(m);
            }
        return out;
    }
    friend bool operator==(const ExactReal& a, const ExactReal& b) { return a.terms_ == b.terms_; }

    /// Multiplicative inverse; defined only for nonzero pi-free values.
    ExactReal inverse() const;

    friend ExactReal operator/(const ExactReal& a, const ExactReal& b) { return a * b.inverse(); }

private:
    std::map<Monomial, Rational> terms_;
};

namespace detail {

/// Gauss-Jordan solve of a square rational system; nullopt when singular.
inline std::optional<std::vector<Rational>> solve_rational(std::vector<std::vector<Rational>> a,
                                                           std::vector<Rational> b) {
    const std::size_t n = a.size();
    for (std::size_t col = 0; col < n; ++col) {
        std::size_t piv = col;
        while (piv < n && a[piv][col] == 0)
            ++piv;
        if (piv == n)
            return std::nullopt;
        std::swap(a[piv], a[col]);
        std::swap(b[piv], b[col]);
        const Rational inv = 1 / a[col][col];
        for (std::size_t j = col; j < n; ++j)
            a[col][j] *= inv;
        b[col] *= inv;
        for (std::size_t i = 0; i < n; ++i) {
            if (i == col || a[i][col] == 0)
                continue;
            const Rational f = a[i][col];
            for (std::size_t j = col; j < n; ++j)
                a[i][j] -= f * a[col][j];
            b[i] -= f * b[col];
        }
    }
    return b;
}

} // namespace detail

inline ExactReal ExactReal::inverse() const {
    if (is_zero())
        throw InputError("division by zero in exact arithmetic");
    if (has_pi())
        throw UnsupportedExact("exact division by a value with a formal pi part");
    if (is_rational())
        return ExactReal(Rational(1) / terms_.begin()->second);

    // Work in Q(sqrt p_1, ..., sqrt p_k) with the basis of squarefree products
    // of the primes involved; solve (x * y = 1) as a rational linear system.
    std::vector<std::uint64_t> primes;
    for (const auto& [m, c] : terms_)
        for (auto p : detail::prime_factors(m.radicand))
            if (std::find(primes.begin(), primes.end(), p) == primes.end())
                primes.push_back(p);
    if (primes.size() > 12)
        throw UnsupportedExact("too many distinct radicals for exact inversion");
    const std::size_t dim = std::size_t{1} << primes.size();
    std::vector<std::uint64_t> basis(dim, 1);
    std::map<std::uint64_t, std::size_t> index;
    for (std::size_t mask = 0; mask < dim; ++mask) {
        for (std::size_t b = 0; b < primes.size(); ++b)
            if (mask & (std::size_t{1} << b))
                basis[mask] = detail::checked_mul(basis[mask], primes[b]);
        index[basis[mask]] = mask;
    }
    std::vector<std::vector<Rational>> a(dim, std::vector<Rational>(dim));
    for (std::size_t j = 0; j < dim; ++j) {
        ExactReal prod = *this * ExactReal::sqrt(basis[j]);
        for (const auto& [m, c] : prod.terms_)
            a[index.at(m.radicand)][j] += c;
    }
    std::vector<Rational> rhs(dim);
    rhs[index.at(1)] = 1;
    auto sol = detail::solve_rational(std::move(a), std::move(rhs));
    if (!sol)
        throw NumericalError("exact inversion failed: singular multiplication map");
    ExactReal out;
    for (std::size_t j = 0; j < dim; ++j)
        if ((*sol)[j] != 0)
            out += ExactReal::monomial((*sol)[j], {0, basis[j]});
    return out;
}

class ExactComplex {
public:
    ExactComplex() = default;
    ExactComplex(ExactReal re, ExactReal im = {}) : re_(std::move(re)), im_(std::move(im)) {} // NOLINT
    ExactComplex(long long v) : re_(v) {}                                                     // NOLINT
    ExactComplex(int v) : re_(v) {}                                                           // NOLINT

    static ExactComplex i() { return {ExactReal{}, ExactReal(1)}; }
    static ExactComplex two_pi_i() { return {ExactReal{}, ExactReal(2) * ExactReal::pi()}; }

    const ExactReal& real() const { return re_; }
    const ExactReal& imag() const { return im_; }

    bool is_zero() const { return re_.is_zero() && im_.is_zero(); }
    bool has_pi() const { return re_.has_pi() || im_.has_pi(); }
    ExactComplex conj() const { return {re_, -im_}; }
    std::complex<double> to_complex() const { return {re_.to_double(), im_.to_double()}; }

    friend ExactComplex operator+(const ExactComplex& a, const ExactComplex& b) { return {a.re_ + b.re_, a.im_ + b.im_}; }
    friend ExactComplex operator-(const ExactComplex& a, const ExactComplex& b) { return {a.re_ - b.re_, a.im_ - b.im_}; }
    friend ExactComplex operator-(const ExactComplex& a) { return {-a.re_, -a.im_}; }
    friend ExactComplex operator*(const ExactComplex& a, const ExactComplex& b) {
        return {a.re_ * b.re_ - a.im_ * b.im_, a.re_ * b.im_ + a.im_ * b.re_};
    }
    friend ExactComplex operator/(const ExactComplex& a, const ExactComplex& b) {
        if (b.is_zero())
            throw InputError("division by zero in exact arithmetic");
        ExactReal norm = b.re_ * b.re_ + b.im_ * b.im_;
        ExactReal inv = norm.inverse();
        ExactComplex num = a * b.conj();
        return {num.re_ * inv, num.im_ * inv};
    }
    friend bool operator==(const ExactComplex& a, const ExactComplex& b) { return a.re_ == b.re_ && a.im_ == b.im_; }

private:
    ExactReal re_;
    ExactReal im_;
};

using ExactMatrix = DenseMatrix<ExactComplex>;
using ExactRealMatrix = DenseMatrix<ExactReal>;

/// Determinant by Laplace expansion memoized over column subsets
/// (n * 2^n ring multiplications, no division). Fine for n <= 14.
template <class T>
T determinant(const DenseMatrix<T>& m) {
    const auto n = m.rows();
    if (n != m.cols())
        throw InputError("determinant of a non-square matrix");
    if (n == 0)
        return T(1);
    if (n > 20)
        throw InputError("determinant: matrix too large for exact expansion");
    const std::size_t full = (std::size_t{1} << n) - 1;
    // value[mask] = det of rows [popcount(mask), n) x columns not in mask.
    std::vector<T> value(full + 1);
    value[full] = T(1);
    for (std::size_t mask = full; mask-- > 0;) {
        const int row = std::popcount(mask);
        T acc(0);
        int free_before = 0;
        for (int j = 0; j < n; ++j) {
            if (mask & (std::size_t{1} << j))
                continue;
            const std::size_t next = mask | (std::size_t{1} << j);
            if (!(m(row, j) == T(0))) {
                T term = m(row, j) * value[next];
                acc = (free_before % 2 == 0) ? acc + term : acc - term;
            }
            ++free_before;
        }
        value[mask] = acc;
    }
    return value[0];
}

/// Named constants available to the exact parser: flagged square roots of
/// squarefree integers (declared through their minimal polynomial x^2 - d).
class SymbolTable {
public:
    struct Declaration {
        std::string name;
        std::uint64_t radicand = 0;
        bool positive = true;
    };

    /// Registers name = sign * sqrt(d). d must be a positive non-square.
    void add_square_root(const std::string& name, std::uint64_t d, bool positive = true) {
        if (name.empty() || name == "pi" || name == "sqrt" || !(std::isalpha(static_cast<unsigned char>(name[0])) || name[0] == '_'))
            throw InputError("invalid symbol name '" + name + "'");
        auto split = detail::split_squarefree(d);
        if (d == 0 || split.radicand == 1)
            throw InputError("symbol '" + name + "': x^2 - " + std::to_string(d) + " is reducible over Q");
        if (values_.count(name))
            throw InputError("symbol '" + name + "' declared twice");
        ExactReal v = ExactReal::sqrt(d);
        values_[name] = positive ? v : -v;
        declarations_.push_back({name, d, positive});
        if (positive && split.outside == 1)
            names_.emplace(split.radicand, name);
    }

    std::optional<ExactReal> lookup(std::string_view name) const {
        auto it = values_.find(std::string(name));
        if (it == values_.end())
            return std::nullopt;
        return it->second;
    }
    std::optional<std::string> name_of_radical(std::uint64_t radicand) const {
        auto it = names_.find(radicand);
        if (it == names_.end())
            return std::nullopt;
        return it->second;
    }
    const std::map<std::string, ExactReal>& values() const { return values_; }
    const std::vector<Declaration>& declarations() const { return declarations_; }
    bool empty() const { return values_.empty(); }

private:
    std::map<std::string, ExactReal> values_;
    std::vector<Declaration> declarations_;
    std::map<std::uint64_t, std::string> names_;
};

namespace detail {

class ExactParser {
public:
    ExactParser(std::string_view text, const SymbolTable* symbols) : text_(text), symbols_(symbols) {}

    ExactReal parse() {
        ExactReal v = expr();
        skip_ws();
        if (pos_ != text_.size())
            fail("unexpected character");
        return v;
    }

private:
    [[noreturn]] void fail(const std::string& what) const {
        throw InputError("exact value \"" + std::string(text_) + "\": " + what + " at offset " + std::to_string(pos_));
    }
    void skip_ws() {
        while (pos_ < text_.size() && std::isspace(static_cast<unsigned char>(text_[pos_])))
            ++pos_;
    }
    bool accept(char c) {
        skip_ws();
        if (pos_ < text_.size() && text_[pos_] == c) {
            ++pos_;
            return true;
        }
        return false;
    }

    ExactReal expr() {
        ExactReal acc = term();
        for (;;) {
            if (accept('+'))
                acc += term();
            else if (accept('-'))
                acc -= term();
            else
                return acc;
        }
    }
    ExactReal term() {
        ExactReal acc = unary();
        for (;;) {
            if (accept('*'))
                acc = acc * unary();
            else if (accept('/'))
                acc = acc / unary();
            else
                return acc;
        }
    }
    ExactReal unary() {
        if (accept('-'))
            return -unary();
        if (accept('+'))
            return unary();
        ExactReal base = primary();
        if (accept('^')) {
            skip_ws();
            std::size_t start = pos_;
            while (pos_ < text_.size() && std::isdigit(static_cast<unsigned char>(text_[pos_])))
                ++pos_;
            if (start == pos_)
                fail("expected integer exponent");
            int e = std::stoi(std::string(text_.substr(start, pos_ - start)));
            ExactReal out(1);
            for (int k = 0; k < e; ++k)
                out = out * base;
            return out;
        }
        return base;
    }
    ExactReal primary() {
        skip_ws();
        if (pos_ >= text_.size())
            fail("unexpected end of input");
        char c = text_[pos_];
        if (c == '(') {
            ++pos_;
            ExactReal v = expr();
            if (!accept(')'))
                fail("expected ')'");
            return v;
        }
        if (std::isdigit(static_cast<unsigned char>(c)) || c == '.')
            return number();
        if (std::isalpha(static_cast<unsigned char>(c)) || c == '_') {
            std::size_t start = pos_;
            while (pos_ < text_.size() &&
                   (std::isalnum(static_cast<unsigned char>(text_[pos_])) || text_[pos_] == '_'))
                ++pos_;
            std::string_view name = text_.substr(start, pos_ - start);
            if (name == "pi")
                return ExactReal::pi();
            if (name == "sqrt") {
                if (!accept('('))
                    fail("expected '(' after sqrt");
                skip_ws();
                std::size_t s = pos_;
                while (pos_ < text_.size() && std::isdigit(static_cast<unsigned char>(text_[pos_])))
                    ++pos_;
                if (s == pos_)
                    fail("sqrt takes a non-negative integer literal");
                auto d = std::stoull(std::string(text_.substr(s, pos_ - s)));
                if (!accept(')'))
                    fail("expected ')'");
                return ExactReal::sqrt(d);
            }
            if (symbols_)
                if (auto v = symbols_->lookup(name))
                    return *v;
            pos_ = start;
            fail("unknown symbol '" + std::string(name) + "'");
        }
        fail("unexpected character");
    }
    ExactReal number() {
        std::size_t start = pos_;
        BigInt mantissa = 0;
        BigInt scale = 1;
        bool frac = false;
        while (pos_ < text_.size()) {
            char c = text_[pos_];
            if (std::isdigit(static_cast<unsigned char>(c))) {
                mantissa = mantissa * 10 + (c - '0');
                if (frac)
                    scale *= 10;
            } else if (c == '.' && !frac) {
                frac = true;
            } else {
                break;
            }
            ++pos_;
        }
        if (pos_ == start || (pos_ == start + 1 && text_[start] == '.'))
            fail("malformed number");
        return ExactReal(Rational(mantissa, scale));
    }

    std::string_view text_;
    const SymbolTable* symbols_;
    std::size_t pos_ = 0;
};

inline std::string rational_to_string(const Rational& q) {
    std::ostringstream os;
    os << boost::multiprecision::numerator(q);
    if (boost::multiprecision::denominator(q) != 1)
        os << '/' << boost::multiprecision::denominator(q);
    return os.str();
}

} // namespace detail

/// Parses "p/q", "p/q*pi", "2*pi*s3", "sqrt(2)/20 - 1", ... into an exact real.
inline ExactReal parse_exact_real(std::string_view text, const SymbolTable* symbols = nullptr) {
    return detail::ExactParser(text, symbols).parse();
}

/// Inverse of parse_exact_real; square roots print as symbol names when the
/// table knows them, otherwise as sqrt(r).
inline std::string to_string(const ExactReal& x, const SymbolTable* symbols = nullptr) {
    if (x.is_zero())
        return "0";
    std::string out;
    bool first = true;
    for (const auto& [m, c] : x.terms()) {
        std::vector<std::string> factors;
        if (m.pi_power == 1)
            factors.emplace_back("pi");
        else if (m.pi_power > 1)
            factors.push_back("pi^" + std::to_string(m.pi_power));
        if (m.radicand != 1) {
            std::optional<std::string> name = symbols ? symbols->name_of_radical(m.radicand) : std::nullopt;
            factors.push_back(name ? *name : "sqrt(" + std::to_string(m.radicand) + ")");
        }
        Rational mag = c < 0 ? Rational(-c) : c;
        if (!first)
            out += c < 0 ? " - " : " + ";
        else if (c < 0)
            out += "-";
        first = false;
        std::string body;
        if (mag != 1 || factors.empty())
            body = detail::rational_to_string(mag);
        for (const auto& f : factors)
            body += (body.empty() ? "" : "*") + f;
        out += body;
    }
    return out;
}

} // namespace affdyn

#endif // AFFDYN_EXACT_HPP
