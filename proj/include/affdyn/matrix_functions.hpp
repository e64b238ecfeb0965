#ifndef AFFDYN_MATRIX_FUNCTIONS_HPP
#define AFFDYN_MATRIX_FUNCTIONS_HPP

// exp and log on block-triangular matrices with scalar block diagonals.
// Each block is mu*I + N with N strictly lower triangular, so the series in
// N terminate after n_k terms.

#include "affdyn/affine.hpp"
#include "affdyn/block_shape.hpp"

#include <unsupported/Eigen/MatrixFunctions>

#include <cmath>
#include <numbers>
#include <optional>
#include <span>

namespace affdyn {

/// Principal logarithm with imaginary part in (-pi, pi].
inline Complex principal_log(Complex z) {
    if (z == Complex(0.0, 0.0))
        throw InputError("logarithm of zero");
    Complex l = std::log(z);
    if (l.imag() <= -std::numbers::pi)
        l.imag(std::numbers::pi);
    return l;
}

/// General matrix exponential (scaling and squaring).
inline CMatrix matrix_exp(const CMatrix& m) {
    return m.exp();
}

namespace detail {

inline ExactReal cos_twelfth(long long k) {
    k = ((k % 24) + 24) % 24;
    if (k > 12)
        k = 24 - k;
    if (k > 6)
        return -cos_twelfth(12 - k);
    const ExactReal s2 = ExactReal::sqrt(2);
    const ExactReal s3 = ExactReal::sqrt(3);
    const ExactReal s6 = ExactReal::sqrt(6);
    const Rational quarter(1, 4);
    const Rational half(1, 2);
    switch (k) {
    case 0: return ExactReal(1);
    case 1: return ExactReal(quarter) * (s6 + s2);
    case 2: return ExactReal(half) * s3;
    case 3: return ExactReal(half) * s2;
    case 4: return ExactReal(half);
    case 5: return ExactReal(quarter) * (s6 - s2);
    default: return {};
    }
}

inline ExactComplex unit_twelfth(long long k) { return {cos_twelfth(k), cos_twelfth(6 - k)}; }

/// Rational q with x = q * pi, if x has that form.
inline std::optional<Rational> pi_multiple(const ExactReal& x) {
    if (x.is_zero())
        return Rational(0);
    if (x.terms().size() != 1 || x.terms().begin()->first != Monomial{1, 1})
        return std::nullopt;
    return x.terms().begin()->second;
}

} // namespace detail

/// exp(mu) for exact mu = i*q*pi with 12q an integer; those are the points
/// whose cosine and sine lie in Q(sqrt 2, sqrt 3).
inline ExactComplex exact_exp(const ExactComplex& mu) {
    if (!mu.real().is_zero())
        throw UnsupportedExact("exp of a value with nonzero real part has no exact closed form; use float mode");
    auto q = detail::pi_multiple(mu.imag());
    if (!q || !detail::is_integer(*q * 12))
        throw UnsupportedExact("exp(i*x) has no exact closed form unless x is a multiple of pi/12; use float mode");
    const Rational k = *q * 12;
    return detail::unit_twelfth(static_cast<long long>(boost::multiprecision::numerator(k) % 24));
}

/// Principal log of an exact scalar; supported on the 24th roots of unity.
inline ExactComplex exact_log(const ExactComplex& z) {
    if (z.is_zero())
        throw InputError("logarithm of zero");
    for (long long k = 0; k < 24; ++k) {
        if (detail::unit_twelfth(k) == z) {
            const long long principal = k > 12 ? k - 24 : k;
            return {ExactReal{}, ExactReal(Rational(principal, 12)) * ExactReal::pi()};
        }
    }
    throw UnsupportedExact("exact logarithm is only available for 24th roots of unity; supply the "
                           "logarithm explicitly or use float mode");
}

namespace detail {

inline void require_shape(const CMatrix& m, std::span<const int> eta, double tol, const char* what) {
    auto check = validate_block_shape(m, eta, tol * std::max(1.0, max_abs(m)));
    if (!check.ok)
        throw InputError(std::string(what) + ": matrix is not block lower triangular with scalar block diagonals (residual " +
                         std::to_string(check.residual) + ")");
}

inline void require_shape(const ExactMatrix& m, std::span<const int> eta, const char* what) {
    if (!validate_block_shape(m, eta).ok)
        throw InputError(std::string(what) + ": matrix is not block lower triangular with scalar block diagonals");
}

inline int branch_of(std::span<const int> branches, std::size_t block) {
    if (branches.empty())
        return 0;
    if (branches.size() <= block)
        throw InputError("branch vector shorter than the number of blocks");
    return branches[block];
}

} // namespace detail

/// exp of a matrix in block shape, blockwise as e^mu * sum_{j<n_k} N^j / j!.
/// A matrix that is not in the shape falls back to the general exponential.
inline CMatrix block_exp(const CMatrix& m, std::span<const int> eta, double tol = 1e-9) {
    if (!validate_block_shape(m, eta, tol * std::max(1.0, max_abs(m))).ok)
        return matrix_exp(m);
    const CMatrix shaped = project_to_block_shape(m, eta);
    CMatrix out = CMatrix::Zero(m.rows(), m.cols());
    const auto starts = block_starts(eta);
    for (std::size_t b = 0; b < eta.size(); ++b) {
        const Index s = starts[b];
        const Index k = eta[b];
        const Complex mu = shaped(s, s);
        CMatrix n = shaped.block(s, s, k, k);
        n.diagonal().setZero();
        CMatrix term = CMatrix::Identity(k, k);
        CMatrix sum = term;
        for (Index j = 1; j < k; ++j) {
            term = term * n / static_cast<double>(j);
            sum += term;
        }
        out.block(s, s, k, k) = std::exp(mu) * sum;
    }
    return out;
}

inline ExactMatrix block_exp(const ExactMatrix& m, std::span<const int> eta) {
    detail::require_shape(m, eta, "block_exp");
    ExactMatrix out = ExactMatrix::zero(m.rows(), m.cols());
    const auto starts = block_starts(eta);
    for (std::size_t b = 0; b < eta.size(); ++b) {
        const Index s = starts[b];
        const Index k = eta[b];
        const ExactComplex e = exact_exp(m(s, s));
        ExactMatrix n = m.block(s, s, k, k);
        for (Index i = 0; i < k; ++i)
            n(i, i) = ExactComplex{};
        ExactMatrix term = ExactMatrix::identity(k);
        ExactMatrix sum = term;
        for (Index j = 1; j < k; ++j) {
            term = ExactComplex(ExactReal(Rational(1, j))) * (term * n);
            sum = sum + term;
        }
        for (Index i = 0; i < k; ++i)
            for (Index j = 0; j < k; ++j)
                out(s + i, s + j) = e * sum(i, j);
    }
    return out;
}

/// Blockwise logarithm: (Log mu + 2 pi i branch_k) I + sum_{j<n_k} (-1)^{j+1} (N/mu)^j / j.
/// An empty branch vector means branch 0 everywhere.
inline CMatrix block_log(const CMatrix& a, std::span<const int> eta, std::span<const int> branches = {},
                         double tol = 1e-9) {
    detail::require_shape(a, eta, tol, "block_log");
    const CMatrix shaped = project_to_block_shape(a, eta);
    CMatrix out = CMatrix::Zero(a.rows(), a.cols());
    const auto starts = block_starts(eta);
    for (std::size_t b = 0; b < eta.size(); ++b) {
        const Index s = starts[b];
        const Index k = eta[b];
        const Complex mu = shaped(s, s);
        if (std::abs(mu) == 0.0)
            throw InputError("block_log: block " + std::to_string(b + 1) + " has zero diagonal (not invertible)");
        CMatrix x = shaped.block(s, s, k, k) / mu;
        x.diagonal().setZero();
        const Complex lead = principal_log(mu) + FloatBackend::two_pi_i() * static_cast<double>(detail::branch_of(branches, b));
        CMatrix power = CMatrix::Identity(k, k);
        CMatrix sum = lead * CMatrix::Identity(k, k);
        for (Index j = 1; j < k; ++j) {
            power = power * x;
            sum += (j % 2 == 1 ? 1.0 : -1.0) / static_cast<double>(j) * power;
        }
        out.block(s, s, k, k) = sum;
    }
    return out;
}

inline ExactMatrix block_log(const ExactMatrix& a, std::span<const int> eta, std::span<const int> branches = {}) {
    detail::require_shape(a, eta, "block_log");
    ExactMatrix out = ExactMatrix::zero(a.rows(), a.cols());
    const auto starts = block_starts(eta);
    for (std::size_t b = 0; b < eta.size(); ++b) {
        const Index s = starts[b];
        const Index k = eta[b];
        const ExactComplex mu = a(s, s);
        if (mu.is_zero())
            throw InputError("block_log: block " + std::to_string(b + 1) + " has zero diagonal (not invertible)");
        const ExactComplex inv = ExactComplex(1) / mu;
        ExactMatrix x = inv * a.block(s, s, k, k);
        for (Index i = 0; i < k; ++i)
            x(i, i) = ExactComplex{};
        const ExactComplex lead =
            exact_log(mu) + ExactComplex(ExactReal(detail::branch_of(branches, b))) * ExactComplex::two_pi_i();
        ExactMatrix power = ExactMatrix::identity(k);
        ExactMatrix sum = lead * ExactMatrix::identity(k);
        for (Index j = 1; j < k; ++j) {
            power = power * x;
            const Rational c(j % 2 == 1 ? 1 : -1, j);
            sum = sum + ExactComplex(ExactReal(c)) * power;
        }
        for (Index i = 0; i < k; ++i)
            for (Index j = 0; j < k; ++j)
                out(s + i, s + j) = sum(i, j);
    }
    return out;
}

/// B - 2 pi i k I with k = B_00 / (2 pi i); the result has a zero first row.
inline LiftedMatrix psi_normalize(const CMatrix& b, double tol = 1e-9) {
    if (b.rows() != b.cols() || b.rows() < 1)
        throw InputError("psi_normalize: matrix must be square");
    const Complex k = b(0, 0) / FloatBackend::two_pi_i();
    const double kr = std::round(k.real());
    if (std::abs(k - Complex(kr, 0.0)) > tol)
        throw NumericalError("psi_normalize: B_00 / (2 pi i) = (" + std::to_string(k.real()) + ", " +
                             std::to_string(k.imag()) + ") is not an integer");
    CMatrix out = b - FloatBackend::two_pi_i() * kr * CMatrix::Identity(b.rows(), b.cols());
    const double scale = std::max(1.0, max_abs(out));
    const double row = out.row(0).cwiseAbs().maxCoeff();
    if (row > tol * scale)
        throw NumericalError("psi_normalize: first row does not vanish after the shift (max " + std::to_string(row) + ")");
    out.row(0).setZero();
    return {std::move(out), LiftKind::PsiImage};
}

inline ExactLiftedMatrix psi_normalize(const ExactMatrix& b) {
    if (b.rows() != b.cols() || b.rows() < 1)
        throw InputError("psi_normalize: matrix must be square");
    const ExactComplex& corner = b(0, 0);
    auto q = detail::pi_multiple(corner.imag());
    if (!corner.real().is_zero() || !q || !detail::is_integer(*q / 2))
        throw NumericalError("psi_normalize: B_00 / (2 pi i) is not an integer");
    const ExactComplex shift = ExactComplex(ExactReal(*q / 2)) * ExactComplex::two_pi_i();
    ExactMatrix out = b;
    for (Index i = 0; i < out.rows(); ++i)
        out(i, i) = out(i, i) - shift;
    for (Index j = 0; j < out.cols(); ++j)
        if (!out(0, j).is_zero())
            throw NumericalError("psi_normalize: first row does not vanish after the shift");
    return {std::move(out), LiftKind::PsiImage};
}

} // namespace affdyn

#endif // AFFDYN_MATRIX_FUNCTIONS_HPP
