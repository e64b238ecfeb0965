#ifndef AFFDYN_AFFINE_HPP
#define AFFDYN_AFFINE_HPP

#include "affdyn/errors.hpp"
#include "affdyn/exact.hpp"

#include <Eigen/Dense>

#include <complex>
#include <numbers>
#include <string>
#include <utility>

namespace affdyn {

using Index = Eigen::Index;
using Complex = std::complex<double>;
using CMatrix = Eigen::MatrixXcd;
using CVector = Eigen::VectorXcd;
using RMatrix = Eigen::MatrixXd;
using RVector = Eigen::VectorXd;

/// Double precision backend.
struct FloatBackend {
    using Scalar = Complex;
    using Matrix = CMatrix;
    using Vector = CVector;
    static constexpr bool exact = false;

    static Matrix identity(Index n) { return Matrix::Identity(n, n); }
    static Matrix zeros(Index rows, Index cols) { return Matrix::Zero(rows, cols); }
    static Vector zero_vector(Index n) { return Vector::Zero(n); }
    static Scalar two_pi_i() { return {0.0, 2.0 * std::numbers::pi}; }
    static Complex to_complex(const Scalar& s) { return s; }
    static bool is_zero(const Scalar& s) { return s == Complex(0.0, 0.0); }
};

/// Exact backend: Gaussian combinations of rationals, pi powers and square roots.
struct ExactBackend {
    using Scalar = ExactComplex;
    using Matrix = ExactMatrix;
    using Vector = ExactMatrix;
    static constexpr bool exact = true;

    static Matrix identity(Index n) { return Matrix::identity(n); }
    static Matrix zeros(Index rows, Index cols) { return Matrix::zero(rows, cols); }
    static Vector zero_vector(Index n) { return Matrix::column(n); }
    static Scalar two_pi_i() { return ExactComplex::two_pi_i(); }
    static Complex to_complex(const Scalar& s) { return s.to_complex(); }
    static bool is_zero(const Scalar& s) { return s.is_zero(); }
};

inline CMatrix to_float(const ExactMatrix& m) {
    CMatrix out(m.rows(), m.cols());
    for (Index i = 0; i < m.rows(); ++i)
        for (Index j = 0; j < m.cols(); ++j)
            out(i, j) = m(i, j).to_complex();
    return out;
}
inline const CMatrix& to_float(const CMatrix& m) { return m; }

/// x -> A x + a on C^n.
template <class B>
class BasicAffineMap {
public:
    using Matrix = typename B::Matrix;
    using Vector = typename B::Vector;

    BasicAffineMap(Matrix linear, Vector translation)
        : linear_(std::move(linear)), translation_(std::move(translation)) {
        if (linear_.rows() != linear_.cols())
            throw InputError("affine map: linear part is not square");
        if (translation_.rows() != linear_.rows() || translation_.cols() != 1)
            throw InputError("affine map: translation length " + std::to_string(translation_.rows()) +
                             " does not match dimension " + std::to_string(linear_.rows()));
        if constexpr (B::exact)
            invertible_ = !determinant(linear_).is_zero();
        else
            invertible_ = linear_.rows() == 0 || Eigen::FullPivLU<CMatrix>(linear_).isInvertible();
    }

    static BasicAffineMap identity(Index n) { return {B::identity(n), B::zero_vector(n)}; }

    Index dim() const { return linear_.rows(); }
    const Matrix& linear() const { return linear_; }
    const Vector& translation() const { return translation_; }
    bool is_invertible() const { return invertible_; }

    Vector operator()(const Vector& x) const {
        if (x.rows() != dim())
            throw InputError("affine map applied to a point of the wrong dimension");
        return linear_ * x + translation_;
    }

    /// Componentwise sum (A + B, a + b); the vector space structure used by psi.
    friend BasicAffineMap operator+(const BasicAffineMap& f, const BasicAffineMap& g) {
        if (f.dim() != g.dim())
            throw InputError("affine map sum: dimension mismatch");
        return {f.linear_ + g.linear_, f.translation_ + g.translation_};
    }

    friend bool operator==(const BasicAffineMap& f, const BasicAffineMap& g) {
        return f.linear_ == g.linear_ && f.translation_ == g.translation_;
    }

private:
    Matrix linear_;
    Vector translation_;
    bool invertible_ = false;
};

using AffineMap = BasicAffineMap<FloatBackend>;
using ExactAffineMap = BasicAffineMap<ExactBackend>;

inline AffineMap to_float(const ExactAffineMap& f) { return {to_float(f.linear()), to_float(f.translation())}; }

enum class LiftKind { PhiImage, PsiImage, General };

/// (n+1) x (n+1) matrix together with the lift it came from. The kind is
/// checked on construction: first row exactly (1,0,..,0) or exactly zero.
template <class B>
class BasicLiftedMatrix {
public:
    using Matrix = typename B::Matrix;

    BasicLiftedMatrix(Matrix entries, LiftKind kind) : entries_(std::move(entries)), kind_(kind) {
        if (entries_.rows() != entries_.cols() || entries_.rows() < 1)
            throw InputError("lifted matrix must be square with size >= 1");
        if (kind_ == LiftKind::PhiImage && !first_row_is(1))
            throw InputError("lifted matrix tagged as a phi image but its first row is not (1,0,...,0)");
        if (kind_ == LiftKind::PsiImage && !first_row_is(0))
            throw InputError("lifted matrix tagged as a psi image but its first row is not zero");
    }

    Index size() const { return entries_.rows(); }
    const Matrix& entries() const { return entries_; }
    LiftKind kind() const { return kind_; }

private:
    bool first_row_is(int corner) const {
        if (!(entries_(0, 0) == typename B::Scalar(corner)))
            return false;
        for (Index j = 1; j < entries_.cols(); ++j)
            if (!B::is_zero(entries_(0, j)))
                return false;
        return true;
    }

    Matrix entries_;
    LiftKind kind_;
};

using LiftedMatrix = BasicLiftedMatrix<FloatBackend>;
using ExactLiftedMatrix = BasicLiftedMatrix<ExactBackend>;

/// f o g = (A B, A b + a).
template <class B>
BasicAffineMap<B> compose(const BasicAffineMap<B>& f, const BasicAffineMap<B>& g) {
    if (f.dim() != g.dim())
        throw InputError("compose: dimension mismatch (" + std::to_string(f.dim()) + " vs " +
                         std::to_string(g.dim()) + ")");
    return {f.linear() * g.linear(), f.linear() * g.translation() + f.translation()};
}

namespace detail {

template <class B>
typename B::Matrix embed(const BasicAffineMap<B>& f, int corner) {
    const Index n = f.dim();
    typename B::Matrix m = B::zeros(n + 1, n + 1);
    m(0, 0) = typename B::Scalar(corner);
    for (Index i = 0; i < n; ++i) {
        m(i + 1, 0) = f.translation()(i);
        for (Index j = 0; j < n; ++j)
            m(i + 1, j + 1) = f.linear()(i, j);
    }
    return m;
}

template <class B>
BasicAffineMap<B> extract(const typename B::Matrix& m) {
    const Index n = m.rows() - 1;
    typename B::Matrix a(n, n);
    typename B::Vector t = B::zero_vector(n);
    for (Index i = 0; i < n; ++i) {
        t(i) = m(i + 1, 0);
        for (Index j = 0; j < n; ++j)
            a(i, j) = m(i + 1, j + 1);
    }
    return {std::move(a), std::move(t)};
}

} // namespace detail

/// [[1, 0], [a, A]].
template <class B>
BasicLiftedMatrix<B> phi(const BasicAffineMap<B>& f) {
    return {detail::embed(f, 1), LiftKind::PhiImage};
}

/// [[0, 0], [a, A]].
template <class B>
BasicLiftedMatrix<B> psi(const BasicAffineMap<B>& f) {
    return {detail::embed(f, 0), LiftKind::PsiImage};
}

template <class B>
BasicAffineMap<B> phi_inv(const BasicLiftedMatrix<B>& m) {
    if (m.kind() != LiftKind::PhiImage)
        throw InputError("phi_inv: matrix is not in the phi image (first row must be (1,0,...,0))");
    return detail::extract<B>(m.entries());
}

template <class B>
BasicAffineMap<B> psi_inv(const BasicLiftedMatrix<B>& m) {
    if (m.kind() != LiftKind::PsiImage)
        throw InputError("psi_inv: matrix is not in the psi image (first row must be zero)");
    return detail::extract<B>(m.entries());
}

/// Checks a raw float matrix for a phi/psi first row within `tol` and snaps
/// that row to exact values. Rows matching neither give kind General.
inline LiftedMatrix classify_lift(CMatrix m, double tol = 1e-9) {
    if (m.rows() != m.cols() || m.rows() < 1)
        throw InputError("lifted matrix must be square with size >= 1");
    const double tail = m.cols() > 1 ? m.row(0).tail(m.cols() - 1).cwiseAbs().maxCoeff() : 0.0;
    if (tail <= tol) {
        for (int corner : {1, 0}) {
            if (std::abs(m(0, 0) - Complex(corner)) <= tol) {
                m.row(0).setZero();
                m(0, 0) = Complex(corner);
                return {std::move(m), corner == 1 ? LiftKind::PhiImage : LiftKind::PsiImage};
            }
        }
    }
    return {std::move(m), LiftKind::General};
}

/// p2: drop the first coordinate of a vector in C^{n+1}.
template <class V>
V drop_first(const V& v) {
    V out(v.rows() - 1, 1);
    for (Index i = 1; i < v.rows(); ++i)
        out(i - 1) = v(i);
    return out;
}

inline double max_abs(const CMatrix& m) { return m.size() == 0 ? 0.0 : m.cwiseAbs().maxCoeff(); }

} // namespace affdyn

#endif // AFFDYN_AFFINE_HPP
