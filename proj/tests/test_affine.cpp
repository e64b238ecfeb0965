#include "support.hpp"

#include <gtest/gtest.h>

#include <unsupported/Eigen/MatrixFunctions>

using namespace affdyn;

namespace {

AffineMap scalar_map(Complex a, Complex b) { return {CMatrix::Constant(1, 1, a), CVector::Constant(1, b)}; }

ExactAffineMap exact_scalar_map(long long a, long long b) {
    ExactMatrix A(1, 1), t(1, 1);
    A(0, 0) = a;
    t(0, 0) = b;
    return {A, t};
}

// Independent exponential: truncated Taylor series after scaling by 2^-s.
CMatrix taylor_exp(const CMatrix& m) {
    int s = 0;
    double norm = m.cwiseAbs().rowwise().sum().maxCoeff();
    while (norm > 0.25) {
        norm /= 2;
        ++s;
    }
    const CMatrix x = m / std::pow(2.0, s);
    CMatrix term = CMatrix::Identity(m.rows(), m.cols());
    CMatrix sum = term;
    for (int k = 1; k < 30; ++k) {
        term = term * x / static_cast<double>(k);
        sum += term;
    }
    for (int i = 0; i < s; ++i)
        sum = sum * sum;
    return sum;
}

} // namespace

TEST(Compose, ScalarExample) {
    const auto h = compose(exact_scalar_map(2, 1), exact_scalar_map(3, 2));
    EXPECT_EQ(h, exact_scalar_map(6, 5));
}

TEST(Compose, IdentityIsNeutral) {
    std::mt19937_64 rng(1);
    const auto g = fixtures::random_exact_map(rng, 3);
    const ExactAffineMap id(ExactMatrix::identity(3), ExactMatrix::column(3));
    EXPECT_EQ(compose(id, g), g);
    EXPECT_EQ(compose(g, id), g);
}

TEST(Compose, RejectsDimensionMismatch) {
    std::mt19937_64 rng(1);
    EXPECT_THROW(compose(fixtures::random_map(rng, 2), fixtures::random_map(rng, 3)), InputError);
}

TEST(AffineMap, ValidatesShapes) {
    EXPECT_THROW(AffineMap(CMatrix::Zero(2, 3), CVector::Zero(2)), InputError);
    EXPECT_THROW(AffineMap(CMatrix::Zero(2, 2), CVector::Zero(3)), InputError);
    EXPECT_FALSE(AffineMap(CMatrix::Zero(2, 2), CVector::Zero(2)).is_invertible());
    EXPECT_TRUE(scalar_map(2.0, 0.0).is_invertible());
}

TEST(Phi, BlockLayout) {
    CMatrix A(2, 2);
    A << Complex(1, 1), 2, 3, Complex(0, 4);
    CVector a(2);
    a << 5, Complex(6, -1);
    const CMatrix m = phi(AffineMap(A, a)).entries();
    CMatrix want(3, 3);
    want << 1, 0, 0, a(0), A(0, 0), A(0, 1), a(1), A(1, 0), A(1, 1);
    EXPECT_EQ(m, want);
    EXPECT_EQ(phi(AffineMap(CMatrix::Identity(2, 2), CVector::Zero(2))).entries(), CMatrix::Identity(3, 3));
}

TEST(Phi, HomomorphismAndRoundTripExact) {
    std::mt19937_64 rng(7);
    for (int t = 0; t < 100; ++t) {
        const Index n = 1 + t % 3;
        const auto f = fixtures::random_exact_map(rng, n);
        const auto g = fixtures::random_exact_map(rng, n);
        EXPECT_EQ(phi(compose(f, g)).entries(), phi(f).entries() * phi(g).entries());
        EXPECT_EQ(phi_inv(phi(f)), f);
        EXPECT_EQ(psi_inv(psi(f)), f);
    }
}

TEST(Psi, TranslationExampleAndLinearity) {
    const CMatrix m = psi(scalar_map(0.0, 1.0)).entries();
    CMatrix want(2, 2);
    want << 0, 0, 1, 0;
    EXPECT_EQ(m, want);
    std::mt19937_64 rng(3);
    const auto f = fixtures::random_exact_map(rng, 2);
    const auto g = fixtures::random_exact_map(rng, 2);
    EXPECT_EQ(psi(f + g).entries(), psi(f).entries() + psi(g).entries());
}

TEST(Lift, KindIsEnforced) {
    EXPECT_THROW(phi_inv(psi(scalar_map(1.0, 1.0))), InputError);
    EXPECT_THROW(psi_inv(phi(scalar_map(1.0, 1.0))), InputError);
    EXPECT_THROW(LiftedMatrix(CMatrix::Identity(2, 2) * 2.0, LiftKind::PhiImage), InputError);
    CMatrix near = phi(scalar_map(2.0, 1.0)).entries();
    near(0, 1) = 1e-12;
    EXPECT_EQ(classify_lift(near).kind(), LiftKind::PhiImage);
    EXPECT_EQ(classify_lift(near).entries()(0, 1), Complex(0.0));
    near(0, 1) = 1e-3;
    EXPECT_EQ(classify_lift(near).kind(), LiftKind::General);
}

TEST(Lift, ExpOfPsiImageIsPhiImage) {
    std::mt19937_64 rng(13);
    for (int t = 0; t < 50; ++t) {
        const auto f = fixtures::random_map(rng, 1 + t % 3);
        const CMatrix e = matrix_exp(psi(f).entries());
        EXPECT_LE(std::abs(e(0, 0) - 1.0), 1e-10);
        EXPECT_LE(e.row(0).tail(e.cols() - 1).cwiseAbs().maxCoeff(), 1e-10);
        const auto g = phi_inv(classify_lift(e, 1e-10));
        EXPECT_TRUE(g.is_invertible());
    }
}

TEST(BlockShape, Examples) {
    const Partition two{2};
    CMatrix m(2, 2);
    m << Complex(3, 1), 0, 7, Complex(3, 1);
    EXPECT_TRUE(validate_block_shape(m, two).ok);
    CMatrix d = CMatrix::Zero(2, 2);
    d(0, 0) = 1;
    d(1, 1) = 2;
    EXPECT_FALSE(validate_block_shape(d, two).ok);
    EXPECT_TRUE(validate_block_shape(d, Partition{1, 1}).ok);
    CMatrix u = CMatrix::Identity(3, 3);
    u(0, 2) = 1e-3;
    const auto check = validate_block_shape(u, Partition{3});
    EXPECT_FALSE(check.ok);
    EXPECT_DOUBLE_EQ(check.residual, 1e-3);
    CMatrix off = CMatrix::Identity(3, 3);
    off(2, 0) = 1;
    EXPECT_FALSE(validate_block_shape(off, Partition{1, 2}).ok);
    EXPECT_TRUE(validate_block_shape(off, Partition{3}).ok);
    EXPECT_THROW(validate_block_shape(off, Partition{2}), InputError);
}

TEST(BlockExp, Examples) {
    CMatrix n(2, 2);
    n << 0, 0, 1, 0;
    CMatrix want(2, 2);
    want << 1, 0, 1, 1;
    EXPECT_LE(max_abs(block_exp(n, Partition{2}) - want), 1e-15);
    for (int size = 1; size <= 4; ++size) {
        const CMatrix m = FloatBackend::two_pi_i() * CMatrix::Identity(size, size);
        EXPECT_LE(max_abs(block_exp(m, Partition{size}) - CMatrix::Identity(size, size)), 1e-12);
    }
    CMatrix logs = CMatrix::Zero(2, 2);
    logs(0, 0) = std::log(2.0);
    logs(1, 1) = std::log(3.0);
    CMatrix diag = CMatrix::Zero(2, 2);
    diag(0, 0) = 2;
    diag(1, 1) = 3;
    EXPECT_LE(max_abs(block_exp(logs, Partition{1, 1}) - diag), 1e-14);
    EXPECT_LE(max_abs(block_exp(CMatrix::Zero(3, 3), Partition{1, 2}) - CMatrix::Identity(3, 3)), 0.0);
}

TEST(BlockExp, AgreesWithTaylorOracle) {
    std::mt19937_64 rng(17);
    for (int t = 0; t < 50; ++t) {
        const Partition eta = fixtures::random_partition(rng, 1 + t % 4);
        const CMatrix m = fixtures::random_shaped(rng, eta);
        const CMatrix want = taylor_exp(m);
        EXPECT_LE(max_abs(block_exp(m, eta) - want), 1e-10 * std::max(1.0, max_abs(want)));
    }
    // Outside the shape the general exponential is used.
    CMatrix g(2, 2);
    g << 0, 1, -1, 0;
    EXPECT_LE(max_abs(block_exp(g, Partition{2}) - taylor_exp(g)), 1e-12);
}

TEST(BlockExp, ExactNilpotentAndRootsOfUnity) {
    ExactMatrix m = ExactMatrix::zero(3, 3);
    const ExactComplex mu(ExactReal{}, ExactReal(Rational(1, 2)) * ExactReal::pi());
    for (Index i = 0; i < 3; ++i)
        m(i, i) = mu;
    m(1, 0) = 2;
    m(2, 1) = 4;
    m(2, 0) = 1;
    const ExactMatrix e = block_exp(m, Partition{3});
    // exp(i pi/2) (I + N + N^2/2) with N^2 = 8 at (2,0).
    EXPECT_EQ(e(0, 0), ExactComplex::i());
    EXPECT_EQ(e(1, 0), ExactComplex::i() * ExactComplex(2));
    EXPECT_EQ(e(2, 0), ExactComplex::i() * ExactComplex(5));
    EXPECT_EQ(e(2, 1), ExactComplex::i() * ExactComplex(4));
    EXPECT_TRUE(e(0, 1).is_zero());
    EXPECT_THROW(block_exp(m, Partition{1, 2}), InputError);
}

TEST(BlockLog, Examples) {
    CMatrix a(2, 2);
    a << 1, 0, 1, 1;
    CMatrix want(2, 2);
    want << 0, 0, 1, 0;
    EXPECT_LE(max_abs(block_log(a, Partition{2}) - want), 1e-15);
    EXPECT_LE(max_abs(block_log(CMatrix::Identity(3, 3), Partition{1, 2})), 0.0);
    const std::vector<int> branch{0, 2};
    const CMatrix b = block_log(CMatrix::Identity(2, 2), Partition{1, 1}, branch);
    EXPECT_NEAR(b(1, 1).imag(), 4 * std::numbers::pi, 1e-15);
    EXPECT_THROW(block_log(CMatrix::Zero(2, 2), Partition{2}), InputError);
    CMatrix d = CMatrix::Identity(2, 2);
    d(1, 1) = 2;
    EXPECT_THROW(block_log(d, Partition{2}), InputError);
}

TEST(BlockLog, RoundTripsThroughExp) {
    std::mt19937_64 rng(19);
    for (int t = 0; t < 50; ++t) {
        const Partition eta = fixtures::random_partition(rng, 1 + t % 4);
        const CMatrix a = fixtures::random_shaped(rng, eta);
        const CMatrix back = block_exp(block_log(a, eta), eta);
        EXPECT_LE(max_abs(back - a), 1e-10 * std::max(1.0, max_abs(a)));
        // Eigen's independent exponential agrees as well.
        EXPECT_LE(max_abs(CMatrix(block_log(a, eta).exp()) - a), 1e-9 * std::max(1.0, max_abs(a)));
    }
}

TEST(BlockLog, ExactUnipotentRoundTrip) {
    std::mt19937_64 rng(23);
    for (int t = 0; t < 20; ++t) {
        const Partition eta = fixtures::random_partition(rng, 1 + t % 4);
        const auto starts = block_starts(eta);
        const Index size = partition_size(eta);
        ExactMatrix a = ExactMatrix::zero(size, size);
        for (std::size_t b = 0; b < eta.size(); ++b) {
            const ExactComplex mu = detail::unit_twelfth(static_cast<long long>(rng() % 24));
            for (int i = 0; i < eta[b]; ++i) {
                a(starts[b] + i, starts[b] + i) = mu;
                for (int j = 0; j < i; ++j)
                    a(starts[b] + i, starts[b] + j) = fixtures::random_gaussian_rational(rng);
            }
        }
        EXPECT_EQ(block_exp(block_log(a, eta), eta), a);
    }
}

TEST(PsiNormalize, Examples) {
    const CMatrix two_pi_i = FloatBackend::two_pi_i() * CMatrix::Identity(2, 2);
    EXPECT_LE(max_abs(psi_normalize(two_pi_i).entries()), 1e-15);
    CMatrix n(2, 2);
    n << 0, 0, 1, 0;
    EXPECT_EQ(psi_normalize(n).entries(), n);
    CMatrix b = CMatrix::Zero(2, 2);
    b(0, 0) = FloatBackend::two_pi_i();
    b(1, 1) = FloatBackend::two_pi_i() + std::log(2.0);
    const CMatrix out = psi_normalize(b).entries();
    EXPECT_LE(std::abs(out(0, 0)), 1e-15);
    EXPECT_LE(std::abs(out(1, 1) - std::log(2.0)), 1e-15);
    EXPECT_LE(max_abs(matrix_exp(out) - matrix_exp(b)), 1e-12);
    CMatrix bad = CMatrix::Zero(2, 2);
    bad(0, 0) = 1.0;
    EXPECT_THROW(psi_normalize(bad), NumericalError);
}

TEST(PsiNormalize, ExactAndIdempotent) {
    ExactMatrix b = ExactMatrix::zero(2, 2);
    b(0, 0) = ExactComplex(0) + ExactComplex(ExactReal(-2)) * ExactComplex::two_pi_i();
    b(1, 1) = ExactComplex(3) + b(0, 0);
    b(1, 0) = 1;
    const ExactMatrix once = psi_normalize(b).entries();
    EXPECT_TRUE(once(0, 0).is_zero());
    EXPECT_EQ(once(1, 1), ExactComplex(3));
    EXPECT_EQ(psi_normalize(once).entries(), once);
    std::mt19937_64 rng(29);
    for (int t = 0; t < 20; ++t) {
        const CMatrix m = psi(fixtures::random_map(rng, 2)).entries() +
                          FloatBackend::two_pi_i() * static_cast<double>(t % 5 - 2) * CMatrix::Identity(3, 3);
        const CMatrix a = psi_normalize(m).entries();
        EXPECT_EQ(psi_normalize(a).entries(), a);
    }
}
