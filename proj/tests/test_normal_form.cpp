#include "support.hpp"

#include <gtest/gtest.h>

#include <algorithm>

using namespace affdyn;

namespace {

AffineMap scalar_map(Complex a, Complex b) { return {CMatrix::Constant(1, 1, a), CVector::Constant(1, b)}; }

std::vector<AffineMap> conjugated_diagonal_family(std::mt19937_64& rng, const std::vector<std::vector<Complex>>& diag) {
    const Index n = static_cast<Index>(diag.front().size());
    const AffineMap h = fixtures::random_map(rng, n);
    const CMatrix q = phi(h).entries();
    const CMatrix q_inv = q.inverse();
    std::vector<AffineMap> out;
    for (const auto& d : diag) {
        CMatrix l = CMatrix::Zero(n + 1, n + 1);
        l(0, 0) = 1.0;
        for (Index i = 0; i < n; ++i)
            l(i + 1, i + 1) = d[static_cast<std::size_t>(i)];
        out.push_back(phi_inv(classify_lift(q * l * q_inv)));
    }
    return out;
}

void expect_valid_structure(const BlockStructure& s, std::span<const AffineMap> gens) {
    EXPECT_EQ(s.P(0, 0), Complex(1.0));
    EXPECT_EQ(s.P.row(0).tail(s.size() - 1).cwiseAbs().maxCoeff(), 0.0);
    EXPECT_LE(max_abs(s.P * s.P_inv - CMatrix::Identity(s.size(), s.size())), 1e-8);
    for (const auto& f : gens) {
        const CMatrix m = s.P_inv * phi(f).entries() * s.P;
        EXPECT_LT(max_abs(m - project_to_block_shape(m, s.eta)), 1e-9 * std::max(1.0, max_abs(m)));
    }
    EXPECT_EQ(s.v0(0), Complex(1.0));
    EXPECT_EQ(s.w0, drop_first(s.v0));
}

} // namespace

TEST(NormalForm, SingleTranslation) {
    const std::vector<AffineMap> gens{scalar_map(1.0, 1.0)};
    const auto s = compute_normal_form(gens);
    EXPECT_EQ(s.eta, (Partition{2}));
    EXPECT_EQ(s.r(), 1);
    EXPECT_LE(max_abs(s.P - CMatrix::Identity(2, 2)), 1e-12);
    EXPECT_LE(std::abs(s.w0(0)), 1e-12);
}

TEST(NormalForm, SingleDilation) {
    const std::vector<AffineMap> gens{scalar_map(2.0, 0.0)};
    const auto s = compute_normal_form(gens);
    EXPECT_EQ(s.eta, (Partition{1, 1}));
    EXPECT_LE(max_abs(s.P - CMatrix::Identity(2, 2)), 1e-12);
    EXPECT_LE(std::abs(s.w0(0) - 1.0), 1e-12);
}

TEST(NormalForm, ConjugatedDiagonalPair) {
    std::mt19937_64 rng(41);
    const auto gens = conjugated_diagonal_family(rng, {{2.0, Complex(0, 3)}, {Complex(1, 1), -0.5}});
    const auto s = compute_normal_form(gens);
    EXPECT_EQ(s.eta, (Partition{1, 1, 1}));
    EXPECT_LT(s.residual, 1e-9);
    expect_valid_structure(s, gens);
}

TEST(NormalForm, RecoversHiddenStructure) {
    std::mt19937_64 rng(43);
    for (int t = 0; t < 300; ++t) {
        const int n = 1 + t % 3;
        const auto fam = fixtures::random_commuting_family(rng, n, 1 + t % 3);
        const auto s = compute_normal_form(fam.maps);
        ASSERT_EQ(s.eta.size(), fam.eta.size()) << "trial " << t;
        EXPECT_EQ(s.eta.front(), fam.eta.front()) << "trial " << t;
        Partition a = s.eta, b = fam.eta;
        std::sort(a.begin() + 1, a.end());
        std::sort(b.begin() + 1, b.end());
        EXPECT_EQ(a, b) << "trial " << t;
        expect_valid_structure(s, fam.maps);
    }
}

TEST(NormalForm, RejectsBadInput) {
    EXPECT_THROW(compute_normal_form({}), InputError);
    CMatrix a(2, 2), b(2, 2);
    a << 1, 1, 0, 1;
    b << 1, 0, 1, 1;
    const std::vector<AffineMap> gens{AffineMap(a, CVector::Zero(2)), AffineMap(b, CVector::Zero(2))};
    try {
        compute_normal_form(gens);
        FAIL() << "non-commuting pair accepted";
    } catch (const InputError& e) {
        EXPECT_NE(std::string(e.what()).find("generators 0 and 1"), std::string::npos) << e.what();
    }
}

TEST(NormalForm, ExactStructureFromTriangularFamily) {
    ExactMatrix m = ExactMatrix::zero(3, 3);
    m(0, 0) = 1;
    m(1, 0) = 5;
    m(1, 1) = 1;
    m(2, 2) = 2;
    const std::vector<ExactMatrix> fam{m};
    const auto s = exact_block_structure(fam);
    EXPECT_EQ(s.eta, (Partition{2, 1}));
    EXPECT_EQ(s.w0(0), ExactComplex(0));
    EXPECT_EQ(s.w0(1), ExactComplex(1));
    m(0, 2) = 1;
    const std::vector<ExactMatrix> bad{m};
    EXPECT_THROW(exact_block_structure(bad), UnsupportedExact);
}

TEST(CanonicalVectors, Examples) {
    BlockStructure s;
    s.eta = {2};
    s.P = CMatrix::Identity(2, 2);
    auto cv = canonical_vectors(s);
    EXPECT_EQ(cv.u0, (CVector(2) << 1, 0).finished());
    EXPECT_EQ(cv.J[0], CMatrix::Identity(2, 2));

    s.eta = {1, 1};
    cv = canonical_vectors(s);
    EXPECT_EQ(cv.u0, (CVector(2) << 1, 1).finished());
    EXPECT_EQ(cv.e[0], (CVector(2) << 1, 0).finished());
    EXPECT_EQ(cv.e[1], (CVector(2) << 0, 1).finished());
    EXPECT_EQ(cv.J[0], (CMatrix(2, 2) << 1, 0, 0, 0).finished());

    s.eta = {1, 2};
    s.P = CMatrix::Identity(3, 3);
    cv = canonical_vectors(s);
    EXPECT_EQ(cv.u0, (CVector(3) << 1, 1, 0).finished());
    EXPECT_EQ(cv.e[1], (CVector(3) << 0, 1, 0).finished());
    EXPECT_EQ(cv.J[1], (CMatrix(3, 3) << 0, 0, 0, 0, 1, 0, 0, 0, 1).finished());
}

TEST(CanonicalVectors, ProjectorIdentities) {
    std::mt19937_64 rng(47);
    for (int t = 0; t < 30; ++t) {
        const auto fam = fixtures::random_commuting_family(rng, 1 + t % 3, 2);
        const auto s = compute_normal_form(fam.maps);
        const auto cv = canonical_vectors(s);
        CMatrix sum = CMatrix::Zero(s.size(), s.size());
        for (std::size_t k = 0; k < cv.J.size(); ++k) {
            sum += cv.J[k];
            EXPECT_EQ(cv.J[k] * cv.u0, cv.e[k]);
            for (std::size_t l = 0; l < cv.J.size(); ++l)
                if (l != k)
                    EXPECT_EQ(cv.J[k] * cv.J[l], CMatrix::Zero(s.size(), s.size()));
        }
        EXPECT_EQ(sum, CMatrix::Identity(s.size(), s.size()));
        EXPECT_LE(max_abs(s.P * cv.u0 - s.v0), 1e-12);
    }
}

TEST(LogLift, Examples) {
    auto lift_one = [](const AffineMap& f) {
        const std::vector<AffineMap> gens{f};
        const auto s = compute_normal_form(gens);
        return log_lift_generators<FloatBackend>(gens, s).f_primes.at(0);
    };
    const auto t = lift_one(scalar_map(1.0, 1.0));
    EXPECT_LE(std::abs(t.linear()(0, 0)), 1e-12);
    EXPECT_LE(std::abs(t.translation()(0) - 1.0), 1e-12);
    const auto d = lift_one(scalar_map(2.0, 0.0));
    EXPECT_LE(std::abs(d.linear()(0, 0) - std::log(2.0)), 1e-12);
    EXPECT_LE(std::abs(d.translation()(0)), 1e-12);
    const auto id = lift_one(scalar_map(1.0, 0.0));
    EXPECT_LE(max_abs(id.linear()), 1e-12);
    EXPECT_LE(max_abs(id.translation()), 1e-12);
}

TEST(LogLift, ExcludesSingularGenerators) {
    const std::vector<AffineMap> gens{scalar_map(2.0, 0.0), scalar_map(0.0, 0.0)};
    const auto s = compute_normal_form(std::span<const AffineMap>(gens).first(1));
    const auto lift = log_lift_generators<FloatBackend>(gens, s);
    EXPECT_EQ(lift.lifted, (std::vector<std::size_t>{0}));
    EXPECT_EQ(lift.excluded, (std::vector<std::size_t>{1}));
}

TEST(LogLift, ExponentiatesBackAndHonoursBranches) {
    std::mt19937_64 rng(53);
    for (int t = 0; t < 60; ++t) {
        const auto fam = fixtures::random_commuting_family(rng, 1 + t % 3, 1 + t % 2);
        const auto s = compute_normal_form(fam.maps);
        std::vector<std::vector<int>> branches;
        for (std::size_t k = 0; k < fam.maps.size(); ++k) {
            std::vector<int> b{0};
            for (int j = 1; j < s.r(); ++j)
                b.push_back(static_cast<int>(rng() % 5) - 2);
            branches.push_back(b);
        }
        const auto lift = log_lift_generators<FloatBackend>(fam.maps, s, branches);
        for (std::size_t k = 0; k < fam.maps.size(); ++k) {
            const CMatrix want = phi(fam.maps[k]).entries();
            EXPECT_LE(max_abs(matrix_exp(psi(lift.f_primes[k]).entries()) - want), 1e-9 * std::max(1.0, max_abs(want)));
        }
    }
}

TEST(Generators, TranslationSets) {
    const std::vector<AffineMap> gens{scalar_map(1.0, 1.0)};
    const auto s = compute_normal_form(gens);
    const auto fp = log_lift_generators<FloatBackend>(gens, s).f_primes;
    const auto q = q_w0_generators<FloatBackend>(fp, s);
    ASSERT_EQ(q.size(), 1u);
    EXPECT_LE(std::abs(q.vectors[0].value(0) - 1.0), 1e-12);
    EXPECT_EQ(q.vectors[0].coeff, Coefficients::Natural);
    const auto g = g_v0_generators<FloatBackend>(fp, s);
    ASSERT_EQ(g.size(), 2u);
    EXPECT_LE(max_abs(g.vectors[0].value - (CVector(2) << 0, 1).finished()), 1e-12);
    EXPECT_EQ(g.vectors[0].coeff, Coefficients::Natural);
    EXPECT_LE(max_abs(g.vectors[1].value - (CVector(2) << FloatBackend::two_pi_i(), 0).finished()), 1e-12);
    EXPECT_EQ(g.vectors[1].coeff, Coefficients::Integer);
}

TEST(Generators, DilationSet) {
    // P = I, v0 = (1, 1), so w0 = 1 and f'(w0) = log 2.
    const std::vector<AffineMap> gens{scalar_map(2.0, 0.0)};
    const auto s = compute_normal_form(gens);
    const auto fp = log_lift_generators<FloatBackend>(gens, s).f_primes;
    const auto q = q_w0_generators<FloatBackend>(fp, s);
    ASSERT_EQ(q.size(), 2u);
    EXPECT_LE(std::abs(q.vectors[0].value(0) - std::log(2.0)), 1e-12);
    EXPECT_EQ(q.vectors[0].coeff, Coefficients::Natural);
    EXPECT_LE(std::abs(q.vectors[1].value(0) - FloatBackend::two_pi_i()), 1e-12);
    EXPECT_EQ(q.vectors[1].coeff, Coefficients::Integer);
}

TEST(Generators, HyperplaneProjectionReproducesQ) {
    std::mt19937_64 rng(59);
    for (int t = 0; t < 40; ++t) {
        const auto fam = fixtures::random_commuting_family(rng, 1 + t % 3, 1 + t % 3);
        const auto s = compute_normal_form(fam.maps);
        const auto fp = log_lift_generators<FloatBackend>(fam.maps, s).f_primes;
        const auto q = q_w0_generators<FloatBackend>(fp, s);
        const auto g = project_hyperplane(g_tilde_v0_generators<FloatBackend>(fp, s));
        ASSERT_EQ(q.size(), g.size());
        for (std::size_t k = 0; k < q.size(); ++k) {
            EXPECT_LE(max_abs(q.vectors[k].value - g.vectors[k].value), 1e-10 * std::max(1.0, max_abs(q.vectors[k].value)));
            EXPECT_EQ(q.vectors[k].coeff, g.vectors[k].coeff);
        }
        // Count identity.
        const std::size_t p = fp.size();
        EXPECT_EQ(q.size(), s.r() >= 2 ? p + static_cast<std::size_t>(s.r()) - 1 : p);
        EXPECT_EQ(q.count(Coefficients::Natural), p);
    }
}

TEST(Generators, PsiOfLiftAtV0) {
    std::mt19937_64 rng(61);
    for (int t = 0; t < 40; ++t) {
        const auto fam = fixtures::random_commuting_family(rng, 1 + t % 3, 2);
        const auto s = compute_normal_form(fam.maps);
        for (const auto& f : log_lift_generators<FloatBackend>(fam.maps, s).f_primes) {
            const CVector lhs = psi(f).entries() * s.v0;
            EXPECT_LE(std::abs(lhs(0)), 1e-10);
            EXPECT_LE(max_abs(drop_first(lhs) - f(s.w0)), 1e-10 * std::max(1.0, max_abs(lhs)));
        }
    }
}

TEST(Generators, ExactLiftsOfRootOfUnityFamily) {
    // f(x) = i x is diagonal with a root-of-unity eigenvalue, so its log is
    // exact; (1 + i) x is not.
    ExactMatrix a(1, 1), b(1, 1);
    a(0, 0) = ExactComplex::i();
    b(0, 0) = 0;
    ExactMatrix c(1, 1), d(1, 1);
    c(0, 0) = ExactComplex(1) + ExactComplex::i();
    d(0, 0) = 0;
    const std::vector<ExactAffineMap> gens{ExactAffineMap(a, b), ExactAffineMap(c, d)};
    std::vector<ExactMatrix> fam;
    for (const auto& g : gens)
        fam.push_back(phi(g).entries());
    const auto s = exact_block_structure(fam);
    EXPECT_EQ(s.eta, (Partition{1, 1}));
    EXPECT_THROW(log_lift_generators<ExactBackend>(gens, s), UnsupportedExact);
    const std::vector<ExactAffineMap> unit{ExactAffineMap(a, b)};
    const auto lift = log_lift_generators<ExactBackend>(unit, s);
    ASSERT_EQ(lift.f_primes.size(), 1u);
    EXPECT_EQ(lift.f_primes[0].linear()(0, 0), ExactComplex(ExactReal{}, ExactReal(Rational(1, 2)) * ExactReal::pi()));
    const auto q = q_w0_generators<ExactBackend>(lift.f_primes, s);
    ASSERT_TRUE(q.all_exact());
    const ExactMatrix lhs = psi(lift.f_primes[0]).entries() * s.v0;
    EXPECT_TRUE(lhs(0, 0).is_zero());
    EXPECT_EQ(drop_first(lhs), lift.f_primes[0](s.w0));
}
