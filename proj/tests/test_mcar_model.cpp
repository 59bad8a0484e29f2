#include <catch2/catch_amalgamated.hpp>

#include "mcargraph/mcar_model.hpp"
#include "mcargraph/rng.hpp"
#include "matchers.hpp"
#include "oracles.hpp"

#include <cmath>
#include <numbers>
#include <sstream>

using namespace mcargraph;

namespace {

MCARSpec reference_ou3() {
    MCARSpec spec;
    spec.k = 3;
    spec.p = 1;
    Matrix a1(3, 3);
    a1 << 2, 0, 0,
          0, 2, -1,
          -1, -1, 2;
    spec.ar_coeffs = {a1};
    spec.sigma_L = Matrix(3, 3);
    spec.sigma_L << 1, 0, 0.5,
                    0, 1, 0,
                    0.5, 0, 1;
    return spec;
}

MCARSpec scalar_ou(double a, double sigma2) {
    MCARSpec spec;
    spec.k = 1;
    spec.p = 1;
    spec.ar_coeffs = {Matrix::Constant(1, 1, a)};
    spec.sigma_L = Matrix::Constant(1, 1, sigma2);
    return spec;
}

} // namespace

TEST_CASE("selector_E places an identity block at the requested slot", "[model]") {
    const Matrix e2 = selector_E(2, 2, 3); // k = 2, p = 3, second block
    REQUIRE(e2.rows() == 6);
    REQUIRE(e2.cols() == 2);
    CHECK(e2.block(2, 0, 2, 2) == Matrix::Identity(2, 2));
    CHECK(e2.topRows(2).cwiseAbs().maxCoeff() == 0.0);
    CHECK(e2.bottomRows(2).cwiseAbs().maxCoeff() == 0.0);
    CHECK_THROWS_MATCHES(selector_E(0, 2, 3), Error, ErrorCodeIs(Errc::OutOfRange));
    CHECK_THROWS_MATCHES(selector_E(4, 2, 3), Error, ErrorCodeIs(Errc::OutOfRange));
}

TEST_CASE("companion_matrix lays out shifts and negated coefficients", "[model]") {
    MCARSpec scalar2;
    scalar2.k = 1;
    scalar2.p = 2;
    scalar2.ar_coeffs = {Matrix::Constant(1, 1, 2.0), Matrix::Constant(1, 1, 1.0)};
    scalar2.sigma_L = Matrix::Constant(1, 1, 1.0);
    Matrix expected(2, 2);
    expected << 0, 1,
               -1, -2;
    CHECK((companion_matrix(scalar2) - expected).cwiseAbs().maxCoeff() == 0.0);

    const MCARSpec ou = reference_ou3();
    CHECK((companion_matrix(ou) + ou.ar_coeffs[0]).cwiseAbs().maxCoeff() == 0.0);

    MCARSpec two2;
    two2.k = 2;
    two2.p = 2;
    Matrix a1(2, 2), a2(2, 2);
    a1 << 2, -0.3, 0.5, 2;
    a2 << 1, -0.3, 0.5, 0.85;
    two2.ar_coeffs = {a1, a2};
    two2.sigma_L = Matrix::Identity(2, 2);
    const Matrix comp = companion_matrix(two2);
    CHECK(comp.block(0, 2, 2, 2) == Matrix::Identity(2, 2));
    CHECK(comp.topLeftCorner(2, 2).cwiseAbs().maxCoeff() == 0.0);
    CHECK((comp.block(2, 0, 2, 2) + a2).cwiseAbs().maxCoeff() == 0.0);
    CHECK((comp.block(2, 2, 2, 2) + a1).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("validate_spec rejects malformed, non-strict, and unstable models", "[model]") {
    MCARSpec spec = reference_ou3();
    CHECK_NOTHROW(validate_spec(spec));

    MCARSpec bad = spec;
    bad.k = 0;
    CHECK_THROWS_MATCHES(validate_spec(bad), Error, ErrorCodeIs(Errc::BadShape));

    bad = spec;
    bad.ar_coeffs.push_back(Matrix::Identity(3, 3));
    CHECK_THROWS_MATCHES(validate_spec(bad), Error, ErrorCodeIs(Errc::BadShape));

    bad = spec;
    bad.sigma_L = Matrix::Identity(2, 2);
    CHECK_THROWS_MATCHES(validate_spec(bad), Error, ErrorCodeIs(Errc::BadShape));

    bad = spec;
    bad.sigma_L(0, 1) = 0.2; // asymmetric
    CHECK_THROWS_MATCHES(validate_spec(bad), Error, ErrorCodeIs(Errc::NotSymmetric));

    bad = spec;
    bad.sigma_L = Matrix::Identity(3, 3);
    bad.sigma_L(2, 2) = -0.5;
    CHECK_THROWS_MATCHES(validate_spec(bad), Error, ErrorCodeIs(Errc::BadShape));

    bad = spec;
    bad.sigma_L = Matrix::Zero(3, 3);
    bad.sigma_L(0, 0) = 1.0;
    bad.sigma_L(1, 1) = 1.0; // singular PSD
    CHECK_THROWS_MATCHES(validate_spec(bad), Error, ErrorCodeIs(Errc::NotStrict));
    bad.strict = false;
    CHECK_NOTHROW(validate_spec(bad));

    MCARSpec unstable = scalar_ou(-1.0, 1.0); // state matrix +1
    CHECK_THROWS_MATCHES(validate_spec(unstable), Error, ErrorCodeIs(Errc::Unstable));

    bad = spec;
    bad.ar_coeffs[0](0, 0) = std::numeric_limits<double>::infinity();
    CHECK_THROWS_MATCHES(validate_spec(bad), Error, ErrorCodeIs(Errc::NonFinite));
}

TEST_CASE("build_state_space assembles the state model and its covariance", "[model]") {
    const MCARSpec spec = reference_ou3();
    const StateSpace ss = build_state_space(spec);
    CHECK(ss.k == 3);
    CHECK(ss.p == 1);
    CHECK(ss.B == Matrix::Identity(3, 3));
    CHECK(ss.C == Matrix::Identity(3, 3));
    const Matrix w = ss.B * ss.sigma_L * ss.B.transpose();
    CHECK((ss.A * ss.gamma0 + ss.gamma0 * ss.A.transpose() + w).norm() < 1e-10);
    CHECK((ss.gamma0 - ss.gamma0.transpose()).cwiseAbs().maxCoeff() < 1e-13);
    CHECK(min_symmetric_eigenvalue(ss.gamma0) > 0.0);

    MCARSpec two2;
    two2.k = 2;
    two2.p = 2;
    Matrix a1(2, 2), a2(2, 2);
    a1 << 2, -0.3, 0.5, 2;
    a2 << 1, -0.3, 0.5, 0.85;
    two2.ar_coeffs = {a1, a2};
    two2.sigma_L = Matrix::Identity(2, 2);
    const StateSpace ss2 = build_state_space(two2);
    CHECK(ss2.A.rows() == 4);
    CHECK(ss2.B.rows() == 4);
    CHECK(ss2.B.bottomRows(2) == Matrix::Identity(2, 2));
    CHECK(ss2.C.cols() == 4);
    const Matrix w2 = ss2.B * ss2.sigma_L * ss2.B.transpose();
    CHECK((ss2.A * ss2.gamma0 + ss2.gamma0 * ss2.A.transpose() + w2).norm() < 1e-10);
}

TEST_CASE("autocovariance follows the exponential decay and transpose rule", "[model]") {
    const StateSpace ss = build_state_space(scalar_ou(1.0, 1.0));
    CHECK(autocovariance(ss, 0.0)(0, 0) == Catch::Approx(0.5).epsilon(1e-13));
    CHECK(autocovariance(ss, 0.5)(0, 0) == Catch::Approx(0.5 * std::exp(-0.5)).epsilon(1e-12));

    const StateSpace ss3 = build_state_space(reference_ou3());
    const Matrix fwd = autocovariance(ss3, 0.7);
    const Matrix bwd = autocovariance(ss3, -0.7);
    CHECK((fwd - bwd.transpose()).cwiseAbs().maxCoeff() < 1e-13);
    CHECK((autocovariance(ss3, 0.0) - ss3.gamma0).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("spectral_density matches the scalar closed form", "[model]") {
    const StateSpace ss = build_state_space(scalar_ou(1.0, 1.0));
    for (double lambda : {0.0, 1.0, 2.3}) {
        const double expected = 1.0 / (2.0 * std::numbers::pi * (lambda * lambda + 1.0));
        const ComplexMatrix f = spectral_density(ss, lambda);
        CHECK(f(0, 0).real() == Catch::Approx(expected).epsilon(1e-12));
        CHECK(std::abs(f(0, 0).imag()) < 1e-15);
    }
}

TEST_CASE("spectral_density is Hermitian with transposed reflection", "[model]") {
    const StateSpace ss = build_state_space(reference_ou3());
    const ComplexMatrix f = spectral_density(ss, 1.7);
    CHECK((f - f.adjoint()).cwiseAbs().maxCoeff() < 1e-14);
    const ComplexMatrix fneg = spectral_density(ss, -1.7);
    CHECK((fneg - f.transpose()).cwiseAbs().maxCoeff() < 1e-14);
}

TEST_CASE("the resolvent and polynomial density formulas agree", "[model]") {
    Rng rng(301);
    for (int trial = 0; trial < 5; ++trial) {
        const int k = 1 + rng.next_below(3);
        const int p = 1 + rng.next_below(2);
        const MCARSpec spec = testutil::random_stable_spec(rng, k, p);
        const StateSpace ss = build_state_space(spec);
        for (int i = 0; i < 20; ++i) {
            const double lambda = rng.next_range(-50.0, 50.0);
            const ComplexMatrix a = spectral_density(ss, lambda);
            const ComplexMatrix b = spectral_density_polynomial(spec, lambda);
            CHECK((a - b).cwiseAbs().maxCoeff() < 1e-9);
        }
    }
}

TEST_CASE("predictor_coefficients slice the exponential into blocks", "[model]") {
    const StateSpace ss = build_state_space(reference_ou3());
    const auto blocks = predictor_coefficients(ss, 0.3);
    REQUIRE(blocks.size() == 1);
    CHECK((blocks[0] - expm(ss.A * 0.3)).cwiseAbs().maxCoeff() < 1e-14);

    MCARSpec scalar2;
    scalar2.k = 1;
    scalar2.p = 2;
    scalar2.ar_coeffs = {Matrix::Constant(1, 1, 2.0), Matrix::Constant(1, 1, 1.0)};
    scalar2.sigma_L = Matrix::Constant(1, 1, 1.0);
    const StateSpace ss2 = build_state_space(scalar2);
    const auto blocks2 = predictor_coefficients(ss2, 0.4);
    REQUIRE(blocks2.size() == 2);
    const Matrix full = expm(ss2.A * 0.4);
    CHECK(blocks2[0](0, 0) == Catch::Approx(full(0, 0)).margin(1e-15));
    CHECK(blocks2[1](0, 0) == Catch::Approx(full(0, 1)).margin(1e-15));

    CHECK_THROWS_MATCHES(predictor_coefficients(ss, -0.1), Error,
                         ErrorCodeIs(Errc::NegativeHorizon));
}

TEST_CASE("sampled_var1 pairs the transition with the step-noise covariance", "[model]") {
    const StateSpace ss = build_state_space(reference_ou3());
    const SampledVar1 sv = sampled_var1(ss, 0.25);
    CHECK((sv.transition - expm(ss.A * 0.25)).cwiseAbs().maxCoeff() == 0.0);
    const Matrix w = ss.B * ss.sigma_L * ss.B.transpose();
    CHECK((sv.noise_cov - gramian(ss.A, w, 0.25)).cwiseAbs().maxCoeff() == 0.0);
    CHECK_THROWS_MATCHES(sampled_var1(ss, 0.0), Error, ErrorCodeIs(Errc::NegativeHorizon));
}

TEST_CASE("predictor_coefficients at zero horizon select the current block", "[model]") {
    MCARSpec spec;
    spec.k = 2;
    spec.p = 2;
    Matrix a1(2, 2), a2(2, 2);
    a1 << 2, -0.3, 0.5, 2;
    a2 << 1, -0.3, 0.5, 0.85;
    spec.ar_coeffs = {a1, a2};
    spec.sigma_L = Matrix::Identity(2, 2);
    const StateSpace ss = build_state_space(spec);

    const auto at_zero = predictor_coefficients(ss, 0.0);
    REQUIRE(at_zero.size() == 2);
    CHECK((at_zero[0] - Matrix::Identity(2, 2)).cwiseAbs().maxCoeff() == 0.0);
    CHECK(at_zero[1].cwiseAbs().maxCoeff() == 0.0);

    const auto blocks = predictor_coefficients(ss, 0.6);
    Matrix stacked(2, 4);
    stacked << blocks[0], blocks[1];
    const Matrix direct = ss.C * expm(ss.A * 0.6);
    CHECK((stacked - direct).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("sampled_var1 on a diagonal system and at long horizons", "[model]") {
    MCARSpec spec;
    spec.k = 2;
    spec.p = 1;
    Matrix a1 = Matrix::Zero(2, 2);
    a1(0, 0) = 1.0;
    a1(1, 1) = 2.0;
    spec.ar_coeffs = {a1};
    spec.sigma_L = Matrix::Identity(2, 2);
    const StateSpace ss = build_state_space(spec);

    const SampledVar1 sv = sampled_var1(ss, std::log(2.0));
    CHECK(sv.transition(0, 0) == Catch::Approx(0.5).epsilon(1e-12));
    CHECK(sv.transition(1, 1) == Catch::Approx(0.25).epsilon(1e-12));
    CHECK(std::abs(sv.transition(0, 1)) + std::abs(sv.transition(1, 0)) < 1e-15);

    const SampledVar1 far = sampled_var1(ss, 50.0);
    CHECK((far.noise_cov - ss.gamma0).cwiseAbs().maxCoeff() < 1e-9);
}

TEST_CASE("sampled_var1 satisfies the step-composition laws", "[model]") {
    const StateSpace ss = build_state_space(reference_ou3());
    const double h1 = 0.3, h2 = 0.45;
    const SampledVar1 s1 = sampled_var1(ss, h1);
    const SampledVar1 s2 = sampled_var1(ss, h2);
    const SampledVar1 s12 = sampled_var1(ss, h1 + h2);

    CHECK((s12.transition - s2.transition * s1.transition).cwiseAbs().maxCoeff() < 1e-9);
    const Matrix composed =
        s2.transition * s1.noise_cov * s2.transition.transpose() + s2.noise_cov;
    CHECK((s12.noise_cov - composed).cwiseAbs().maxCoeff() < 1e-9);
}

TEST_CASE("short-step noise covariance is close to the scaled driver covariance", "[model]") {
    const StateSpace ss = build_state_space(reference_ou3());
    const double h = 0.01;
    const Matrix q = sampled_var1(ss, h).noise_cov;
    for (int a = 0; a < 3; ++a) {
        for (int b = 0; b < 3; ++b) {
            const double target = h * ss.sigma_L(a, b);
            if (target != 0.0)
                CHECK(q(a, b) == Catch::Approx(target).epsilon(0.05));
            else
                CHECK(std::abs(q(a, b)) <= 0.05 * h);
        }
    }
}

TEST_CASE("model text round-trips through format and parse", "[model]") {
    Rng rng(302);
    for (int trial = 0; trial < 5; ++trial) {
        const MCARSpec spec = testutil::random_stable_spec(rng, 1 + rng.next_below(3),
                                                           1 + rng.next_below(3));
        std::istringstream in(format_model_spec(spec));
        const MCARSpec back = parse_model_spec(in);
        CHECK(back.k == spec.k);
        CHECK(back.p == spec.p);
        CHECK(back.strict == spec.strict);
        for (int j = 0; j < spec.p; ++j)
            CHECK((back.ar_coeffs[j] - spec.ar_coeffs[j]).cwiseAbs().maxCoeff() == 0.0);
        CHECK((back.sigma_L - spec.sigma_L).cwiseAbs().maxCoeff() == 0.0);
    }
}

TEST_CASE("model parser accepts comments and flags malformed input", "[model]") {
    std::istringstream good("# header\nk 1\np 1 # inline\nar_coeffs 2\nsigma_L 1\nstrict true\n");
    const MCARSpec spec = parse_model_spec(good);
    CHECK(spec.k == 1);
    CHECK(spec.ar_coeffs[0](0, 0) == 2.0);

    std::istringstream missing("k 1\np 1\nar_coeffs 2\nstrict true\n");
    CHECK_THROWS_MATCHES(parse_model_spec(missing), Error, ErrorCodeIs(Errc::ParseFailure));

    std::istringstream badtok("k 1\np 1\nar_coeffs x\nsigma_L 1\nstrict true\n");
    CHECK_THROWS_MATCHES(parse_model_spec(badtok), Error, ErrorCodeIs(Errc::ParseFailure));

    std::istringstream unknown("k 1\np 1\nar_coeffs 2\nsigma_L 1\nstrict true\nbogus 3\n");
    CHECK_THROWS_MATCHES(parse_model_spec(unknown), Error, ErrorCodeIs(Errc::ParseFailure));
}

TEST_CASE("strictness threshold separates PSD from PD noise", "[model]") {
    MCARSpec spec = scalar_ou(1.0, 1e-11);
    CHECK_THROWS_MATCHES(validate_spec(spec), Error, ErrorCodeIs(Errc::NotStrict));
    spec.sigma_L(0, 0) = 1e-6;
    CHECK_NOTHROW(validate_spec(spec));
}
