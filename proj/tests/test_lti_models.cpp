#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "qcascade/errors.hpp"
#include "qcascade/lti_models.hpp"
#include "qcascade/networks.hpp"

using namespace qc;

namespace {

SLHModel cavity(double kappa) {
    SLHModel m;
    m.S = Mat::Identity(1, 1);
    m.L_minus = Mat::Constant(1, 1, std::sqrt(kappa));
    m.L_plus = Mat::Zero(1, 1);
    m.omega = Mat::Zero(1, 1);
    m.eps = Mat::Zero(1, 1);
    return m;
}

const cplx kSamples[] = {{0.0, 0.3}, {0.2, -1.7}, {-0.05, 4.0}, {1.5, 0.0}, {0.0, -12.0}};

}  // namespace

TEST_CASE("empty cavity is the all-pass (z - k/2)/(z + k/2)") {
    const double kappa = 1.3;
    const RationalTF tf(slh_to_statespace(cavity(kappa)));
    for (cplx z : kSamples) {
        const cplx expect = (z - kappa / 2) / (z + kappa / 2);
        const Mat t = tf.eval(z);
        CHECK(std::abs(t(0, 0) - expect) < 1e-14);
        CHECK(std::abs(t(1, 1) - std::conj((std::conj(z) - kappa / 2) / (std::conj(z) + kappa / 2))) < 1e-14);
        CHECK(std::abs(t(0, 1)) < 1e-15);
    }
}

TEST_CASE("degenerate parametric amplifier against its closed-form resolvent") {
    const double kappa = 1.0, eps = 0.2;
    SLHModel m = cavity(kappa);
    m.eps = Mat::Constant(1, 1, I_unit * eps);
    const RationalTF tf(slh_to_statespace(m));
    auto p = tf.poles();
    std::vector<double> re{p(0).real(), p(1).real()};
    std::sort(re.begin(), re.end());
    CHECK(re[0] == doctest::Approx(-0.7));
    CHECK(re[1] == doctest::Approx(-0.3));
    for (cplx z : kSamples) {
        const cplx d = (z + kappa / 2) * (z + kappa / 2) - eps * eps;
        const Mat t = tf.eval(z);
        CHECK(std::abs(t(0, 0) - (1.0 - kappa * (z + kappa / 2) / d)) < 1e-13);
        CHECK(std::abs(t(0, 1) - kappa * eps / d) < 1e-13);
    }
}

TEST_CASE("realizations of physical systems are doubled-up and J-unitary on the axis") {
    for (std::uint64_t seed = 1; seed <= 25; ++seed) {
        const int modes = 1 + static_cast<int>(seed % 3), ports = 1 + static_cast<int>(seed % 2);
        const RationalTF tf = random_finite_system(seed, modes, ports, 0.2);
        CHECK(tf.realization().doubled_up_residual(1e-10).ok);
        for (double w : {-3.0, -0.4, 0.0, 0.9, 7.0}) {
            const Mat t = tf.eval(cplx(0.0, w));
            CHECK(is_j_unitary(t).value < 1e-10);
            CHECK(doubled_up_pair_residual(t, tf.eval(cplx(0.0, -w))) < 1e-10);
        }
    }
}

TEST_CASE("pole guard") {
    const RationalTF tf(slh_to_statespace(cavity(2.0)));
    CHECK(tf.near_pole(cplx(-1.0, 0.0)));
    CHECK_THROWS_AS(tf.eval(cplx(-1.0, 0.0)), PoleProximityError);
    CHECK_NOTHROW(tf.eval(cplx(-1.0, 1e-3)));
}

TEST_CASE("inverse, series and concat") {
    const RationalTF a = random_finite_system(11, 2, 1);
    const RationalTF b = random_finite_system(12, 1, 1);
    const RationalTF ai = inverse(a);
    const RationalTF ab = series(a, b);
    const RationalTF c = concat(a, b);
    for (cplx z : kSamples) {
        CHECK(norm2(a.eval(z) * ai.eval(z) - Mat::Identity(2, 2)) < 1e-12);
        CHECK(norm2(ab.eval(z) - b.eval(z) * a.eval(z)) < 1e-12);
        const Mat cz = c.eval(z);
        CHECK(norm2(cz.topLeftCorner(2, 2) - a.eval(z)) < 1e-13);
        CHECK(norm2(cz.bottomRightCorner(2, 2) - b.eval(z)) < 1e-13);
        CHECK(norm2(cz.topRightCorner(2, 2)) < 1e-15);
    }
    CHECK_THROWS_AS(series(a, random_finite_system(3, 1, 2)), DimensionError);
}

TEST_CASE("feedback matches the Redheffer formula pointwise") {
    for (std::uint64_t seed = 1; seed <= 10; ++seed) {
        const RationalTF t = random_finite_system(100 + seed, 2, 2);
        const RationalTF f = feedback(t, 2);
        for (cplx z : kSamples) {
            const Mat m = t.eval(z);
            const Mat t1 = m.topLeftCorner(2, 2), t2 = m.topRightCorner(2, 2);
            const Mat t3 = m.bottomLeftCorner(2, 2), t4 = m.bottomRightCorner(2, 2);
            const Mat expect = t1 + t2 * (Mat::Identity(2, 2) - t4).partialPivLu().solve(t3);
            CHECK(norm2(f.eval(z) - expect) < 1e-10);
        }
    }
    CHECK_THROWS_AS(feedback(random_finite_system(1, 1, 2), 5), DimensionError);
}

TEST_CASE("input dressing multiplies the internal columns") {
    const RationalTF t = random_finite_system(5, 1, 2);
    Mat phase = Mat::Identity(4, 4);
    phase(2, 2) = std::polar(1.0, 0.3);
    phase(3, 3) = std::polar(1.0, -0.3);
    const RationalTF d = with_input_dressing(t, phase);
    for (cplx z : kSamples) CHECK(norm2(d.eval(z) - t.eval(z) * phase) < 1e-13);
}

TEST_CASE("limit at infinity is the feedthrough") {
    const RationalTF t = random_finite_system(9, 3, 2);
    const auto lim = limit_at_infinity(t);
    CHECK(norm2(lim.S - t.realization().D) == 0.0);
    CHECK(lim.deviation < 1e-6);
}

TEST_CASE("opposite eigenvalue pairs are reported") {
    StateSpaceModel ss;
    ss.A = Mat::Zero(2, 2);
    ss.A.diagonal() << 1.0, -1.0;
    ss.B = Mat::Identity(2, 2);
    ss.C = Mat::Identity(2, 2);
    ss.D = Mat::Identity(2, 2);
    const auto pairs = opposite_eigenvalue_pairs(RationalTF(ss));
    REQUIRE(pairs.size() == 1);
    CHECK(pairs[0] == std::pair<int, int>{0, 1});
    CHECK(opposite_eigenvalue_pairs(RationalTF(slh_to_statespace(cavity(1.0)))).empty());
}

TEST_CASE("SLH validation") {
    SLHModel m = cavity(1.0);
    m.S(0, 0) = 2.0;
    CHECK_THROWS_AS(slh_to_statespace(m), Error);
    m = cavity(1.0);
    m.L_minus = Mat::Zero(2, 1);
    CHECK_THROWS_AS(slh_to_statespace(m), DimensionError);
}
