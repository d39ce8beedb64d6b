#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "qcascade/errors.hpp"
#include "qcascade/networks.hpp"

#include <numbers>

using namespace qc;

namespace {

constexpr double kPi = std::numbers::pi;
const double kB = -0.25 * std::log(1.0 - 0.36);  // loop pole offset of the example

}  // namespace

TEST_CASE("example closed loop equals sinh ratio times the bare squeezer") {
    const ExampleParams p;
    const DelayNetwork n = example_network(p);
    double worst = 0.0;
    for (double x : {-0.9, -0.05, 0.02, 0.4, 1.3}) {
        for (double y : {-9.3, -2.0, 0.0, 0.7, 5.5}) {
            const cplx z(x, y);
            const Mat expect = example_loop_scalar(p, z) * example_squeezer_tf(p, z);
            const Mat t = n.closed_tf(z);
            worst = std::max(worst, norm2(t.topLeftCorner(1, 1) - expect.topLeftCorner(1, 1)) / norm2(expect));
            worst = std::max(worst, norm2(t - expect) / norm2(expect));
        }
    }
    CHECK(worst < 1e-12);
}

TEST_CASE("both loop forms give the same transfer function away from poles") {
    const DelayNetwork n = random_network(4);
    for (cplx z : {cplx(0.3, 1.0), cplx(-0.4, -2.2), cplx(1.1, 0.4)}) {
        const Mat a = n.closed_tf(z, LoopForm::positive);
        const Mat b = n.closed_tf(z, LoopForm::negative);
        CHECK(norm2(a - b) / norm2(a) < 1e-10);
    }
}

TEST_CASE("closed loop of a physical network is J-unitary and doubled-up on the axis") {
    for (std::uint64_t seed = 1; seed <= 20; ++seed) {
        RandomNetworkOptions opt;
        opt.ports = 1 + static_cast<int>(seed % 2);
        opt.modes = 1 + static_cast<int>(seed % 2);
        const DelayNetwork n = random_network(seed, opt);
        for (double w : {-11.0, -1.3, 0.0, 0.6, 4.2}) {
            const Mat t = n.closed_tf(cplx(0.0, w));
            CHECK(is_j_unitary(t).value < 1e-9);
            CHECK(doubled_up_pair_residual(t, n.closed_tf(cplx(0.0, -w))) < 1e-9);
        }
    }
}

TEST_CASE("vanishing delay recovers the delay-free feedback product") {
    const DelayNetwork base = random_network(21);
    const RationalTF fb = feedback(base.open_tf(), base.ext_dim());
    double prev = 1e300;
    for (double tau : {1e-3, 1e-5, 1e-7}) {
        const DelayNetwork n(base.open_tf(), base.external_ports(), DelaySpec{{tau}, tau});
        double dev = 0.0;
        for (cplx z : {cplx(0.0, 0.5), cplx(0.2, -1.0), cplx(-0.1, 2.0)}) {
            dev = std::max(dev, norm2(n.closed_tf(z) - fb.eval(z)));
        }
        CHECK(dev < prev);
        prev = dev;
    }
    CHECK(prev < 1e-6);
}

TEST_CASE("static surrogate is periodic and approaches the exact loop at large |z|") {
    const DelayNetwork n = example_network();
    const double per = n.delays().period();
    CHECK(per == doctest::Approx(kPi));
    for (cplx z : {cplx(0.3, 0.2), cplx(-0.6, 1.4)}) {
        CHECK(norm2(n.static_tf(z) - n.static_tf(z + cplx(0.0, per))) < 1e-12);
    }
    double prev = 1e300;
    for (double r : {1e2, 1e3, 1e4}) {
        const cplx z(0.2, r);
        const double d = norm2(n.closed_tf(z) - n.static_tf(z));
        CHECK(d * r < 5.0);
        CHECK(d < prev);
        prev = d;
    }
}

TEST_CASE("delay operator and period") {
    const DelaySpec d{{2.0, 4.0}, 2.0};
    CHECK(d.multiples() == std::vector<int>{1, 2});
    CHECK(d.min_delay() == 2.0);
    const Mat e = delay_operator(d, cplx(0.1, 0.3));
    CHECK(std::abs(e(0, 0) - std::exp(-cplx(0.1, 0.3) * 2.0)) < 1e-15);
    CHECK(std::abs(e(3, 3) - std::exp(-cplx(0.1, 0.3) * 4.0)) < 1e-15);
    CHECK_THROWS_AS(DelaySpec({{2.0, 2.0 * std::numbers::sqrt2}, 2.0}).multiples(), AssumptionViolation);
}

TEST_CASE("example static loop roots form a double ladder at -b + i pi n") {
    const DelayNetwork n = example_network();
    const auto w = static_loop_roots_w(n);
    REQUIRE(w.size() == 2);
    for (cplx r : w) CHECK(std::abs(r - std::exp(2.0 * kB)) < 1e-12);
    const auto poles = static_poles_in_window(n, -0.1, 3.5);
    REQUIRE(poles.size() == 4);
    CHECK(std::abs(poles[0] - cplx(-kB, 0.0)) < 1e-12);
    CHECK(std::abs(poles[3] - cplx(-kB, kPi)) < 1e-12);
}

TEST_CASE("determinant targets vanish at the known poles and zeros") {
    const DelayNetwork n = example_network();
    const double scale = std::abs(n.pole_target(cplx(0.0, 0.3), LoopForm::negative));
    for (cplx p : {cplx(-0.3, 0.0), cplx(-0.7, 0.0), cplx(-kB, kPi)}) {
        CHECK(std::abs(n.pole_target(p, LoopForm::negative)) < 1e-10 * scale);
        CHECK(std::abs(n.zero_target(-std::conj(p), LoopForm::positive)) < 1e-10 * scale);
    }
    CHECK(std::abs(n.loop_determinant(cplx(-kB, 2.0 * kPi), Which::static_surrogate)) < 1e-12);
    CHECK_THROWS_AS(n.closed_tf(cplx(-0.3, 0.0)), PoleProximityError);
}

TEST_CASE("search strip covers every pole of the example") {
    const auto st = compute_strip(example_network());
    CHECK(st.search_re_lo < -0.7);
    CHECK(st.search_re_hi > 0.7);
    CHECK(st.c_low <= -kB);
    CHECK(st.raw_low <= st.raw_high);
}

TEST_CASE("assumption report of the example flags only multiplicity") {
    const auto rep = validate_assumptions(example_network());
    for (const auto& c : rep.checks) {
        CAPTURE(c.name);
        if (c.name == "simple") {
            CHECK(c.status == CheckStatus::fail);
        } else {
            CHECK(c.status != CheckStatus::fail);
        }
    }
    CHECK_FALSE(rep.all_pass());
    REQUIRE(rep.first_failure() != nullptr);
    CHECK(rep.first_failure()->name == "simple");
}

TEST_CASE("loop through the squeezer with a phase is simple") {
    ExampleParams p;
    p.loop_through_squeezer = true;
    p.loop_phase = 0.5;
    CHECK(validate_assumptions(example_network(p)).all_pass());
    CHECK(validate_assumptions(random_network(3)).all_pass());
}

TEST_CASE("a lossless internal loop violates properness") {
    SLHModel m = example_slh();
    m.S << 0.0, 1.0, 1.0, 0.0;
    m.L_minus << 1.0, 0.0;
    const DelayNetwork n(RationalTF(slh_to_statespace(m)), 1, DelaySpec{{1.0}, 1.0});
    const auto rep = validate_assumptions(n);
    REQUIRE(rep.first_failure() != nullptr);
    CHECK(rep.first_failure()->name == "proper");
    CHECK_THROWS_AS(compute_strip(n), AssumptionViolation);
}
