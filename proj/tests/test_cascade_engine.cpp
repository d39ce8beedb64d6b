#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "qcascade/cascade_engine.hpp"
#include "qcascade/errors.hpp"
#include "qcascade/networks.hpp"

#include <cmath>
#include <numbers>

using namespace qc;

namespace {

constexpr double kPi = std::numbers::pi;

double product_error(const CascadeResult& r, const MatrixFn& t, const std::vector<cplx>& pts) {
    double e = 0.0;
    for (cplx z : pts) e = std::max(e, norm2(t(z) - r.eval(z)) / norm2(t(z)));
    return e;
}

const std::vector<cplx> kPts = {{0.0, 0.4}, {0.0, -2.3}, {0.3, 1.1}, {-0.2, 5.0}, {1.7, -0.6}};

}  // namespace

TEST_CASE("finite systems factor completely with a constant remainder") {
    for (std::uint64_t seed = 1; seed <= 15; ++seed) {
        const int modes = 1 + static_cast<int>(seed % 3);
        const RationalTF tf = random_finite_system(seed, modes, 1 + static_cast<int>(seed % 2), 0.3);
        const CascadeResult r = factorize_rational(tf);
        int zeros = 0;
        for (const auto& f : r.factors) zeros += static_cast<int>(f.zeros().size());
        CHECK(zeros == 2 * modes);
        CHECK(is_j_unitary(r.B, 1e-8).ok);
        CHECK(is_doubled_up(r.B, 1e-8).ok);
        CHECK(r.B_dispersion < 1e-8);
        const MatrixFn t = [&tf](cplx z) { return tf.eval(z); };
        for (cplx z : kPts) CHECK(norm2(CascadeResult::remainder(t, r.factors, z) - r.B) < 1e-7);
        CHECK(product_error(r, t, kPts) < 1e-8);
    }
}

TEST_CASE("conjugated factors move the prefactor to the right") {
    const RationalTF tf = random_finite_system(4, 2, 2, 0.2);
    const CascadeResult r = factorize_rational(tf);
    const auto pc = r.conjugated_factors();
    for (cplx z : kPts) {
        Mat prod = r.B;
        for (const auto& f : pc) prod = f.eval(z) * prod;
        CHECK(norm2(prod - tf.eval(z)) < 1e-8);
    }
}

TEST_CASE("sinh oracle: truncated ladder converges to the closed form") {
    const cplx zm(0.2, 0.9);
    double prev = 1e300;
    for (int N : {250, 500, 1000, 2000}) {
        const auto o = static_sinh_oracle(zm, kPi, cplx(0.1, 0.5), N);
        const double e = std::abs(o.truncated - o.closed);
        CHECK(e < prev + 1e-12);
        prev = e;
    }
    CHECK(prev < 1e-3);
    CHECK_THROWS_AS(static_sinh_oracle(cplx(0.2, kPi / 2), kPi, 0.0, 10), Error);
}

TEST_CASE("static surrogate of the example factors exactly") {
    const DelayNetwork n = example_network();
    const CascadeResult r = static_factorize(n);
    const MatrixFn s = [&n](cplx z) { return n.static_tf(z); };
    CHECK(relative_error_on_axis(s, [&r](cplx z) { return r.eval(z); }, 2 * kPi) < 1e-12);
    CHECK(is_j_unitary(r.B, 1e-10).ok);
}

TEST_CASE("plan of the example: inner squeezer pair then the double ladder") {
    const DelayNetwork n = example_network();
    const auto st = compute_strip(n);
    const Rect w{st.search_re_lo, st.search_re_hi, -7.0, 7.0};
    const auto ex = subdivide_and_refine(n, w, RootKind::zero, Which::exact);
    const auto sz = subdivide_and_refine(n, w, RootKind::zero, Which::static_surrogate);
    const auto plan = plan_order(ex, sz, kPi, 0.5);
    REQUIRE(plan.ladders.size() == 1);
    CHECK(plan.ladders[0].self_conjugate);
    CHECK(std::abs(plan.ladders[0].base - cplx(-0.25 * std::log(1.0 - 0.36), 0.0)) < 1e-8);
    bool has_squeezer_pair = false;
    for (const auto& e : plan.inner) {
        if (e.kind == EntryKind::real_pair && std::abs(e.z.real() + e.z2 - 1.0) < 1e-8) has_squeezer_pair = true;
    }
    CHECK(has_squeezer_pair);
}

TEST_CASE("example cascade with tail closure reproduces the closed loop") {
    FactorizeOptions opt;
    opt.truncation = 3;
    opt.tail_closure = true;
    const DelayNetwork n = example_network();
    const Pipeline p = run_pipeline(n, opt);
    const CascadeResult& r = p.result;
    CHECK(is_j_unitary(r.B, 1e-8).ok);
    CHECK(is_doubled_up(r.B, 1e-8).ok);
    CHECK(r.B_dispersion < 1e-6);
    const MatrixFn t = [&n](cplx z) { return n.closed_tf(z); };
    CHECK(relative_error_on_axis(t, [&r](cplx z) { return r.eval(z); }, 2 * kPi) < 1e-6);
    for (const auto& d : r.diagnostics) {
        CAPTURE(d.index);
        CHECK(d.report.removable);
    }
}

TEST_CASE("truncated cascade error shrinks as levels are added") {
    FactorizeOptions opt;
    opt.truncation = 4;
    const DelayNetwork n = example_network();
    const Pipeline p = run_pipeline(n, opt);
    const auto prof = residual_profile(p.network, n, p.plan, p.exact_zeros, opt, {1, 2, 4}, 2 * kPi);
    REQUIRE(prof.size() == 3);
    CHECK(prof[1].error <= prof[0].error);
    CHECK(prof[2].error <= prof[1].error);
    CHECK(prof[2].factors > prof[0].factors);
}

TEST_CASE("random networks: factors are structural and the tail-closed error falls with the truncation") {
    for (std::uint64_t seed = 1; seed <= 8; ++seed) {
        CAPTURE(seed);
        const DelayNetwork n = random_network(seed);
        const MatrixFn t = [&n](cplx z) { return n.closed_tf(z); };
        std::vector<double> err;
        for (int K : {2, 4}) {
            FactorizeOptions opt;
            opt.truncation = K;
            opt.tail_closure = true;
            const Pipeline p = run_pipeline(n, opt);
            const CascadeResult& r = p.result;
            for (const auto& f : r.factors) {
                for (double w : {-4.0, 0.0, 1.3}) {
                    CHECK(is_j_unitary(f.eval(cplx(0.0, w))).value < 1e-8);
                    CHECK(doubled_up_pair_residual(f.eval(cplx(0.0, w)), f.eval(cplx(0.0, -w))) < 1e-8);
                }
            }
            CHECK(is_doubled_up(r.B, 1e-8).ok);
            err.push_back(relative_error_on_axis(t, [&r](cplx z) { return r.eval(z); }, 2 * n.delays().period()));
        }
        CHECK(err[1] < 0.25 * err[0]);
        CHECK(err[1] < 1e-2);
    }
}

TEST_CASE("detaching a factor that does not match the function is refused") {
    const RationalTF tf = random_finite_system(2, 1, 1);
    const MatrixFn t = [&tf](cplx z) { return tf.eval_unchecked(z); };
    Vec v(2);
    v << 1.0, 0.2;
    const auto wrong = build_complex_factor(cplx(0.8, 2.0), v);
    const auto d = detach(t, wrong);
    CHECK_FALSE(d.report.removable);
    const auto zeros = rational_zero_records(tf);
    REQUIRE(!zeros.empty());
}

TEST_CASE("a nearly J-neutral eigenvector still detaches cleanly") {
    // zeros at 0.378 +- 0.542i carry x^dagger J x ~ 7e-3, so the remainder is badly conditioned
    const RationalTF tf = random_finite_system(7039, 2, 2, 0.3);
    const CascadeResult r = factorize_rational(tf);
    CHECK(r.factors.size() == 2);
    const MatrixFn t = [&tf](cplx z) { return tf.eval(z); };
    for (cplx z : kPts) CHECK(norm2(CascadeResult::remainder(t, r.factors, z) - r.B) < 1e-7);
    for (const auto& d : r.diagnostics) CHECK(d.report.det_gap < 0.1);
}

TEST_CASE("detaching one direction of a double zero leaves the remainder singular") {
    const DelayNetwork n = example_network();
    const double b = -0.25 * std::log(1.0 - 0.36);
    const cplx z0(b, kPi);
    REQUIRE(norm2(n.closed_tf(z0)) < 1e-10);
    Vec v = Vec::Zero(2);
    v(0) = 1.0;
    const MatrixFn t = [&n](cplx z) { return n.closed_tf(z); };
    const auto d = detach(t, build_complex_factor(z0, v));
    CHECK_FALSE(d.report.removable);
    CHECK(d.report.det_gap == doctest::Approx(std::log(10.0)).epsilon(0.05));
}

TEST_CASE("axis error helper") {
    const MatrixFn id = [](cplx) { return Mat::Identity(2, 2); };
    CHECK(relative_error_on_axis(id, id, 3.0) == 0.0);
    const MatrixFn half = [](cplx) { return Mat(0.5 * Mat::Identity(2, 2)); };
    CHECK(relative_error_on_axis(id, half, 3.0) == doctest::Approx(0.5));
}
