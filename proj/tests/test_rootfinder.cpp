#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "qcascade/errors.hpp"
#include "qcascade/networks.hpp"
#include "qcascade/rootfinder.hpp"

#include <numbers>

using namespace qc;

namespace {

constexpr double kPi = std::numbers::pi;
const double kB = -0.25 * std::log(1.0 - 0.36);

int multiplicity_sum(const std::vector<ZeroPoleRecord>& r) {
    int s = 0;
    for (const auto& x : r) s += x.multiplicity;
    return s;
}

}  // namespace

TEST_CASE("argument principle on polynomials and sin") {
    const ScalarFn p = [](cplx z) { return (z - 1.0) * (z - cplx(0, 2)) * (z - cplx(0, 2)); };
    CHECK(count_in_rectangle(p, Rect{-3, 3, -3, 3}).winding == 3);
    CHECK(count_in_rectangle(p, Rect{-3, 3, 1, 3}).winding == 2);
    CHECK(count_in_rectangle(p, Rect{0.5, 3, -1, 1}).winding == 1);
    CHECK(count_on_circle(p, cplx(0, 2), 0.1) == 2);
    const ScalarFn s = [](cplx z) { return std::sin(z); };
    CHECK(count_in_rectangle(s, Rect{-0.5, 7.0, -1.0, 1.0}).winding == 3);
    CHECK(count_in_rectangle(s, Rect{-0.5, 40.0, -2.0, 2.0}, 1.0).winding == 13);
}

TEST_CASE("a root on the contour is reported") {
    const ScalarFn p = [](cplx z) { return z - 1.0; };
    CHECK_THROWS_AS(count_in_rectangle(p, Rect{1.0, 2.0, -1.0, 1.0}), NearBoundaryError);
}

TEST_CASE("find_roots recovers positions and multiplicities") {
    const FormFn p = [](cplx z, LoopForm) {
        return (z - 1.0) * (z - cplx(0.3, 2)) * (z - cplx(0.3, 2)) * (z + cplx(0.5, 0.25));
    };
    const auto roots = find_roots(p, Rect{-2.1, 2.3, -2.7, 2.9});
    REQUIRE(roots.size() == 3);
    int total = 0;
    for (const auto& r : roots) {
        total += r.multiplicity;
        if (r.multiplicity == 2) CHECK(std::abs(r.position - cplx(0.3, 2)) < 1e-8);
        else CHECK((std::abs(r.position - 1.0) < 1e-12 || std::abs(r.position + cplx(0.5, 0.25)) < 1e-12));
    }
    CHECK(total == 4);
}

TEST_CASE("example poles: two real squeezer poles and a double loop ladder") {
    const DelayNetwork n = example_network();
    const auto st = compute_strip(n);
    const Rect window{st.search_re_lo, st.search_re_hi, -7.3, 7.3};
    Rect scanned;
    const auto poles = subdivide_and_refine(n, window, RootKind::pole, Which::exact, {}, &scanned);
    CHECK(multiplicity_sum(poles) == winding_number(n, scanned, RootKind::pole));
    int ladder = 0;
    bool f3 = false, f7 = false;
    for (const auto& r : poles) {
        if (std::abs(r.position + 0.3) < 1e-8) f3 = true;
        if (std::abs(r.position + 0.7) < 1e-8) f7 = true;
        const double n_level = r.position.imag() / kPi;
        if (std::abs(r.position.real() + kB) < 1e-8 && std::abs(n_level - std::round(n_level)) < 1e-8) {
            CHECK(r.multiplicity == 2);
            CHECK(r.degenerate);
            ++ladder;
        }
    }
    CHECK(f3);
    CHECK(f7);
    CHECK(ladder == 5);  // n = -2..2
}

TEST_CASE("zeros mirror the poles of a physical network") {
    const DelayNetwork n = random_network(8);
    const auto st = compute_strip(n);
    const Rect window{st.search_re_lo, st.search_re_hi, -9.0, 9.0};
    auto zeros = subdivide_and_refine(n, window, RootKind::zero, Which::exact);
    auto poles = subdivide_and_refine(n, window, RootKind::pole, Which::exact);
    REQUIRE(zeros.size() == poles.size());
    for (const auto& z : zeros) {
        CHECK(z.position.real() > 0.0);
        double best = 1e300;
        for (const auto& p : poles) best = std::min(best, std::abs(p.position + std::conj(z.position)));
        CHECK(best < 1e-8);
    }
    std::vector<ZeroPoleRecord> all = zeros;
    all.insert(all.end(), poles.begin(), poles.end());
    CHECK_NOTHROW(pair_records(all));
    for (const auto& r : all) {
        CHECK(r.partner_neg_conj >= 0);
        CHECK(r.partner_conj >= 0);
    }
    all.pop_back();
    CHECK_THROWS_AS(pair_records(all), NumericalFailure);
}

TEST_CASE("eigenvector of a simple zero is a null vector") {
    const DelayNetwork n = random_network(12);
    const auto st = compute_strip(n);
    const auto zeros = subdivide_and_refine(n, Rect{st.search_re_lo, st.search_re_hi, -4.0, 4.0}, RootKind::zero,
                                            Which::exact);
    REQUIRE(!zeros.empty());
    for (const auto& z : zeros) {
        CHECK(z.multiplicity == 1);
        CHECK_FALSE(z.degenerate);
        CHECK(z.residual < 1e-9);
        const Mat t = n.closed_tf(z.position);
        CHECK((t * z.eigenvector).norm() < 1e-8 * norm2(t));
        CHECK(std::abs(z.eigenvector.norm() - 1.0) < 1e-12);
    }
}

TEST_CASE("rational zeros of a cavity") {
    SLHModel m;
    m.S = Mat::Identity(1, 1);
    m.L_minus = Mat::Constant(1, 1, 1.0);
    m.L_plus = Mat::Zero(1, 1);
    m.omega = Mat::Constant(1, 1, 0.4);
    m.eps = Mat::Zero(1, 1);
    const RationalTF tf(slh_to_statespace(m));
    const auto z = rational_zero_records(tf);
    REQUIRE(z.size() == 2);
    CHECK(std::abs(z[0].position - cplx(0.5, -0.4)) < 1e-12);
    CHECK(std::abs(z[1].position - cplx(0.5, 0.4)) < 1e-12);
    for (const auto& r : z) CHECK((tf.eval(r.position) * r.eigenvector).norm() < 1e-10);
}

TEST_CASE("static and exact zeros approach each other along the ladder") {
    const DelayNetwork n = random_network(5);
    const auto st = compute_strip(n);
    double prev = 1e300;
    for (double m : {20.0, 40.0, 80.0}) {
        const Rect w{st.search_re_lo, st.search_re_hi, m - 3.5, m + 3.5};
        const auto ex = subdivide_and_refine(n, w, RootKind::zero, Which::exact);
        const auto sz = subdivide_and_refine(n, w, RootKind::zero, Which::static_surrogate);
        REQUIRE(ex.size() == sz.size());
        double eps = 0.0;
        for (const auto& s : sz) {
            double best = 1e300;
            for (const auto& e : ex) best = std::min(best, std::abs(e.position - s.position));
            eps = std::max(eps, best);
        }
        CHECK(eps < prev);
        CHECK(eps * m < 5.0);
        prev = eps;
    }
}
