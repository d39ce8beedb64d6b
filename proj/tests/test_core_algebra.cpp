#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "qcascade/core_algebra.hpp"
#include "qcascade/errors.hpp"

using namespace qc;

TEST_CASE("signature and sigma are involutions") {
    for (int dim : {2, 4, 6}) {
        CHECK(norm2(signature(dim) * signature(dim) - Mat::Identity(dim, dim)) == 0.0);
        CHECK(norm2(sigma(dim) * sigma(dim) - Mat::Identity(dim, dim)) == 0.0);
        CHECK(norm2(to_block(signature(dim)) - signature_block(dim)) == 0.0);
        CHECK(norm2(to_block(sigma(dim)) - sigma_block(dim)) == 0.0);
    }
    CHECK_THROWS_AS(signature(3), DimensionError);
    CHECK_THROWS_AS(sigma(0), DimensionError);
}

TEST_CASE("doubled places conjugated blocks in the odd rows") {
    Mat m(1, 1), p(1, 1);
    m << cplx(1, 2);
    p << cplx(3, -1);
    const Mat d = doubled(m, p);
    CHECK(d(0, 0) == cplx(1, 2));
    CHECK(d(0, 1) == cplx(3, -1));
    CHECK(d(1, 0) == cplx(3, 1));
    CHECK(d(1, 1) == cplx(1, -2));
    CHECK(is_doubled_up(d).ok);
    CHECK_THROWS_AS(doubled(Mat::Zero(1, 1), Mat::Zero(2, 2)), DimensionError);
}

TEST_CASE("layouts agree after permutation") {
    const Mat m = Mat::Random(2, 3), p = Mat::Random(2, 3);
    const Mat a = doubled(m, p, Layout::interleaved);
    const Mat b = doubled(m, p, Layout::block);
    CHECK(norm2(port_permutation(4) * b * port_permutation(6).adjoint() - a) < 1e-15);
    CHECK(is_doubled_up(b, 1e-12, Layout::block).ok);
}

TEST_CASE("identity and a beamsplitter are J-unitary") {
    CHECK(is_j_unitary(Mat::Identity(4, 4)).ok);
    const double c = 0.8, s = 0.6;
    Mat u(2, 2);
    u << c, s, -s, c;
    const Mat bs = doubled(u, Mat::Zero(2, 2));
    CHECK(is_j_unitary(bs).value < 1e-15);
    CHECK(is_doubled_up(bs).value < 1e-15);
}

TEST_CASE("single-mode squeezer is J-unitary but not unitary") {
    const double r = 0.7;
    Mat m(1, 1), p(1, 1);
    m << std::cosh(r);
    p << std::sinh(r);
    const Mat sq = doubled(m, p);
    CHECK(is_j_unitary(sq).value < 1e-14);
    CHECK(norm2(sq.adjoint() * sq - Mat::Identity(2, 2)) > 0.5);
}

TEST_CASE("flat is the J-adjoint and inverts J-unitary matrices") {
    const Mat x = Mat::Random(4, 2);
    CHECK(norm2(flat(flat(x)) - x) < 1e-15);
    for (std::uint64_t seed = 1; seed <= 20; ++seed) {
        const Mat u = random_j_unitary_doubled_up(2, seed);
        CHECK(norm2(flat(u) * u - Mat::Identity(4, 4)) < 1e-12);
    }
}

TEST_CASE("random J-unitary doubled-up matrices satisfy both invariants") {
    for (std::uint64_t seed = 1; seed <= 50; ++seed) {
        const int n = 1 + static_cast<int>(seed % 3);
        const Mat u = random_j_unitary_doubled_up(n, seed, 0.8);
        CHECK(is_j_unitary(u, 1e-10).ok);
        CHECK(is_doubled_up(u, 1e-10).ok);
    }
    CHECK(norm2(random_j_unitary_doubled_up(2, 7) - random_j_unitary_doubled_up(2, 7)) == 0.0);
}

TEST_CASE("DoubledUpMatrix refuses mixed layouts and converts on request") {
    const Mat u = random_j_unitary_doubled_up(2, 3);
    const DoubledUpMatrix a(u, Layout::interleaved);
    const DoubledUpMatrix b = a.in(Layout::block);
    CHECK_THROWS_AS(a * b, DimensionError);
    const DoubledUpMatrix ab = a * b.in(Layout::interleaved);
    CHECK(norm2(ab.data() - u * u) < 1e-14);
    CHECK(b.check().ok);
}

TEST_CASE("indefinite completion keeps the given columns") {
    for (std::uint64_t seed = 1; seed <= 20; ++seed) {
        const Mat u = random_j_unitary_doubled_up(2, seed);
        const Mat w = u.leftCols(2);
        const Mat full = indefinite_complete(w);
        CHECK(norm2(full.leftCols(2) - w) < 1e-12);
        CHECK(is_j_unitary(full, 1e-9).ok);
    }
    Mat null(2, 1);
    null << 1.0, 1.0;
    CHECK_THROWS_AS(indefinite_complete(null), DegeneracyError);
}

TEST_CASE("norm helpers") {
    Mat d = Mat::Zero(3, 3);
    d.diagonal() << 3.0, 2.0, 0.5;
    CHECK(norm2(d) == doctest::Approx(3.0));
    CHECK(sigma_min(d) == doctest::Approx(0.5));
}

TEST_CASE("pair residual detects a function that is not doubled-up") {
    const Mat u = random_j_unitary_doubled_up(1, 4);
    CHECK(doubled_up_pair_residual(u, u) < 1e-15);
    Mat bad = u;
    bad(1, 1) += 0.1;
    CHECK(doubled_up_pair_residual(bad, u) > 0.05);
    CHECK_THROWS_AS(doubled_up_pair_residual(u, Mat::Identity(4, 4)), DimensionError);
}
