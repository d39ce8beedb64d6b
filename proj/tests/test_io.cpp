#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "qcascade/errors.hpp"
#include "qcascade/io.hpp"
#include "qcascade/networks.hpp"

#include <filesystem>
#include <numbers>

using namespace qc;
using io::json;

namespace {

std::filesystem::path scratch(const std::string& name) {
    auto p = std::filesystem::temp_directory_path() / ("qcascade_test_io_" + name);
    std::filesystem::remove_all(p);
    return p;
}

}  // namespace

TEST_CASE("complex numbers and matrices round-trip") {
    const cplx z(1.25, -3.5e-17);
    CHECK(io::cplx_from_json(io::to_json(z)) == z);
    const Mat m = Mat::Random(3, 2);
    const Mat back = io::mat_from_json(json::parse(io::to_json(m).dump()));
    CHECK(back.rows() == 3);
    CHECK(norm2(back - m) == 0.0);
    CHECK_THROWS(io::mat_from_json(json{{"rows", 2}, {"cols", 2}, {"data", json::array()}}));
}

TEST_CASE("networks round-trip through JSON") {
    for (const DelayNetwork& n : {example_network(), random_network(9)}) {
        const DelayNetwork back = io::network_from_json(json::parse(io::network_to_json(n).dump()));
        CHECK(back.external_ports() == n.external_ports());
        CHECK(back.delays().delays == n.delays().delays);
        for (cplx z : {cplx(0.0, 0.4), cplx(0.3, -2.0)}) CHECK(norm2(back.closed_tf(z) - n.closed_tf(z)) < 1e-13);
    }
}

TEST_CASE("SLH description with a loop phase") {
    const json j = {{"open", {{"slh", io::to_json(example_slh())}}},
                    {"external_ports", 1},
                    {"delays", {2.0}},
                    {"base_period", 2.0},
                    {"input_phase", 0.5}};
    const DelayNetwork n = io::network_from_json(j);
    ExampleParams p;
    p.loop_phase = 0.5;
    const DelayNetwork ref = example_network(p);
    CHECK(norm2(n.closed_tf(cplx(0.1, 0.9)) - ref.closed_tf(cplx(0.1, 0.9))) < 1e-13);
    CHECK_THROWS_AS(io::network_from_json(json{{"open", json::object()}, {"external_ports", 1}}), Error);
}

TEST_CASE("cascade results round-trip") {
    FactorizeOptions opt;
    opt.tail_closure = true;
    const Pipeline p = run_pipeline(example_network(), opt);
    const CascadeResult back = io::cascade_from_json(json::parse(io::to_json(p.result).dump()));
    REQUIRE(back.factors.size() == p.result.factors.size());
    for (size_t i = 0; i < back.factors.size(); ++i) CHECK(back.factors[i].variant == p.result.factors[i].variant);
    for (cplx z : {cplx(0.0, 1.0), cplx(0.2, -3.0)}) CHECK(norm2(back.eval(z) - p.result.eval(z)) < 1e-12);
    CHECK(back.B_dispersion == p.result.B_dispersion);
}

TEST_CASE("factor JSON carries the SLH parameters of physical factors") {
    Vec v(2);
    v << 1.0, 0.3;
    const auto f = build_complex_factor(cplx(0.4, 1.0), v);
    const json j = io::to_json(f);
    REQUIRE(j.contains("slh"));
    CHECK(j["slh"]["kappa"].get<double>() == doctest::Approx(0.8));
}

TEST_CASE("records CSV") {
    ZeroPoleRecord r;
    r.position = cplx(-0.3, 0.0);
    r.kind = RootKind::pole;
    const std::string csv = io::records_csv({r});
    CHECK(csv.rfind("kind,which,re,im,multiplicity,residual,degenerate\n", 0) == 0);
    CHECK(csv.find("pole,exact,-0.29999999999999999,0,1,") != std::string::npos);
}

TEST_CASE("identity network samples have zero error") {
    // Memoryless network whose external port bypasses the loop.
    StateSpaceModel ss;
    ss.A = Mat(0, 0);
    ss.B = Mat(0, 4);
    ss.C = Mat(4, 0);
    ss.D = Mat::Identity(4, 4);
    ss.D.bottomRightCorner(2, 2) *= 0.5;
    const DelayNetwork n(RationalTF(ss), 1, DelaySpec{{1.0}, 1.0});
    CascadeResult r;
    r.B = Mat::Identity(2, 2);
    r.B_origin = r.B;
    std::vector<double> grid;
    for (int i = 0; i <= 20; ++i) grid.push_back(-5.0 + 0.5 * i);
    const std::string csv = io::tf_samples_csv(r, n, grid);
    std::istringstream in(csv);
    std::string line;
    std::getline(in, line);
    int rows = 0;
    while (std::getline(in, line)) {
        std::vector<double> cols;
        std::stringstream ls(line);
        std::string cell;
        while (std::getline(ls, cell, ',')) cols.push_back(std::stod(cell));
        REQUIRE(cols.size() == 12);
        CHECK(cols[9] <= 1e-12);
        ++rows;
    }
    CHECK(rows == 21);
}

TEST_CASE("grid points at a pole are skipped") {
    StateSpaceModel ss;
    ss.A = Mat::Zero(2, 2);
    ss.A(0, 0) = cplx(0.0, 1.0);
    ss.A(1, 1) = cplx(0.0, -1.0);
    ss.B = Mat::Identity(2, 4);
    ss.C = Mat::Identity(4, 2);
    ss.D = Mat::Identity(4, 4);
    ss.D.bottomRightCorner(2, 2) *= 0.5;
    const DelayNetwork n(RationalTF(ss), 1, DelaySpec{{1.0}, 1.0});
    CascadeResult r;
    r.B = Mat::Identity(2, 2);
    r.B_origin = r.B;
    std::vector<double> skipped;
    const std::string csv = io::tf_samples_csv(r, n, {0.5, 1.0, 1.5}, &skipped);
    CHECK(skipped == std::vector<double>{1.0});
}

TEST_CASE("sha256 of a known string") {
    CHECK(io::sha256_hex("abc") == "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");
    CHECK(io::sha256_hex("") == "e3b0c44298fc1c149afbf4c8996fb92427ae41e4649b934ca495991b7852b855");
}

TEST_CASE("manifest lists every written file with its hash and is deterministic") {
    std::string texts[2];
    for (int k = 0; k < 2; ++k) {
        const auto dir = scratch("manifest" + std::to_string(k));
        io::Manifest m(dir);
        m.set_meta("config", {{"seed", 3}});
        m.write("a.txt", "alpha\n");
        m.write("b.csv", "x,y\n1,2\n");
        texts[k] = m.finish();
        const json j = json::parse(io::read_file(dir / "manifest.json"));
        REQUIRE(j["files"].size() == 2);
        for (const auto& f : j["files"]) {
            CHECK(io::sha256_hex(io::read_file(dir / f["path"].get<std::string>())) == f["sha256"].get<std::string>());
        }
        std::filesystem::remove_all(dir);
    }
    CHECK(texts[0] == texts[1]);
    CHECK_THROWS_AS(io::read_file("/nonexistent/qcascade/file"), Error);
}
