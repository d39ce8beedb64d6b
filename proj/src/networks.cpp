#include "qcascade/networks.hpp"

#include <cmath>
#include <random>

namespace qc {

namespace {

Mat random_unitary(std::mt19937_64& rng, int n) {
    std::normal_distribution<double> g;
    Mat a(n, n);
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) a(i, j) = cplx(g(rng), g(rng));
    Eigen::HouseholderQR<Mat> qr(a);
    Mat q = qr.householderQ();
    const Mat r = qr.matrixQR();
    for (int i = 0; i < n; ++i) q.col(i) *= std::polar(1.0, std::arg(r(i, i)));
    return q;
}

Mat random_complex(std::mt19937_64& rng, int r, int c, double scale) {
    std::normal_distribution<double> g(0.0, scale);
    Mat a(r, c);
    for (int i = 0; i < r; ++i)
        for (int j = 0; j < c; ++j) a(i, j) = cplx(g(rng), g(rng));
    return a;
}

SLHModel random_slh(std::mt19937_64& rng, int modes, const Mat& s, double squeeze) {
    const int p = static_cast<int>(s.rows());
    SLHModel m;
    m.S = s;
    m.L_minus = random_complex(rng, p, modes, 0.7);
    m.L_plus = random_complex(rng, p, modes, 0.1);
    const Mat h = random_complex(rng, modes, modes, 0.5);
    m.omega = 0.5 * (h + h.adjoint());
    const Mat e = random_complex(rng, modes, modes, squeeze);
    m.eps = 0.5 * (e + e.transpose());
    return m;
}

}  // namespace

SLHModel example_slh(const ExampleParams& p) {
    const double s = std::sqrt(1.0 - p.eta * p.eta);
    SLHModel m;
    m.S.resize(2, 2);
    m.S << -s, p.eta, p.eta, s;
    m.L_minus.resize(2, 1);
    m.L_minus << -s * std::sqrt(p.kappa), p.eta * std::sqrt(p.kappa);
    m.L_plus = Mat::Zero(2, 1);
    m.omega = Mat::Zero(1, 1);
    m.eps = Mat::Constant(1, 1, I_unit * p.eps);
    if (p.loop_through_squeezer) {
        m.S.row(0).swap(m.S.row(1));
        m.S.col(0).swap(m.S.col(1));
        m.L_minus.row(0).swap(m.L_minus.row(1));
    }
    return m;
}

DelayNetwork example_network(const ExampleParams& p) {
    RationalTF open(slh_to_statespace(example_slh(p)));
    if (p.loop_phase != 0.0) {
        Mat phase = Mat::Identity(4, 4);
        phase(2, 2) = std::polar(1.0, p.loop_phase);
        phase(3, 3) = std::polar(1.0, -p.loop_phase);
        open = with_input_dressing(open, phase);
    }
    return DelayNetwork(std::move(open), 1, DelaySpec{{p.delay}, p.delay});
}

cplx example_loop_scalar(const ExampleParams& p, cplx z) {
    const double b = -0.25 * std::log(1.0 - p.eta * p.eta);
    const double h = 0.5 * p.delay;
    return -std::sinh(h * z - b) / std::sinh(h * z + b);
}

Mat example_squeezer_tf(const ExampleParams& p, cplx z) {
    SLHModel m;
    m.S = Mat::Identity(1, 1);
    m.L_minus = Mat::Constant(1, 1, std::sqrt(p.kappa));
    m.L_plus = Mat::Zero(1, 1);
    m.omega = Mat::Zero(1, 1);
    m.eps = Mat::Constant(1, 1, I_unit * p.eps);
    return RationalTF(slh_to_statespace(m)).eval(z);
}

DelayNetwork random_network(std::uint64_t seed, const RandomNetworkOptions& opt) {
    std::mt19937_64 rng(seed);
    const int n = opt.ports;
    std::uniform_real_distribution<double> uc(0.3, 0.9);
    Mat c = Mat::Zero(n, n), sn = Mat::Zero(n, n);
    for (int i = 0; i < n; ++i) {
        const double ct = uc(rng);
        c(i, i) = ct;
        sn(i, i) = std::sqrt(1.0 - ct * ct);
    }
    Mat core(2 * n, 2 * n);
    core << c, -sn, sn, c;
    Mat left = Mat::Zero(2 * n, 2 * n), right = Mat::Zero(2 * n, 2 * n);
    left.topLeftCorner(n, n) = random_unitary(rng, n);
    left.bottomRightCorner(n, n) = random_unitary(rng, n);
    right.topLeftCorner(n, n) = random_unitary(rng, n);
    right.bottomRightCorner(n, n) = random_unitary(rng, n);
    const SLHModel m = random_slh(rng, opt.modes, left * core * right, opt.squeeze);
    std::uniform_int_distribution<int> uk(1, opt.max_multiple);
    DelaySpec d;
    d.base_period = opt.base;
    for (int i = 0; i < n; ++i) d.delays.push_back(opt.base * uk(rng));
    return DelayNetwork(RationalTF(slh_to_statespace(m)), n, d);
}

RationalTF random_finite_system(std::uint64_t seed, int modes, int ports, double squeeze) {
    std::mt19937_64 rng(seed);
    return RationalTF(slh_to_statespace(random_slh(rng, modes, random_unitary(rng, ports), squeeze)));
}

}  // namespace qc
