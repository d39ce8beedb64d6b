#include "qcascade/delay_network.hpp"

#include "qcascade/errors.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <sstream>

namespace qc {

namespace {

constexpr double kLoopGuard = 1e-11;

std::string num(double x) {
    std::ostringstream os;
    os.precision(6);
    os << x;
    return os.str();
}

// Solve K X = Y, refusing when K is numerically singular.
Mat guarded_solve(const Mat& k, const Mat& y, cplx z, const char* op) {
    Eigen::PartialPivLU<Mat> lu(k);
    if (!(lu.rcond() > kLoopGuard)) {
        throw PoleProximityError("delay_network", op, "loop matrix singular near z (pole of the closed loop)", z);
    }
    return lu.solve(y);
}

}  // namespace

std::vector<int> DelaySpec::multiples() const {
    if (delays.empty()) throw DimensionError("delay_network", "DelaySpec", "at least one delay required");
    if (!(base_period > 0)) throw Error("delay_network", "DelaySpec", "base period must be positive");
    std::vector<int> out;
    for (double t : delays) {
        const double q = t / base_period;
        const long k = std::lround(q);
        if (k < 1 || std::abs(q - static_cast<double>(k)) > 1e-12 * std::max(1.0, q)) {
            throw AssumptionViolation("delay_network", "DelaySpec",
                                      "delay " + num(t) + " is not an integer multiple of base period " +
                                          num(base_period) + " (assumption 'commensurate': delays must share a base period)",
                                      4);
        }
        out.push_back(static_cast<int>(k));
    }
    return out;
}

double DelaySpec::commensurability_residual() const {
    double r = 0.0;
    for (double t : delays) {
        const double q = t / base_period;
        const double k = std::max(1.0, std::round(q));
        r = std::max(r, std::abs(q - k) / std::max(1.0, q));
    }
    return r;
}

double DelaySpec::min_delay() const { return *std::min_element(delays.begin(), delays.end()); }

double DelaySpec::period() const { return 2.0 * std::numbers::pi / base_period; }

Mat delay_operator(const DelaySpec& d, cplx z) {
    const int m = static_cast<int>(d.delays.size());
    Mat e = Mat::Zero(2 * m, 2 * m);
    for (int i = 0; i < m; ++i) {
        const cplx v = std::exp(-d.delays[static_cast<size_t>(i)] * z);
        e(2 * i, 2 * i) = v;
        e(2 * i + 1, 2 * i + 1) = v;
    }
    return e;
}

DelayNetwork::DelayNetwork(RationalTF open, int external_ports, DelaySpec delays)
    : open_(std::move(open)), delays_(std::move(delays)), n_ext_(external_ports) {
    const int total = open_.outputs();
    if (open_.inputs() != total || total % 2 != 0) {
        throw DimensionError("delay_network", "DelayNetwork", "open system must be square with doubled ports");
    }
    n_int_ = total / 2 - n_ext_;
    if (n_ext_ < 1 || n_int_ < 1) {
        throw DimensionError("delay_network", "DelayNetwork", "need at least one external and one internal port");
    }
    if (static_cast<int>(delays_.delays.size()) != n_int_) {
        throw DimensionError("delay_network", "DelayNetwork",
                             "need one delay per internal port (" + std::to_string(n_int_) + ")");
    }
    for (double t : delays_.delays) {
        if (!(t > 0)) throw Error("delay_network", "DelayNetwork", "delays must be positive");
    }
    const Mat& s = open_.S_inf();
    const int e = ext_dim(), m = int_dim();
    static_ = {s.topLeftCorner(e, e), s.topRightCorner(e, m), s.bottomLeftCorner(m, e), s.bottomRightCorner(m, m)};
}

Mat DelayNetwork::closed_tf(cplx z) const { return closed_tf(z, form_for(z.real())); }

Mat DelayNetwork::closed_tf(cplx z, LoopForm form) const {
    const Mat t = open_.eval(z);
    const int e = ext_dim(), m = int_dim();
    const Mat t1 = t.topLeftCorner(e, e), t2 = t.topRightCorner(e, m);
    const Mat t3 = t.bottomLeftCorner(m, e), t4 = t.bottomRightCorner(m, m);
    if (form == LoopForm::positive) {
        const Mat ez = delay_operator(delays_, z);
        return t1 + t2 * ez * guarded_solve(Mat::Identity(m, m) - t4 * ez, t3, z, "closed_tf");
    }
    return t1 + t2 * guarded_solve(delay_operator(delays_, -z) - t4, t3, z, "closed_tf");
}

Mat DelayNetwork::static_tf(cplx z) const {
    const int m = int_dim();
    const auto& s = static_;
    if (z.real() >= 0) {
        const Mat ez = delay_operator(delays_, z);
        return s.S1 + s.S2 * ez * guarded_solve(Mat::Identity(m, m) - s.S4 * ez, s.S3, z, "static_tf");
    }
    return s.S1 + s.S2 * guarded_solve(delay_operator(delays_, -z) - s.S4, s.S3, z, "static_tf");
}

cplx DelayNetwork::loop_determinant(cplx z, Which which) const {
    const int m = int_dim();
    const Mat t4 = which == Which::exact ? Mat(open_.eval(z).bottomRightCorner(m, m)) : static_.S4;
    return (Mat::Identity(m, m) - t4 * delay_operator(delays_, z)).determinant();
}

Mat DelayNetwork::characteristic_matrix(cplx z, LoopForm form, bool with_external) const {
    const auto& ss = open_.realization();
    const int n = ss.states(), e = ext_dim(), m = int_dim();
    const int dim = n + m + (with_external ? e : 0);
    Mat k = Mat::Zero(dim, dim);
    const Mat b1 = ss.B.leftCols(e), b2 = ss.B.rightCols(m);
    const Mat c1 = ss.C.topRows(e), c2 = ss.C.bottomRows(m);
    const Mat d1 = ss.D.topLeftCorner(e, e), d2 = ss.D.topRightCorner(e, m);
    const Mat d3 = ss.D.bottomLeftCorner(m, e), d4 = ss.D.bottomRightCorner(m, m);
    if (n > 0) {
        k.topLeftCorner(n, n) = -ss.A;
        k.topLeftCorner(n, n).diagonal().array() += z;
        k.block(0, n, n, m) = -b2;
    }
    if (form == LoopForm::positive) {
        const Mat ez = delay_operator(delays_, z);
        if (n > 0) k.block(n, 0, m, n) = -ez * c2;
        k.block(n, n, m, m) = Mat::Identity(m, m) - ez * d4;
        if (with_external) k.block(n, n + m, m, e) = -ez * d3;
    } else {
        if (n > 0) k.block(n, 0, m, n) = -c2;
        k.block(n, n, m, m) = delay_operator(delays_, -z) - d4;
        if (with_external) k.block(n, n + m, m, e) = -d3;
    }
    if (with_external) {
        if (n > 0) {
            k.block(0, n + m, n, e) = -b1;
            k.block(n + m, 0, e, n) = c1;
        }
        k.block(n + m, n, e, m) = d2;
        k.block(n + m, n + m, e, e) = d1;
    }
    return k;
}

cplx DelayNetwork::pole_target(cplx z, LoopForm form) const {
    return characteristic_matrix(z, form, false).partialPivLu().determinant();
}

cplx DelayNetwork::zero_target(cplx z, LoopForm form) const {
    return characteristic_matrix(z, form, true).partialPivLu().determinant();
}

DelayNetwork DelayNetwork::static_surrogate() const {
    StateSpaceModel ss;
    ss.D = open_.S_inf();
    ss.A = Mat(0, 0);
    ss.B = Mat(0, ss.D.cols());
    ss.C = Mat(ss.D.rows(), 0);
    return DelayNetwork(RationalTF(ss), n_ext_, delays_);
}

SearchStrip compute_strip(const DelayNetwork& n) {
    const int m = n.int_dim();
    const auto& poles = n.open_tf().poles();
    double rmax = 0.0, re_open = 0.0;
    for (Eigen::Index i = 0; i < poles.size(); ++i) {
        rmax = std::max(rmax, std::abs(poles(i)));
        re_open = std::max(re_open, std::abs(poles(i).real()));
    }
    const double c0 = 2.0 * rmax + 1.0;
    Eigen::JacobiSVD<Mat> s4svd(n.static_blocks().S4);
    double smin = s4svd.singularValues()(m - 1), smax = s4svd.singularValues()(0);
    for (int k = 0; k < 6; ++k) {
        const double r = c0 * std::pow(2.0, k);
        for (int a = 0; a < 64; ++a) {
            const cplx z = std::polar(r, 2.0 * std::numbers::pi * (a + 0.5) / 64.0);
            Eigen::JacobiSVD<Mat> svd(Mat(n.open_tf().eval_unchecked(z).bottomRightCorner(m, m)));
            smin = std::min(smin, svd.singularValues()(m - 1));
            smax = std::max(smax, svd.singularValues()(0));
        }
    }
    if (smin < 1e-12) {
        throw AssumptionViolation("delay_network", "compute_strip",
                                  "T4 has a vanishing singular value at large |z| (sigma_min(S4) = " +
                                      num(s4svd.singularValues()(m - 1)) +
                                      "); assumption 'proper' (T2, T3, T4 invertible near infinity) fails",
                                  3);
    }
    double tmin = n.delays().min_delay();
    double tmax = *std::max_element(n.delays().delays.begin(), n.delays().delays.end());
    SearchStrip st;
    st.period = n.delays().period();
    st.sigma_min_T4 = smin;
    st.sigma_max_T4 = smax;
    st.raw_low = std::log(smin) / (smin < 1.0 ? tmin : tmax);
    st.raw_high = std::log(smax) / (smax < 1.0 ? tmax : tmin);
    const double margin =
        0.1 * std::max({st.raw_high - st.raw_low, std::abs(st.raw_low), std::abs(st.raw_high)}) + 1e-6;
    st.c_low = st.raw_low - margin;
    st.c_high = st.raw_high + margin;
    // Far from the axis the finite closed-loop poles approach the transmission
    // zeros of T4 (eigenvalues of A - B2 D4^{-1} C2).
    double re_t4 = 0.0;
    const auto& ss = n.open_tf().realization();
    if (ss.states() > 0) {
        const Mat b2 = ss.B.rightCols(m), c2 = ss.C.bottomRows(m);
        const Mat d4 = ss.D.bottomRightCorner(m, m);
        const Mat zt = ss.A - b2 * d4.partialPivLu().solve(c2);
        const auto ev = Eigen::ComplexEigenSolver<Mat>(zt, false).eigenvalues();
        for (Eigen::Index i = 0; i < ev.size(); ++i) re_t4 = std::max(re_t4, std::abs(ev(i).real()));
    }
    const double x = std::max({std::abs(st.c_low), std::abs(st.c_high), 1.1 * re_open + 0.1, 1.2 * re_t4 + 0.25});
    st.search_re_lo = -x;
    st.search_re_hi = x;
    return st;
}

std::string to_string(CheckStatus s) {
    switch (s) {
        case CheckStatus::pass: return "pass";
        case CheckStatus::warn: return "warn";
        case CheckStatus::fail: return "fail";
    }
    return "?";
}

bool AssumptionReport::all_pass() const {
    return std::none_of(checks.begin(), checks.end(), [](const auto& c) { return c.status == CheckStatus::fail; });
}

const AssumptionCheck* AssumptionReport::first_failure() const {
    for (const auto& c : checks) {
        if (c.status == CheckStatus::fail) return &c;
    }
    return nullptr;
}

std::vector<cplx> static_loop_roots_w(const DelayNetwork& n) {
    const auto k = n.delays().multiples();
    const Mat& s4 = n.static_blocks().S4;
    const int m = n.int_dim();
    int deg = 0;
    for (int ki : k) deg += 2 * ki;
    // Coefficients of p(w) by a discrete Fourier transform of samples on |w| = 1.
    const int np = deg + 1;
    std::vector<cplx> samples(static_cast<size_t>(np));
    for (int j = 0; j < np; ++j) {
        const cplx w = std::polar(1.0, 2.0 * std::numbers::pi * j / np);
        Mat e = Mat::Zero(m, m);
        for (int i = 0; i < m / 2; ++i) {
            const cplx v = std::pow(w, k[static_cast<size_t>(i)]);
            e(2 * i, 2 * i) = v;
            e(2 * i + 1, 2 * i + 1) = v;
        }
        samples[static_cast<size_t>(j)] = (Mat::Identity(m, m) - s4 * e).determinant();
    }
    std::vector<cplx> coef(static_cast<size_t>(np));
    for (int p = 0; p < np; ++p) {
        cplx acc = 0.0;
        for (int j = 0; j < np; ++j) acc += samples[static_cast<size_t>(j)] * std::polar(1.0, -2.0 * std::numbers::pi * p * j / np);
        coef[static_cast<size_t>(p)] = acc / static_cast<double>(np);
    }
    int top = deg;
    const double scale = std::abs(coef[0]) + 1.0;
    while (top > 0 && std::abs(coef[static_cast<size_t>(top)]) < 1e-13 * scale) --top;
    std::vector<cplx> roots;
    if (top == 0) return roots;
    Mat comp = Mat::Zero(top, top);
    for (int i = 1; i < top; ++i) comp(i, i - 1) = 1.0;
    for (int i = 0; i < top; ++i) comp(i, top - 1) = -coef[static_cast<size_t>(i)] / coef[static_cast<size_t>(top)];
    const auto ev = Eigen::ComplexEigenSolver<Mat>(comp, false).eigenvalues();
    for (Eigen::Index i = 0; i < ev.size(); ++i) roots.push_back(ev(i));
    // A root of multiplicity m is perturbed by eps^(1/m); the cluster mean is
    // accurate to eps.
    std::vector<cplx> out(roots.size());
    for (size_t i = 0; i < roots.size(); ++i) {
        cplx acc = 0.0;
        int cnt = 0;
        for (cplx r : roots) {
            if (std::abs(r - roots[i]) < 1e-5 * std::abs(roots[i])) {
                acc += r;
                ++cnt;
            }
        }
        out[i] = acc / static_cast<double>(cnt);
    }
    return out;
}

std::vector<cplx> static_poles_in_window(const DelayNetwork& n, double im_lo, double im_hi) {
    const double base = n.delays().base_period;
    const double per = n.delays().period();
    std::vector<cplx> out;
    for (cplx w : static_loop_roots_w(n)) {
        const cplx z0 = -std::log(w) / base;
        const long k0 = static_cast<long>(std::ceil((im_lo - z0.imag()) / per));
        for (long k = k0; z0.imag() + per * static_cast<double>(k) < im_hi; ++k) {
            out.push_back(z0 + cplx(0.0, per * static_cast<double>(k)));
        }
    }
    std::sort(out.begin(), out.end(), [](cplx a, cplx b) {
        return a.imag() != b.imag() ? a.imag() < b.imag() : a.real() < b.real();
    });
    return out;
}

AssumptionReport validate_assumptions(const DelayNetwork& n) {
    AssumptionReport rep;
    const auto& tf = n.open_tf();

    rep.checks.push_back({1, "finite_dim", CheckStatus::pass, static_cast<double>(tf.states()),
                          "open system is a state-space realization with " + std::to_string(tf.states()) + " states"});

    double ju = 0.0;
    for (int i = 0; i < 32; ++i) {
        const cplx z(0.0, -8.0 + 16.0 * (i + 0.37) / 32.0);
        if (tf.near_pole(z, 1e-6)) continue;
        ju = std::max(ju, is_j_unitary(tf.eval_unchecked(z)).value);
    }
    const double du = tf.realization().doubled_up_residual().value;
    const double r2 = std::max(ju, du);
    rep.checks.push_back({2, "physically_realizable", r2 <= 1e-8 ? CheckStatus::pass : CheckStatus::fail, r2,
                          "J-unitarity on the imaginary axis " + num(ju) + ", doubled-up residual " + num(du)});

    const auto& s = n.static_blocks();
    double s3min = 0.0;
    std::string d3;
    if (n.external_ports() != n.internal_ports()) {
        d3 = "T2/T3 are not square (external " + std::to_string(n.external_ports()) + " vs internal " +
             std::to_string(n.internal_ports()) + " ports)";
    } else {
        const double a = sigma_min(s.S2), b = sigma_min(s.S3), c = sigma_min(s.S4);
        s3min = std::min({a, b, c});
        d3 = "sigma_min(S2) = " + num(a) + ", sigma_min(S3) = " + num(b) + ", sigma_min(S4) = " + num(c);
    }
    rep.checks.push_back({3, "proper", s3min > 1e-8 ? CheckStatus::pass : CheckStatus::fail, s3min, d3});

    const double cr = n.delays().commensurability_residual();
    rep.checks.push_back({4, "commensurate", cr <= 1e-12 ? CheckStatus::pass : CheckStatus::fail, cr,
                          "max relative distance of delay/base to an integer: " + num(cr)});

    double coll = 1e300;
    if (tf.states() > 0) {
        try {
            const auto zeros = inverse(tf).poles();
            for (Eigen::Index i = 0; i < zeros.size(); ++i)
                for (Eigen::Index j = 0; j < tf.poles().size(); ++j)
                    coll = std::min(coll, std::abs(zeros(i) - tf.poles()(j)));
        } catch (const Error&) {
            coll = 0.0;
        }
    }
    rep.checks.push_back({5, "zeros_poles_distinct", coll > 1e-8 ? CheckStatus::pass : CheckStatus::fail,
                          std::min(coll, 1e300), "minimum zero/pole separation of the open system"});

    if (cr <= 1e-12) {
        const auto w = static_loop_roots_w(n);
        double minsep = 1e300;
        cplx where = 0.0;
        for (size_t i = 0; i < w.size(); ++i)
            for (size_t j = i + 1; j < w.size(); ++j)
                if (std::abs(w[i] - w[j]) < minsep) {
                    minsep = std::abs(w[i] - w[j]);
                    where = -std::log(w[i]) / n.delays().base_period;
                }
        const bool simple = minsep > 1e-6;
        std::ostringstream os;
        os << "minimum separation of static loop roots " << num(minsep);
        if (!simple) os << "; repeated static ladder pole near " << where.real() << (where.imag() < 0 ? "-" : "+") << std::abs(where.imag()) << "i";
        rep.checks.push_back({6, "simple", simple ? CheckStatus::pass : CheckStatus::fail, minsep, os.str()});
    } else {
        rep.checks.push_back({6, "simple", CheckStatus::warn, 0.0, "not checked: delays incommensurate"});
    }

    const auto opp = opposite_eigenvalue_pairs(tf);
    if (!opp.empty()) {
        rep.checks.push_back({0, "eigenvalue_sum", CheckStatus::warn, static_cast<double>(opp.size()),
                              "open-system eigenvalues with lambda_i + lambda_j ~ 0"});
    }
    return rep;
}

}  // namespace qc
