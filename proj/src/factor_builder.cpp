#include "qcascade/factor_builder.hpp"

#include "qcascade/errors.hpp"

#include <cmath>
#include <numbers>

namespace qc {

namespace {

constexpr double kPi = std::numbers::pi;

Mat u_left() {
    Mat u(2, 2);
    u << 1.0, I_unit, 1.0, -I_unit;
    return u;
}

Mat u_right() {
    Mat u(2, 2);
    u << 1.0, 1.0, -I_unit, I_unit;
    return u;
}

Vec sigma_conj(const Vec& v) { return sigma(static_cast<int>(v.size())) * v.conjugate(); }

cplx jdot(const Vec& a, const Vec& b) { return a.dot(signature(static_cast<int>(a.size())) * b); }

// sinh(u)/sinh(v) without overflow for large |Re|.
cplx sinh_ratio(cplx u, cplx v) {
    if (u.real() >= 0 && v.real() >= 0) return std::exp(u - v) * (1.0 - std::exp(-2.0 * u)) / (1.0 - std::exp(-2.0 * v));
    if (u.real() < 0 && v.real() < 0) return std::exp(v - u) * (1.0 - std::exp(2.0 * u)) / (1.0 - std::exp(2.0 * v));
    return std::sinh(u) / std::sinh(v);
}

void check_V(const Mat& v, const char* op) {
    if (v.cols() != 2 || v.rows() % 2 != 0) throw DimensionError("factor_builder", op, "V must be 2N x 2");
    const double du = is_doubled_up(v, 1e-8).value;
    const double ort = norm2(flat(v) * v - Mat::Identity(2, 2));
    if (du > 1e-8 || ort > 1e-8) {
        throw Error("factor_builder", op,
                    "V violates structure (doubled-up " + std::to_string(du) + ", V^flat V - I " + std::to_string(ort) + ")");
    }
}

}  // namespace

std::string to_string(FactorVariant v) {
    switch (v) {
        case FactorVariant::complex_pair: return "complex_pair";
        case FactorVariant::real_pair: return "real_pair";
        case FactorVariant::modified_degenerate: return "modified_degenerate";
        case FactorVariant::static_ladder: return "static_ladder";
    }
    return "?";
}

cplx blaschke(cplx z, cplx a) { return (z - a) / (z + std::conj(a)); }

cplx ladder_scalar(cplx z, cplx zm, double period, const std::vector<int>& excluded) {
    const double k = kPi / period;
    cplx q = sinh_ratio(k * (z - zm), k * (z + std::conj(zm)));
    for (int n : excluded) q /= blaschke(z, zm + cplx(0.0, period * n));
    return q;
}

Mat CanonicalFactor::middle(cplx z, bool inverse) const {
    Mat f = Mat::Zero(2, 2);
    switch (variant) {
        case FactorVariant::complex_pair:
            f(0, 0) = blaschke(z, z0);
            f(1, 1) = blaschke(z, std::conj(z0));
            break;
        case FactorVariant::modified_degenerate: {
            const cplx s = blaschke(z, z0) * blaschke(z, std::conj(z0));
            f(0, 0) = s;
            f(1, 1) = s;
            break;
        }
        case FactorVariant::real_pair: {
            Mat d = Mat::Zero(2, 2);
            d(0, 0) = (z - z1) / (z + z2);
            d(1, 1) = (z - z2) / (z + z1);
            if (inverse) {
                d(0, 0) = 1.0 / d(0, 0);
                d(1, 1) = 1.0 / d(1, 1);
            }
            return 0.5 * u_left() * d * u_right();
        }
        case FactorVariant::static_ladder:
            f(0, 0) = ladder_scalar(z, z0, ladder_period, ladder_excluded);
            f(1, 1) = std::conj(ladder_scalar(std::conj(z), z0, ladder_period, ladder_excluded));
            break;
    }
    if (inverse) {
        f(0, 0) = 1.0 / f(0, 0);
        f(1, 1) = 1.0 / f(1, 1);
    }
    return f;
}

Mat CanonicalFactor::eval(cplx z) const {
    const Mat vf = flat(V);
    return Mat::Identity(V.rows(), V.rows()) - V * vf + V * middle(z, false) * vf;
}

Mat CanonicalFactor::inverse_at(cplx z) const {
    const Mat vf = flat(V);
    return Mat::Identity(V.rows(), V.rows()) - V * vf + V * middle(z, true) * vf;
}

std::vector<cplx> CanonicalFactor::zeros() const {
    switch (variant) {
        case FactorVariant::complex_pair:
        case FactorVariant::modified_degenerate: return {z0, std::conj(z0)};
        case FactorVariant::real_pair: return {z1, z2};
        case FactorVariant::static_ladder: return {};
    }
    return {};
}

std::vector<cplx> CanonicalFactor::poles() const {
    std::vector<cplx> p;
    for (cplx z : zeros()) p.push_back(-std::conj(z));
    return p;
}

Vec sigma_real(const Vec& v) {
    const double nv = v.norm();
    if (!(nv > 0)) throw DegeneracyError("factor_builder", "sigma_real", "zero vector");
    Vec u = v + sigma_conj(v);
    if (u.norm() < 1e-6 * nv) u = I_unit * (v - sigma_conj(v));
    return u / u.norm();
}

CanonicalFactor build_complex_factor(cplx z0, const Vec& v0, double tol) {
    if (std::abs(z0.imag()) <= 1e-12 * (1.0 + std::abs(z0))) {
        throw DegeneracyError("factor_builder", "build_complex_factor", "z0 is real; use the real-pair factor");
    }
    const double nn = std::real(jdot(v0, v0));
    if (std::abs(nn) < tol * v0.squaredNorm()) {
        throw DegeneracyError("factor_builder", "build_complex_factor",
                              "v^dagger J v = " + std::to_string(nn) + " is below threshold; use a degenerate workaround");
    }
    CanonicalFactor f;
    f.variant = FactorVariant::complex_pair;
    Vec v = v0;
    f.z0 = z0;
    if (nn < 0) {
        // The conjugate zero carries the positive-norm eigenvector Sigma v^#.
        v = sigma_conj(v0);
        f.z0 = std::conj(z0);
    }
    v /= std::sqrt(std::abs(nn));
    f.v1 = v;
    f.v2 = sigma_conj(v);
    f.V.resize(v.size(), 2);
    f.V.col(0) = f.v1;
    f.V.col(1) = f.v2;
    return f;
}

CanonicalFactor build_real_factor(double z1, double z2, const Vec& v1_in, const Vec& v2_in, double tol) {
    Vec v1 = sigma_real(v1_in), v2 = sigma_real(v2_in);
    cplx g = jdot(v1, v2);
    if (std::abs(g) < tol) {
        throw DegeneracyError("factor_builder", "build_real_factor",
                              "|v1^dagger J v2| = " + std::to_string(std::abs(g)) + " is below threshold");
    }
    if (g.imag() < 0) {
        std::swap(v1, v2);
        std::swap(z1, z2);
        g = std::conj(g);
    }
    const double t = g.imag();
    // v1, v2 are unit vectors here, so equal scaling keeps |v1| = |v2|.
    const double s = std::sqrt(1.0 / (2.0 * t));
    v1 *= s;
    v2 *= s;
    CanonicalFactor f;
    f.variant = FactorVariant::real_pair;
    f.z1 = z1;
    f.z2 = z2;
    f.v1 = v1;
    f.v2 = v2;
    Mat pair(v1.size(), 2);
    pair.col(0) = v1;
    pair.col(1) = v2;
    f.V = pair * u_right();
    return f;
}

CanonicalFactor build_modified_degenerate_factor(cplx z0, const Mat& V) {
    check_V(V, "build_modified_degenerate_factor");
    CanonicalFactor f;
    f.variant = FactorVariant::modified_degenerate;
    f.z0 = z0;
    f.V = V;
    f.v1 = V.col(0);
    f.v2 = V.col(1);
    return f;
}

CanonicalFactor build_degenerate_real_factor(double z, const Mat& eigenspace) {
    std::vector<Vec> cand;
    for (Eigen::Index i = 0; i < eigenspace.cols(); ++i) {
        const Vec x = eigenspace.col(i);
        const Vec a = x + sigma_conj(x), b = I_unit * (x - sigma_conj(x));
        if (a.norm() > 1e-6) cand.push_back(a / a.norm());
        if (b.norm() > 1e-6) cand.push_back(b / b.norm());
    }
    double best = 0.0;
    int bi = -1, bj = -1;
    for (size_t i = 0; i < cand.size(); ++i)
        for (size_t j = i + 1; j < cand.size(); ++j) {
            const double g = std::abs(jdot(cand[i], cand[j]));
            if (g > best) {
                best = g;
                bi = static_cast<int>(i);
                bj = static_cast<int>(j);
            }
        }
    if (bi < 0 || best < 1e-6) {
        throw DegeneracyError("factor_builder", "build_degenerate_real_factor",
                              "eigenspace has no Sigma-real pair with v1^dagger J v2 != 0");
    }
    return build_real_factor(z, z, cand[static_cast<size_t>(bi)], cand[static_cast<size_t>(bj)]);
}

CanonicalFactor build_degenerate_complex_factor(cplx z0, const Mat& eigenspace, double perturb_eps) {
    const Mat j = signature(static_cast<int>(eigenspace.rows()));
    Eigen::SelfAdjointEigenSolver<Mat> es(eigenspace.adjoint() * j * eigenspace);
    Eigen::Index k = 0;
    es.eigenvalues().cwiseAbs().maxCoeff(&k);
    Vec v = eigenspace * es.eigenvectors().col(k);
    v /= v.norm();
    double nn = std::real(jdot(v, v));
    if (std::abs(nn) < 1e-6) {
        v(0) += perturb_eps;
        nn = std::real(jdot(v, v));
        if (std::abs(nn) < 1e-12) {
            throw DegeneracyError("factor_builder", "build_degenerate_complex_factor", "perturbed eigenvector still J-null");
        }
    }
    if (nn < 0) v = sigma_conj(v);
    v /= std::sqrt(std::abs(nn));
    Mat V(v.size(), 2);
    V.col(0) = v;
    V.col(1) = sigma_conj(v);
    return build_modified_degenerate_factor(z0, V);
}

CanonicalFactor build_static_ladder_factor(cplx z_m, double period, const Mat& V, std::vector<int> excluded) {
    check_V(V, "build_static_ladder_factor");
    CanonicalFactor f;
    f.variant = FactorVariant::static_ladder;
    f.z0 = z_m;
    f.ladder_period = period;
    f.ladder_excluded = std::move(excluded);
    f.V = V;
    f.v1 = V.col(0);
    f.v2 = V.col(1);
    return f;
}

OmegaCanonical canonicalize_omega(const Mat& omega, double kappa, double tol) {
    if (omega.rows() != 2 || omega.cols() != 2) throw DimensionError("factor_builder", "canonicalize_omega", "Omega must be 2x2");
    if (norm2(omega - omega.adjoint()) > 1e-10 || std::abs(omega(0, 0) - omega(1, 1)) > 1e-10) {
        throw Error("factor_builder", "canonicalize_omega", "Omega is not a Hermitian doubled-up matrix");
    }
    const double a = omega(0, 0).real();
    const double b = std::abs(omega(0, 1));
    double phi = std::arg(omega(0, 1));
    if (std::abs(std::abs(a) - b) <= tol * (1.0 + b)) {
        throw Error("factor_builder", "canonicalize_omega", "parabolic boundary |a| = b is not supported");
    }
    OmegaCanonical out;
    Mat s(2, 2);
    if (std::abs(a) > b) {
        out.variant = OmegaVariant::complex_case;
        out.c = (a > 0 ? 1.0 : -1.0) * std::sqrt(a * a - b * b);
        if (a < 0) phi += kPi;
        const double eta = std::atanh(b / std::abs(a));
        const double ch = std::cosh(eta / 2), sh = std::sinh(eta / 2);
        s << ch, sh * std::polar(1.0, phi), sh * std::polar(1.0, -phi), ch;
    } else {
        out.variant = OmegaVariant::real_case;
        out.c = std::sqrt(b * b - a * a);
        const double eta = std::atanh(a / b);
        const double ch = std::cosh(eta / 2), sh = std::sinh(eta / 2);
        s << ch * std::polar(1.0, kPi / 4 - phi / 2), -sh * std::polar(1.0, kPi / 4 + phi / 2),
            -sh * std::polar(1.0, -kPi / 4 - phi / 2), ch * std::polar(1.0, -kPi / 4 + phi / 2);
        out.z1 = kappa / 2 - out.c;
        out.z2 = kappa / 2 + out.c;
    }
    out.S = s;
    return out;
}

DelayNetwork apply_loop_phase_shift(const DelayNetwork& n, double delta) {
    const int e = n.ext_dim(), m = n.int_dim();
    Mat r = Mat::Identity(e + m, e + m);
    for (int i = 0; i < m; i += 2) {
        r(e + i, e + i) = std::polar(1.0, delta);
        r(e + i + 1, e + i + 1) = std::polar(1.0, -delta);
    }
    return DelayNetwork(with_input_dressing(n.open_tf(), r), n.external_ports(), n.delays());
}

Mat BlaschkePotapovForm::eval(cplx z) const {
    const int d = static_cast<int>(M.rows());
    Eigen::VectorXcd diag(d);
    for (int i = 0; i < d; ++i) diag(i) = (i % 2 == 0) ? 1.0 : -1.0;
    diag(0) = blaschke(z, a_root);
    diag(1) = -std::conj(blaschke(std::conj(z), a_root));
    return M * diag.asDiagonal() * M.adjoint() * signature(d);
}

BlaschkePotapovForm to_blaschke_potapov_form(const CanonicalFactor& f) {
    if (f.variant != FactorVariant::complex_pair) {
        throw Error("factor_builder", "to_blaschke_potapov_form", "only complex-pair factors have this form");
    }
    const Mat w = f.V * signature(2);
    BlaschkePotapovForm out;
    out.M = indefinite_complete(w);
    out.a_root = f.z0;
    return out;
}

SLHModel SLHParams::model() const {
    SLHModel m;
    const auto p = L_minus.size();
    m.S = Mat::Identity(p, p);
    m.L_minus = L_minus;
    m.L_plus = L_plus;
    m.omega = Mat::Constant(1, 1, omega);
    m.eps = Mat::Constant(1, 1, eps);
    return m;
}

SLHParams factor_to_slh(const CanonicalFactor& f) {
    SLHParams p;
    if (f.variant == FactorVariant::complex_pair) {
        p.kappa = 2.0 * f.z0.real();
        p.c = -f.z0.imag();
        p.omega = p.c;
        p.eps = 0.0;
    } else if (f.variant == FactorVariant::real_pair) {
        p.kappa = f.z1 + f.z2;
        p.c = 0.5 * (f.z2 - f.z1);
        p.omega = 0.0;
        p.eps = I_unit * p.c;
    } else {
        throw Error("factor_builder", "factor_to_slh", "only complex-pair and real-pair factors map to one SLH component");
    }
    if (!(p.kappa > 0)) {
        throw Error("factor_builder", "factor_to_slh",
                    "kappa = " + std::to_string(p.kappa) + " <= 0: zeros in the left half plane are not physically realizable");
    }
    const auto ports = f.V.rows() / 2;
    p.L_minus.resize(ports);
    p.L_plus.resize(ports);
    const double sk = std::sqrt(p.kappa);
    for (Eigen::Index i = 0; i < ports; ++i) {
        p.L_minus(i) = sk * f.V(2 * i, 0);
        p.L_plus(i) = sk * f.V(2 * i, 1);
    }
    return p;
}

}  // namespace qc
