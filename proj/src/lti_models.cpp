#include "qcascade/lti_models.hpp"

#include "qcascade/errors.hpp"

#include <sstream>

namespace qc {

namespace {

std::string fmt_c(cplx z) {
    std::ostringstream os;
    os.precision(12);
    os << z.real() << (z.imag() < 0 ? "-" : "+") << std::abs(z.imag()) << "i";
    return os.str();
}

}  // namespace

Mat SLHModel::coupling() const { return doubled(L_minus, L_plus); }
Mat SLHModel::hamiltonian() const { return doubled(omega, eps); }

void SLHModel::validate(double tol) const {
    const auto m = S.rows();
    if (S.cols() != m || L_minus.rows() != m || L_plus.rows() != m) {
        throw DimensionError("lti_models", "SLHModel", "port dimensions of S, L-, L+ disagree");
    }
    const auto n = omega.rows();
    if (omega.cols() != n || eps.rows() != n || eps.cols() != n || L_minus.cols() != n || L_plus.cols() != n) {
        throw DimensionError("lti_models", "SLHModel", "mode dimensions of omega, eps, L disagree");
    }
    if (norm2(S.adjoint() * S - Mat::Identity(m, m)) > tol) {
        throw Error("lti_models", "SLHModel", "S is not unitary");
    }
    if (n > 0 && (norm2(omega - omega.adjoint()) > tol || norm2(eps - eps.transpose()) > tol)) {
        throw Error("lti_models", "SLHModel", "Omega is not Hermitian in doubled-up form");
    }
}

void StateSpaceModel::validate_shapes() const {
    const auto n = A.rows();
    if (A.cols() != n || B.rows() != n || C.cols() != n || C.rows() != D.rows() || B.cols() != D.cols()) {
        throw DimensionError("lti_models", "StateSpaceModel", "inconsistent realization shapes");
    }
}

Residual StateSpaceModel::doubled_up_residual(double tol) const {
    double r = is_doubled_up(D, tol).value;
    if (states() > 0) {
        r = std::max({r, is_doubled_up(A, tol).value, is_doubled_up(B, tol).value, is_doubled_up(C, tol).value});
    }
    return {r <= tol, r};
}

StateSpaceModel slh_to_statespace(const SLHModel& m) {
    m.validate();
    const int n = m.modes();
    StateSpaceModel ss;
    ss.D = doubled(m.S, Mat::Zero(m.ports(), m.ports()));
    if (n == 0) {
        ss.A = Mat(0, 0);
        ss.B = Mat(0, ss.D.cols());
        ss.C = Mat(ss.D.rows(), 0);
        return ss;
    }
    const Mat c = m.coupling();
    const Mat cf = flat(c);
    ss.A = -0.5 * cf * c - I_unit * m.hamiltonian() * signature(2 * n);
    ss.B = -cf * ss.D;
    ss.C = c;
    return ss;
}

RationalTF::RationalTF(StateSpaceModel ss) : ss_(std::move(ss)) {
    ss_.validate_shapes();
    if (ss_.states() > 0) {
        poles_ = Eigen::ComplexEigenSolver<Mat>(ss_.A, false).eigenvalues();
    } else {
        poles_.resize(0);
    }
}

bool RationalTF::near_pole(cplx z, double rel) const {
    for (Eigen::Index i = 0; i < poles_.size(); ++i) {
        if (std::abs(z - poles_(i)) < rel * (1.0 + std::abs(poles_(i)))) return true;
    }
    return false;
}

Mat RationalTF::eval_unchecked(cplx z) const {
    const int n = ss_.states();
    if (n == 0) return ss_.D;
    Mat zi = -ss_.A;
    zi.diagonal().array() += z;
    return ss_.D + ss_.C * zi.partialPivLu().solve(ss_.B);
}

Mat RationalTF::eval(cplx z) const {
    for (Eigen::Index i = 0; i < poles_.size(); ++i) {
        if (std::abs(z - poles_(i)) < 1e-9 * (1.0 + std::abs(poles_(i)))) {
            throw PoleProximityError("lti_models", "eval",
                                     "z = " + fmt_c(z) + " is within the guard of eigenvalue " + fmt_c(poles_(i)),
                                     poles_(i));
        }
    }
    return eval_unchecked(z);
}

Mat eval(const RationalTF& tf, cplx z) { return tf.eval(z); }

RationalTF inverse(const RationalTF& tf) {
    const auto& s = tf.realization();
    if (s.D.rows() != s.D.cols()) throw DimensionError("lti_models", "inverse", "D must be square");
    Eigen::FullPivLU<Mat> lu(s.D);
    if (!lu.isInvertible() || lu.rcond() < 1e-14) {
        throw NumericalFailure("lti_models", "inverse", "feedthrough D is singular");
    }
    const Mat dinv = lu.inverse();
    StateSpaceModel r;
    r.A = s.A - s.B * dinv * s.C;
    r.B = -s.B * dinv;
    r.C = dinv * s.C;
    r.D = dinv;
    return RationalTF(r);
}

RationalTF concat(const RationalTF& a, const RationalTF& b) {
    const auto& x = a.realization();
    const auto& y = b.realization();
    const auto na = x.states(), nb = y.states();
    StateSpaceModel r;
    r.A = Mat::Zero(na + nb, na + nb);
    r.A.topLeftCorner(na, na) = x.A;
    r.A.bottomRightCorner(nb, nb) = y.A;
    r.B = Mat::Zero(na + nb, x.inputs() + y.inputs());
    r.B.topLeftCorner(na, x.inputs()) = x.B;
    r.B.bottomRightCorner(nb, y.inputs()) = y.B;
    r.C = Mat::Zero(x.outputs() + y.outputs(), na + nb);
    r.C.topLeftCorner(x.outputs(), na) = x.C;
    r.C.bottomRightCorner(y.outputs(), nb) = y.C;
    r.D = Mat::Zero(x.outputs() + y.outputs(), x.inputs() + y.inputs());
    r.D.topLeftCorner(x.outputs(), x.inputs()) = x.D;
    r.D.bottomRightCorner(y.outputs(), y.inputs()) = y.D;
    return RationalTF(r);
}

RationalTF series(const RationalTF& first, const RationalTF& second) {
    const auto& a = first.realization();
    const auto& b = second.realization();
    if (a.outputs() != b.inputs()) throw DimensionError("lti_models", "series", "port counts do not chain");
    const auto na = a.states(), nb = b.states();
    StateSpaceModel r;
    r.A = Mat::Zero(na + nb, na + nb);
    r.A.topLeftCorner(na, na) = a.A;
    r.A.bottomLeftCorner(nb, na) = b.B * a.C;
    r.A.bottomRightCorner(nb, nb) = b.A;
    r.B = Mat(na + nb, a.inputs());
    r.B.topRows(na) = a.B;
    r.B.bottomRows(nb) = b.B * a.D;
    r.C = Mat(b.outputs(), na + nb);
    r.C.leftCols(na) = b.D * a.C;
    r.C.rightCols(nb) = b.C;
    r.D = b.D * a.D;
    return RationalTF(r);
}

RationalTF feedback(const RationalTF& t, int external_dim) {
    const auto& s = t.realization();
    const int total = s.outputs();
    if (s.inputs() != total || external_dim < 0 || external_dim > total) {
        throw DimensionError("lti_models", "feedback", "invalid partition");
    }
    const int e = external_dim, m = total - e;
    const Mat d1 = s.D.topLeftCorner(e, e), d2 = s.D.topRightCorner(e, m);
    const Mat d3 = s.D.bottomLeftCorner(m, e), d4 = s.D.bottomRightCorner(m, m);
    Eigen::FullPivLU<Mat> lu(Mat::Identity(m, m) - d4);
    if (!lu.isInvertible() || lu.rcond() < 1e-13) {
        throw NumericalFailure("lti_models", "feedback", "I - T4 is singular at infinity");
    }
    const Mat k = lu.inverse();
    const Mat b1 = s.B.leftCols(e), b2 = s.B.rightCols(m);
    const Mat c1 = s.C.topRows(e), c2 = s.C.bottomRows(m);
    StateSpaceModel r;
    r.A = s.A + b2 * k * c2;
    r.B = b1 + b2 * k * d3;
    r.C = c1 + d2 * k * c2;
    r.D = d1 + d2 * k * d3;
    return RationalTF(r);
}

RationalTF with_input_dressing(const RationalTF& t, const Mat& right) {
    StateSpaceModel r = t.realization();
    if (right.rows() != r.inputs() || right.cols() != r.inputs()) {
        throw DimensionError("lti_models", "with_input_dressing", "dressing must be square over the inputs");
    }
    r.B = r.B * right;
    r.D = r.D * right;
    return RationalTF(r);
}

LimitCheck limit_at_infinity(const RationalTF& tf, double R) {
    LimitCheck out{tf.S_inf(), 0.0};
    const cplx dirs[4] = {{1, 0}, {0, 1}, {-1, 0}, {0, -1}};
    for (auto d : dirs) out.deviation = std::max(out.deviation, norm2(tf.eval_unchecked(R * d) - out.S));
    return out;
}

std::vector<std::pair<int, int>> opposite_eigenvalue_pairs(const RationalTF& tf, double tol) {
    std::vector<std::pair<int, int>> out;
    const auto& p = tf.poles();
    for (int i = 0; i < p.size(); ++i) {
        for (int j = i; j < p.size(); ++j) {
            if (std::abs(p(i) + p(j)) < tol * (1.0 + std::abs(p(i)))) out.emplace_back(i, j);
        }
    }
    return out;
}

}  // namespace qc
