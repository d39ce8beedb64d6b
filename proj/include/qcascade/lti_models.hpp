#pragma once

#include "qcascade/core_algebra.hpp"

#include <vector>

namespace qc {

// Open quantum system with n modes and m ports: scattering S (m x m unitary),
// coupling L = L- a + L+ a^* (m x n blocks), Hamiltonian H = 1/2 a^dagger Omega a
// with Omega = Delta(omega, eps) (omega Hermitian, eps symmetric, n x n).
struct SLHModel {
    Mat S;
    Mat L_minus;
    Mat L_plus;
    Mat omega;
    Mat eps;

    int modes() const { return static_cast<int>(omega.rows()); }
    int ports() const { return static_cast<int>(S.rows()); }
    Mat coupling() const;     // Delta(L-, L+), 2m x 2n
    Mat hamiltonian() const;  // Delta(omega, eps), 2n x 2n
    void validate(double tol = 1e-10) const;
};

struct StateSpaceModel {
    Mat A, B, C, D;

    int states() const { return static_cast<int>(A.rows()); }
    int outputs() const { return static_cast<int>(D.rows()); }
    int inputs() const { return static_cast<int>(D.cols()); }
    void validate_shapes() const;
    Residual doubled_up_residual(double tol = 1e-10) const;
};

StateSpaceModel slh_to_statespace(const SLHModel& m);

// T(z) = D + C (zI - A)^{-1} B with cached eigenvalues of A for the pole guard.
class RationalTF {
public:
    RationalTF() = default;
    explicit RationalTF(StateSpaceModel ss);

    const StateSpaceModel& realization() const { return ss_; }
    const Eigen::VectorXcd& poles() const { return poles_; }
    const Mat& S_inf() const { return ss_.D; }
    int outputs() const { return ss_.outputs(); }
    int inputs() const { return ss_.inputs(); }
    int states() const { return ss_.states(); }

    // Throws PoleProximityError within 1e-9 (1 + |lambda|) of an eigenvalue of A.
    Mat eval(cplx z) const;
    // Same without the guard; used on contours that are known to avoid poles.
    Mat eval_unchecked(cplx z) const;
    // Distance from z to the nearest eigenvalue of A, relative to the guard scale.
    bool near_pole(cplx z, double rel = 1e-9) const;

private:
    StateSpaceModel ss_;
    Eigen::VectorXcd poles_;
};

Mat eval(const RationalTF& tf, cplx z);

RationalTF inverse(const RationalTF& tf);
// Block-diagonal stacking of two systems (ports of a first, then ports of b).
RationalTF concat(const RationalTF& a, const RationalTF& b);
// Signal passes through `first` and then `second`: T = T_second T_first.
RationalTF series(const RationalTF& first, const RationalTF& second);
// Closes internal ports without delay: T1 + T2 (I - T4)^{-1} T3. The first
// `external_dim` rows/columns are external, the rest internal.
RationalTF feedback(const RationalTF& t, int external_dim);
// Right-multiplies the internal input ports (columns external_dim..) by phase.
RationalTF with_input_dressing(const RationalTF& t, const Mat& right);

struct LimitCheck {
    Mat S;
    double deviation = 0.0;  // max |eval(R e^{i theta}) - D| over 4 directions at R
};
LimitCheck limit_at_infinity(const RationalTF& tf, double R = 1e8);

// Eigenvalue pairs with lambda_i + lambda_j ~ 0 (reported, not enforced).
std::vector<std::pair<int, int>> opposite_eigenvalue_pairs(const RationalTF& tf, double tol = 1e-8);

}  // namespace qc
