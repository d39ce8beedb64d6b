#pragma once

#include "qcascade/delay_network.hpp"

#include <vector>

namespace qc {

enum class FactorVariant { complex_pair, real_pair, modified_degenerate, static_ladder };
std::string to_string(FactorVariant v);

// One elementary factor P(z) = I - V V^flat + V F(z) V^flat with V 2N x 2
// doubled-up, V^flat V = I.
struct CanonicalFactor {
    FactorVariant variant = FactorVariant::complex_pair;
    Mat V;
    cplx z0 = 0.0;           // complex / modified: zero z0 (and conj z0)
    double z1 = 0.0, z2 = 0.0;  // real: zeros z1 (eigenvector v1) and z2 (v2)
    Vec v1, v2;              // stored eigenvectors (normalized as used in V)
    // static_ladder: zeros z0 + i P n for every n not listed in ladder_excluded.
    double ladder_period = 0.0;
    std::vector<int> ladder_excluded;

    Mat eval(cplx z) const;
    Mat inverse_at(cplx z) const;
    int dim() const { return static_cast<int>(V.rows()); }
    // Finite zero/pole sets (empty for static_ladder).
    std::vector<cplx> zeros() const;
    std::vector<cplx> poles() const;

private:
    Mat middle(cplx z, bool inverse) const;
};

// Blaschke ratio (z - a)/(z + conj(a)).
cplx blaschke(cplx z, cplx a);

// Phase-fixes v so that v = Sigma v^#; throws if v is (numerically) zero.
Vec sigma_real(const Vec& v);

CanonicalFactor build_complex_factor(cplx z0, const Vec& v0, double tol = 1e-6);
CanonicalFactor build_real_factor(double z1, double z2, const Vec& v1, const Vec& v2, double tol = 1e-6);
CanonicalFactor build_modified_degenerate_factor(cplx z0, const Mat& V);

// Degenerate-zero workarounds driven by a multi-dimensional eigenspace.
CanonicalFactor build_degenerate_real_factor(double z, const Mat& eigenspace);
CanonicalFactor build_degenerate_complex_factor(cplx z0, const Mat& eigenspace, double perturb_eps = 1e-3);
// Closed-form product over the ladder z_m + i P n, n not in `excluded`.
CanonicalFactor build_static_ladder_factor(cplx z_m, double period, const Mat& V, std::vector<int> excluded = {});
// Scalar part of that product: sinh ratio divided by the excluded Blaschke ratios.
cplx ladder_scalar(cplx z, cplx z_m, double period, const std::vector<int>& excluded);

enum class OmegaVariant { complex_case, real_case };

struct OmegaCanonical {
    OmegaVariant variant = OmegaVariant::complex_case;
    double c = 0.0;
    Mat S;  // J-unitary, doubled-up; complex: Omega = c S^2, real: S Omega S^dagger = Delta(0, i c)
    double z1 = 0.0, z2 = 0.0;  // real-case zeros kappa/2 -+ c when kappa supplied
};

// Omega = [[a, b e^{i phi}], [b e^{-i phi}, a]].
OmegaCanonical canonicalize_omega(const Mat& omega, double kappa = 0.0, double tol = 1e-12);

// Multiplies the internal input ports by e^{i delta} / e^{-i delta}.
DelayNetwork apply_loop_phase_shift(const DelayNetwork& n, double delta);

struct BlaschkePotapovForm {
    Mat M;  // J-unitary
    cplx a_root;
    Mat eval(cplx z) const;
};
BlaschkePotapovForm to_blaschke_potapov_form(const CanonicalFactor& f);

struct SLHParams {
    Vec L_minus, L_plus;  // one entry per port
    double omega = 0.0;
    cplx eps = 0.0;
    double kappa = 0.0;
    double c = 0.0;
    SLHModel model() const;
};
SLHParams factor_to_slh(const CanonicalFactor& f);

}  // namespace qc
