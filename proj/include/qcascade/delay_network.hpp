#pragma once

#include "qcascade/lti_models.hpp"

#include <string>
#include <vector>

namespace qc {

struct DelaySpec {
    std::vector<double> delays;  // one per internal port
    double base_period = 1.0;

    // Integer multiples of the base period; throws AssumptionViolation (4) if
    // a delay is not commensurate within 1e-12 relative.
    std::vector<int> multiples() const;
    double commensurability_residual() const;
    double min_delay() const;
    // Imaginary-direction period of E(z) and of f_S.
    double period() const;
};

// 2M x 2M diagonal delay operator, each delay repeated for both field components.
Mat delay_operator(const DelaySpec& d, cplx z);

// Which half-plane form is used to close the loop.
enum class LoopForm { positive, negative };
inline LoopForm form_for(double re) { return re >= 0.0 ? LoopForm::positive : LoopForm::negative; }

enum class Which { exact, static_surrogate };

struct StaticBlocks {
    Mat S1, S2, S3, S4;
};

class DelayNetwork {
public:
    // external_ports/internal_ports count physical ports; matrices are doubled.
    DelayNetwork(RationalTF open, int external_ports, DelaySpec delays);

    const RationalTF& open_tf() const { return open_; }
    const DelaySpec& delays() const { return delays_; }
    const StaticBlocks& static_blocks() const { return static_; }
    int external_ports() const { return n_ext_; }
    int internal_ports() const { return n_int_; }
    int ext_dim() const { return 2 * n_ext_; }
    int int_dim() const { return 2 * n_int_; }

    // Closed-loop transfer function T~(z); throws PoleProximityError at poles.
    Mat closed_tf(cplx z) const;
    Mat closed_tf(cplx z, LoopForm form) const;
    // Closed loop of the constant limit S.
    Mat static_tf(cplx z) const;
    Mat eval(cplx z, Which which) const { return which == Which::exact ? closed_tf(z) : static_tf(z); }

    // f_T = det(I - T4 E) or f_S = det(I - S4 E).
    cplx loop_determinant(cplx z, Which which) const;

    // Entire scalar functions whose roots are the poles and the zeros of the
    // closed loop: det of the closed-loop characteristic matrix
    // [[zI-A, -B2], [-E C2, I - E D4]] and of the delayed system matrix.
    // The negative form multiplies the internal rows by E(-z).
    cplx pole_target(cplx z, LoopForm form) const;
    cplx zero_target(cplx z, LoopForm form) const;

    // Same network with the open system replaced by its limit S (no states).
    DelayNetwork static_surrogate() const;

private:
    Mat characteristic_matrix(cplx z, LoopForm form, bool with_external) const;

    RationalTF open_;
    DelaySpec delays_;
    int n_ext_ = 0;
    int n_int_ = 0;
    StaticBlocks static_;
};

struct SearchStrip {
    double c_low = 0.0;   // analytic bound, widened
    double c_high = 0.0;
    double raw_low = 0.0;  // before widening
    double raw_high = 0.0;
    double period = 0.0;
    double sigma_min_T4 = 0.0;
    double sigma_max_T4 = 0.0;
    // Symmetric real range used for both zeros and poles.
    double search_re_lo = 0.0;
    double search_re_hi = 0.0;
};

SearchStrip compute_strip(const DelayNetwork& n);

enum class CheckStatus { pass, warn, fail };
std::string to_string(CheckStatus s);

struct AssumptionCheck {
    int id = 0;  // 1..6; 0 for auxiliary warnings
    std::string name;
    CheckStatus status = CheckStatus::pass;
    double measured = 0.0;
    std::string detail;
};

struct AssumptionReport {
    std::vector<AssumptionCheck> checks;
    bool all_pass() const;
    const AssumptionCheck* first_failure() const;
};

AssumptionReport validate_assumptions(const DelayNetwork& n);

}  // namespace qc

namespace qc {

// Roots w of p(w) = det(I - S4 diag(w^{k_i})), k_i the delay multiples; each
// gives the static pole ladder z = -log(w)/base + i (2 pi / base) n.
std::vector<cplx> static_loop_roots_w(const DelayNetwork& n);
// Static poles with imaginary part in [im_lo, im_hi), sorted by (Im, Re).
std::vector<cplx> static_poles_in_window(const DelayNetwork& n, double im_lo, double im_hi);

}  // namespace qc
