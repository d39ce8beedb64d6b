#pragma once

#include "qcascade/factor_builder.hpp"
#include "qcascade/rootfinder.hpp"

#include <functional>
#include <string>
#include <vector>

namespace qc {

using MatrixFn = std::function<Mat(cplx)>;

struct DetachReport {
    bool removable = false;
    cplx where = 0.0;
    double sigma_min_rel = 0.0;  // sigma_min / sigma_max of the remainder at the detached zero
    double det_gap = 0.0;        // worst Jensen gap of log|det| around a detached zero
    double growth = 0.0;         // worst norm ratio inner circle / outer circle around zero or pole
    std::string detail;
};

// Right detachment F(z) P(z)^{-1} together with a removability check on small
// circles around every zero and pole of P. A detached zero counts as removed
// when det of the remainder no longer vanishes there.
struct Detached {
    MatrixFn fn;
    DetachReport report;
};
DetachReport check_removable(const MatrixFn& remainder, const CanonicalFactor& p);
Detached detach(const MatrixFn& f, const CanonicalFactor& p);

enum class EntryKind { complex_zero, real_pair, degenerate_complex, degenerate_real };
std::string to_string(EntryKind k);

// One detachment step: a conjugate class of zeros (or a pair of real zeros).
struct PlanEntry {
    EntryKind kind = EntryKind::complex_zero;
    cplx z = 0.0;       // representative (Im >= 0) or first real zero
    double z2 = 0.0;    // second real zero of a real pair
    int record = -1;    // index into the exact zero records
    int record2 = -1;
    int ladder = -1;    // ladder group, -1 when unmatched
    int level = 0;      // |n| within the ladder (self-conjugate) or signed n
    cplx static_pos = 0.0;  // matched static zero of the representative
    // Ladder match of the second zero of a real pair.
    int ladder2 = -1;
    int level2 = 0;
    cplx static_pos2 = 0.0;
};

struct LadderGroup {
    cplx base = 0.0;  // static zero with 0 <= Im < period
    bool self_conjugate = false;
    std::vector<PlanEntry> entries;  // spiral order 0, +1, -1, +2, ...
};

struct FactorizationPlan {
    double period = 0.0;
    double inner_radius = 0.0;
    std::vector<PlanEntry> inner;  // ordered by |z|, ties by Im
    std::vector<LadderGroup> ladders;
};

// Orders exact zeros: an inner set (|z| < inner_radius or no static partner)
// followed by ladder groups matched to the static zeros by periodicity.
FactorizationPlan plan_order(const std::vector<ZeroPoleRecord>& exact, const std::vector<ZeroPoleRecord>& statics,
                             double period, double inner_radius);

enum class DegeneracyStrategy { perturb, phase_shift };

struct FactorizeOptions {
    int truncation = 3;  // ladder levels |n| <= truncation per group
    DegeneracyStrategy strategy = DegeneracyStrategy::perturb;
    double perturb_eps = 1e-3;
    double phase_delta = 1e-3;  // loop phase for the phase-shift strategy
    double tol_structural = 1e-6;
    // Close every ladder after the explicit levels with its closed-form static tail.
    bool tail_closure = false;
    // Half-height of the imaginary-axis window used for B; 0 selects two periods.
    double window = 0.0;
};

struct StepDiagnostic {
    int index = 0;
    std::string kind;
    cplx z = 0.0;
    double eigen_residual = 0.0;  // |R x| / |R| for the transported eigenvector
    DetachReport report;
};

struct CascadeResult {
    std::vector<CanonicalFactor> factors;  // P_1 first (the first detached)
    Mat B;            // mean remainder on the imaginary axis
    double B_dispersion = 0.0;
    Mat B_origin;     // remainder at z = 0
    std::vector<StepDiagnostic> diagnostics;
    std::vector<std::string> notes;

    // P_k(z) ... P_1(z)
    Mat product(cplx z) const;
    // B P_k ... P_1 and B_origin P_k ... P_1
    Mat eval(cplx z) const;
    Mat eval_origin(cplx z) const;
    // P'_n = B P_n B^{-1}, so that T = P'_k ... P'_1 B.
    std::vector<CanonicalFactor> conjugated_factors() const;
    // Remainder T(z) (P_k ... P_1)^{-1}(z).
    static Mat remainder(const MatrixFn& t, const std::vector<CanonicalFactor>& factors, cplx z);
};

// Finite factorization of a delay-free system (all zeros detached).
CascadeResult factorize_rational(const RationalTF& tf, double tol_structural = 1e-6);

// Static surrogate: one closed-form ladder factor per static ladder, or the
// explicit levels |n| <= truncation when truncation >= 0.
CascadeResult static_factorize(const DelayNetwork& n, int truncation = -1);

// Exact-system cascade. `exact` are the zero records of the network actually
// factorized (after a phase shift when that strategy is used).
CascadeResult factorize(const DelayNetwork& n, const FactorizationPlan& plan, const std::vector<ZeroPoleRecord>& exact,
                        const FactorizeOptions& opt);

// One-call pipeline: scans zeros in the imaginary window [-h, h] (h from
// the truncation and inner radius), plans, applies the strategy and factorizes.
struct Pipeline {
    DelayNetwork network;  // network that was factorized
    std::vector<ZeroPoleRecord> exact_zeros;
    std::vector<ZeroPoleRecord> static_zeros;
    FactorizationPlan plan;
    CascadeResult result;
};
Pipeline run_pipeline(const DelayNetwork& n, const FactorizeOptions& opt, double inner_radius = 0.5);

struct ProfilePoint {
    int truncation = 0;
    std::size_t factors = 0;
    double error = 0.0;  // origin-matched max relative error on the axis grid
};
// Refactorizes `n` at every truncation in `ks` (records must cover the
// largest) and measures the error against `reference`.
std::vector<ProfilePoint> residual_profile(const DelayNetwork& n, const DelayNetwork& reference,
                                           const FactorizationPlan& plan,
                                           const std::vector<ZeroPoleRecord>& exact, FactorizeOptions opt,
                                           const std::vector<int>& ks, double h, int samples = 401);

struct SinhOracle {
    cplx truncated;  // prod_{|n| <= N} (z - z_n) / (z + conj z_n)
    cplx closed;     // sinh(pi/P (z - z_m)) / sinh(pi/P (z + conj z_m))
};
// Requires 0 < Im z_m < P, Im z_m != P/2.
SinhOracle static_sinh_oracle(cplx z_m, double period, cplx z, int N);

// max |T(z) - T_hat(z)| / |T(z)| over `samples` points z = i w, w in [-h, h].
double relative_error_on_axis(const MatrixFn& exact, const MatrixFn& approx, double h, int samples = 401);

}  // namespace qc
