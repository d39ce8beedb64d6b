#pragma once

#include "qcascade/delay_network.hpp"

#include <functional>
#include <string>
#include <vector>

namespace qc {

struct Rect {
    double re_lo = 0.0, re_hi = 0.0, im_lo = 0.0, im_hi = 0.0;
    cplx center() const { return {0.5 * (re_lo + re_hi), 0.5 * (im_lo + im_hi)}; }
    bool contains(cplx z, double pad = 0.0) const {
        return z.real() >= re_lo - pad && z.real() <= re_hi + pad && z.imag() >= im_lo - pad && z.imag() <= im_hi + pad;
    }
};

struct ContourCount {
    Rect rect;
    int winding = 0;
    double residual = 0.0;  // |total phase / 2 pi - winding|
    int samples_used = 0;
};

using ScalarFn = std::function<cplx(cplx)>;
// Scalar target whose evaluation formula may depend on the half-plane form.
using FormFn = std::function<cplx(cplx, LoopForm)>;

// Argument principle on the rectangle boundary with adaptive refinement.
// `phase_rate` is an upper estimate of |d arg f / dz| used for the initial grid.
ContourCount count_in_rectangle(const ScalarFn& f, const Rect& rect, double phase_rate = 4.0);
// Winding on a circle (polygon with adaptive refinement).
int count_on_circle(const ScalarFn& f, cplx center, double radius, int* samples = nullptr);

struct RootCluster {
    cplx position;
    int multiplicity = 1;
    int iterations = 0;
};

struct ScanOptions {
    double dedup = 1e-8;
    int max_newton = 100;
    double cluster_radius = 1e-5;  // relative to 1 + |z|
    int max_depth = 60;
    double phase_rate = 4.0;
};

// Roots of an entire target inside `region` by subdivision + refinement.
// The sum of multiplicities equals the region's winding number.
std::vector<RootCluster> find_roots(const FormFn& f, const Rect& region, const ScanOptions& opt = {});

enum class RootKind { zero, pole };
std::string to_string(RootKind k);

struct ZeroPoleRecord {
    cplx position;
    RootKind kind = RootKind::zero;
    Which which = Which::exact;
    // Zero: right null vector x of T~(position). Pole: the column J x where x is
    // the null vector at the mirrored zero; the pole row vector is x^dagger J.
    Vec eigenvector;
    Mat eigenspace;           // all directions with small singular value
    double residual = 0.0;    // sigma_min / sigma_max at the (mirrored) zero
    double sigma2_rel = 1.0;  // second-smallest singular value / sigma_max
    double j_norm = 0.0;      // x^dagger J x
    int multiplicity = 1;
    bool degenerate = false;
    bool refined = false;
    int partner_neg_conj = -1;
    int partner_conj = -1;

    bool is_real(double tol = 1e-9) const { return std::abs(position.imag()) <= tol * (1.0 + std::abs(position)); }
};

// Default scan rate for a network: doubled total delay plus a margin.
double default_phase_rate(const DelayNetwork& n);

// The region is padded outward when a root sits on its boundary; the
// rectangle finally scanned is reported through `scanned`.
std::vector<ZeroPoleRecord> subdivide_and_refine(const DelayNetwork& n, const Rect& region, RootKind kind,
                                                 Which which, const ScanOptions& opt = {}, Rect* scanned = nullptr);

// Independent argument-principle count of the determinant target of `kind`
// over `region`, using the loop form of the region centre.
int winding_number(const DelayNetwork& n, const Rect& region, RootKind kind, Which which = Which::exact);

// Fills eigenvector, eigenspace, residuals and the degenerate flag.
void eigenvector_at(const DelayNetwork& n, ZeroPoleRecord& rec);
// Same for a matrix-valued function (used for rational transfer functions).
void eigenvector_at(const std::function<Mat(cplx)>& tf, ZeroPoleRecord& rec);

// Links (z, -conj z) and (z, conj z) partners; throws NumericalFailure naming
// unpaired records.
void pair_records(std::vector<ZeroPoleRecord>& records, double tol = 1e-7);

// Zeros of a delay-free rational transfer function: eigenvalues of A - B D^{-1} C.
std::vector<ZeroPoleRecord> rational_zero_records(const RationalTF& tf);

}  // namespace qc
