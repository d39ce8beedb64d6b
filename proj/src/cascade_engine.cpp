#include "qcascade/cascade_engine.hpp"

#include "qcascade/errors.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <numbers>
#include <optional>
#include <set>
#include <sstream>
#include <string>

namespace qc {

namespace {

// Minimum-cost assignment on a square cost matrix (Hungarian method).
// Returns col_of[row].
std::vector<int> assign_min_cost(const std::vector<std::vector<double>>& cost) {
    const int n = static_cast<int>(cost.size());
    const double inf = std::numeric_limits<double>::infinity();
    std::vector<double> u(n + 1, 0.0), v(n + 1, 0.0);
    std::vector<int> p(n + 1, 0), way(n + 1, 0);
    for (int i = 1; i <= n; ++i) {
        p[0] = i;
        int j0 = 0;
        std::vector<double> minv(n + 1, inf);
        std::vector<bool> used(n + 1, false);
        do {
            used[j0] = true;
            const int i0 = p[j0];
            double delta = inf;
            int j1 = 0;
            for (int j = 1; j <= n; ++j) {
                if (used[j]) continue;
                const double cur = cost[i0 - 1][j - 1] - u[i0] - v[j];
                if (cur < minv[j]) {
                    minv[j] = cur;
                    way[j] = j0;
                }
                if (minv[j] < delta) {
                    delta = minv[j];
                    j1 = j;
                }
            }
            for (int j = 0; j <= n; ++j) {
                if (used[j]) {
                    u[p[j]] += delta;
                    v[j] -= delta;
                } else {
                    minv[j] -= delta;
                }
            }
            j0 = j1;
        } while (p[j0] != 0);
        do {
            const int j1 = way[j0];
            p[j0] = p[j1];
            j0 = j1;
        } while (j0);
    }
    std::vector<int> col_of(n, -1);
    for (int j = 1; j <= n; ++j)
        if (p[j] > 0) col_of[p[j] - 1] = j - 1;
    return col_of;
}

constexpr double kPi = std::numbers::pi;

std::string fmt_c(cplx z) {
    std::ostringstream os;
    os.precision(10);
    os << z.real() << (z.imag() < 0 ? "-" : "+") << std::abs(z.imag()) << "i";
    return os.str();
}

std::string num(double x) {
    std::ostringstream os;
    os.precision(4);
    os << x;
    return os.str();
}


// Residue of y modulo p in [0, p).
double wrap(double y, double p) {
    double r = std::fmod(y, p);
    if (r < 0) r += p;
    if (r >= p) r -= p;
    return r;
}

// Circular distance between residues.
double circ(double a, double b, double p) {
    const double d = std::abs(wrap(a - b, p));
    return std::min(d, p - d);
}

std::vector<cplx> circle(cplx c, double r, int k) {
    std::vector<cplx> out;
    for (int i = 0; i < k; ++i) out.push_back(c + std::polar(r, 2.0 * kPi * (i + 0.25) / k));
    return out;
}

// Imaginary-axis sample points for the constant prefactor, in conjugate
// pairs so that the mean of a doubled-up remainder is doubled-up.
std::vector<cplx> axis_points(double h) {
    std::vector<cplx> out;
    for (int k = 0; k < 4; ++k) {
        const double y = 0.93 * h * (2.0 * k + 1.0) / 8.0 + 0.0137;
        out.emplace_back(0.0, y);
        out.emplace_back(0.0, -y);
    }
    return out;
}

void estimate_prefactor(const MatrixFn& t, const std::vector<CanonicalFactor>& f, double h, CascadeResult& r) {
    std::vector<Mat> s;
    for (cplx z : axis_points(h)) s.push_back(CascadeResult::remainder(t, f, z));
    r.B = Mat::Zero(s[0].rows(), s[0].cols());
    for (const auto& m : s) r.B += m;
    r.B /= static_cast<double>(s.size());
    r.B_dispersion = 0.0;
    const double nb = norm2(r.B);
    for (const auto& m : s) r.B_dispersion = std::max(r.B_dispersion, norm2(m - r.B) / nb);
    try {
        r.B_origin = CascadeResult::remainder(t, f, 0.0);
    } catch (const PoleProximityError&) {
        r.B_origin = r.B;
        r.notes.push_back("remainder has a pole at the origin; origin prefactor replaced by B");
    }
}

// Frame V = [v, Sigma v^#] of a Sigma-invariant two-dimensional eigenspace.
Mat eigenspace_frame(cplx z, const Mat& e, double eps) { return build_degenerate_complex_factor(z, e, eps).V; }

struct KernelInfo {
    Mat basis;
    int dim = 0;
    double rel = 0.0;
};

KernelInfo kernel_of(const MatrixFn& f, cplx z, double thresh = 1e-6) {
    Eigen::JacobiSVD<Mat> svd(f(z), Eigen::ComputeFullV);
    const auto& sv = svd.singularValues();
    const Eigen::Index d = sv.size();
    double scale = sv(0);
    for (cplx dz : {cplx(0.05, 0), cplx(-0.05, 0), cplx(0, 0.05), cplx(0, -0.05)}) {
        try {
            scale = std::max(scale, norm2(f(z + dz)));
        } catch (const PoleProximityError&) {
        }
    }
    KernelInfo k;
    for (Eigen::Index i = 0; i < d; ++i)
        if (sv(i) <= thresh * scale) ++k.dim;
    k.rel = sv(d - 1) / scale;
    k.basis = svd.matrixV().rightCols(std::max(k.dim, 1));
    return k;
}

Mat projector(const Mat& basis) {
    const Mat g = basis.adjoint() * basis;
    return basis * g.inverse() * basis.adjoint();
}

}  // namespace

std::string to_string(EntryKind k) {
    switch (k) {
        case EntryKind::complex_zero: return "complex_zero";
        case EntryKind::real_pair: return "real_pair";
        case EntryKind::degenerate_complex: return "degenerate_complex";
        case EntryKind::degenerate_real: return "degenerate_real";
    }
    return "?";
}

DetachReport check_removable(const MatrixFn& remainder, const CanonicalFactor& p) {
    DetachReport rep;
    rep.removable = true;
    std::vector<cplx> zs = p.zeros(), ps = p.poles();
    if (p.variant == FactorVariant::static_ladder) {
        const std::set<int> ex(p.ladder_excluded.begin(), p.ladder_excluded.end());
        for (int n = -4; n <= 4; ++n) {
            if (ex.count(n)) continue;
            const cplx z = p.z0 + cplx(0.0, p.ladder_period * n);
            zs.push_back(z);
            ps.push_back(-std::conj(z));
            if (ex.empty() && std::abs(n) > 1) break;
        }
    }
    std::ostringstream detail;
    const auto probe = [&](cplx w, bool is_zero) {
        const double rho = 1e-5 * (1.0 + std::abs(w));
        double outer = 0.0, inner = 0.0, log_outer = 0.0, log_inner = 0.0;
        Mat mean;
        const auto pts = circle(w, rho, 16);
        for (cplx q : pts) {
            const Mat m = remainder(q);
            outer = std::max(outer, norm2(m));
            log_outer += std::log(std::abs(m.determinant()));
            mean = mean.size() ? Mat(mean + m) : m;
        }
        for (cplx q : circle(w, 0.1 * rho, 16)) {
            const Mat m = remainder(q);
            inner = std::max(inner, norm2(m));
            log_inner += std::log(std::abs(m.determinant()));
        }
        const double growth = inner / outer;
        rep.growth = std::max(rep.growth, growth);
        if (growth > 3.0) {
            rep.removable = false;
            detail << (is_zero ? "zero " : "pole ") << fmt_c(w) << " not removed (norm grows by " << num(growth)
                   << " toward it); ";
        }
        if (is_zero) {
            mean /= static_cast<double>(pts.size());
            Eigen::JacobiSVD<Mat> svd(mean);
            const auto& sv = svd.singularValues();
            const double rel = sv(sv.size() - 1) / sv(0);
            if (rep.where == cplx(0.0) || rel < rep.sigma_min_rel) {
                rep.sigma_min_rel = rel;
                rep.where = w;
            }
            // log|det| is harmonic away from zeros; a zero of order m left
            // inside the inner circle opens a gap of m ln 10 between the means.
            const double gap = (log_outer - log_inner) / 16.0;
            rep.det_gap = std::max(rep.det_gap, gap);
            if (gap > 0.5 * std::log(10.0)) {
                rep.removable = false;
                detail << "remainder still singular at " << fmt_c(w) << " (log|det| gap " << num(gap)
                       << ", sigma_min/sigma_max " << num(rel) << "); eigenvector mismatch or an undetected multiple zero; ";
            }
        }
    };
    try {
        for (cplx w : zs) probe(w, true);
        for (cplx w : ps) probe(w, false);
    } catch (const PoleProximityError& e) {
        rep.removable = false;
        detail << "evaluation failed: " << e.what();
    }
    rep.detail = detail.str();
    return rep;
}

Detached detach(const MatrixFn& f, const CanonicalFactor& p) {
    Detached d;
    d.fn = [f, p](cplx z) { return Mat(f(z) * p.inverse_at(z)); };
    d.report = check_removable(d.fn, p);
    return d;
}

FactorizationPlan plan_order(const std::vector<ZeroPoleRecord>& exact, const std::vector<ZeroPoleRecord>& statics,
                             double period, double inner_radius) {
    FactorizationPlan plan;
    plan.period = period;
    plan.inner_radius = inner_radius;
    const double tol_l = 1e-6;

    // Static ladders: residues of the static zeros modulo the period.
    std::vector<cplx> bases;
    for (const auto& s : statics) {
        if (s.kind != RootKind::zero) continue;
        const double y = wrap(s.position.imag(), period);
        bool found = false;
        for (cplx b : bases)
            if (std::abs(b.real() - s.position.real()) < tol_l && circ(b.imag(), y, period) < tol_l) found = true;
        if (!found) bases.emplace_back(s.position.real(), y < period - tol_l ? y : 0.0);
    }
    // Canonical representatives: residue in [0, P/2].
    std::vector<int> group_of(bases.size(), -1);
    for (size_t i = 0; i < bases.size(); ++i) {
        const double y = bases[i].imag();
        if (y > 0.5 * period + tol_l) continue;
        LadderGroup g;
        g.base = bases[i];
        g.self_conjugate = y < tol_l || std::abs(y - 0.5 * period) < tol_l;
        group_of[i] = static_cast<int>(plan.ladders.size());
        plan.ladders.push_back(g);
    }
    for (size_t i = 0; i < bases.size(); ++i) {
        if (group_of[i] >= 0) continue;
        for (size_t g = 0; g < plan.ladders.size(); ++g) {
            const cplx b = plan.ladders[g].base;
            if (std::abs(b.real() - bases[i].real()) < tol_l && circ(period - b.imag(), bases[i].imag(), period) < tol_l)
                group_of[i] = static_cast<int>(g);
        }
        if (group_of[i] < 0) {
            throw NumericalFailure("cascade_engine", "plan_order",
                                   "static ladder " + fmt_c(bases[i]) + " has no conjugate ladder");
        }
    }
    // Static representatives (Im >= 0); conjugates below the axis are implied.
    std::vector<cplx> reps;
    for (const auto& st : statics) {
        if (st.kind != RootKind::zero || st.position.imag() < -1e-9 * (1.0 + std::abs(st.position))) continue;
        reps.push_back(st.position.imag() < 0 ? cplx(st.position.real(), 0.0) : st.position);
    }
    // Static zeros near the top of the scanned window may have their exact
    // partner outside it; exact zeros there are left unmatched and dropped.
    double y_top = 0.0;
    for (cplx w : reps) y_top = std::max(y_top, w.imag());
    for (const auto& r : exact) y_top = std::max(y_top, std::abs(r.position.imag()));
    const double y_edge = period > 0 ? y_top - 0.5 * period : std::numeric_limits<double>::infinity();

    // Level of a static position on canonical group g.
    const auto level_on = [&](int g, cplx w) {
        const LadderGroup& lg = plan.ladders[static_cast<size_t>(g)];
        const long n = std::lround((w.imag() - lg.base.imag()) / period);
        if (std::abs(w.real() - lg.base.real()) < 1e-6 &&
            std::abs(w.imag() - lg.base.imag() - period * static_cast<double>(n)) < 1e-6)
            return std::optional<int>(static_cast<int>(n));
        return std::optional<int>();
    };
    const auto group_for = [&](cplx w) {
        for (size_t b = 0; b < bases.size(); ++b) {
            if (std::abs(w.real() - bases[b].real()) < 1e-6 && circ(wrap(w.imag(), period), bases[b].imag(), period) < 1e-6)
                return group_of[b];
        }
        return -1;
    };
    // Ladder level of the static zero w, folded by the symmetry of the group.
    const auto ladder_level = [&](cplx w, int& g_out, int& lvl_out) {
        const int g = group_for(w);
        if (g < 0) return false;
        auto lv = level_on(g, w);
        if (!lv) lv = level_on(g, std::conj(w));
        if (!lv) throw NumericalFailure("cascade_engine", "plan_order", "ladder level lookup failed at " + fmt_c(w));
        int n = *lv;
        const LadderGroup& lg = plan.ladders[static_cast<size_t>(g)];
        if (lg.self_conjugate) {
            if (lg.base.imag() < 1e-6) {
                n = std::abs(n);
            } else if (n < 0) {
                n = -n - 1;
            }
        }
        g_out = g;
        lvl_out = n;
        return true;
    };

    std::vector<PlanEntry> cand;
    std::vector<bool> used(exact.size(), false);
    for (size_t i = 0; i < exact.size(); ++i) {
        const auto& r = exact[i];
        if (r.kind != RootKind::zero || used[i]) continue;
        const bool real = r.is_real();
        if (!real && r.position.imag() < 0) {
            bool has_rep = false;
            for (const auto& q : exact)
                if (q.kind == RootKind::zero && std::abs(q.position - std::conj(r.position)) < 1e-7 * (1.0 + std::abs(r.position)))
                    has_rep = true;
            if (has_rep) continue;
        }
        used[i] = true;
        PlanEntry e;
        e.z = real ? cplx(r.position.real(), 0.0) : (r.position.imag() < 0 ? std::conj(r.position) : r.position);
        e.record = static_cast<int>(i);
        if (r.degenerate) {
            e.kind = real ? EntryKind::degenerate_real : EntryKind::degenerate_complex;
        } else {
            e.kind = real ? EntryKind::real_pair : EntryKind::complex_zero;
        }
        cand.push_back(e);
    }

    // Static and exact zeros are matched by a minimum-cost assignment on the
    // squared distance; pairs further apart than half a period are excluded.
    const double far = period > 0 ? 0.5 * period : 1.0;
    const double forbidden = 1e6 * (1.0 + far * far);
    const size_t dim = std::max(cand.size(), reps.size());
    std::vector<std::vector<double>> cost(dim, std::vector<double>(dim, forbidden));
    for (size_t c = 0; c < cand.size(); ++c)
        for (size_t k = 0; k < reps.size(); ++k) {
            const double d = std::abs(cand[c].z - reps[k]);
            if (d < far) cost[c][k] = d * d;
        }
    const std::vector<int> match = dim > 0 ? assign_min_cost(cost) : std::vector<int>{};
    std::vector<bool> drop(cand.size(), false);
    for (size_t c = 0; c < cand.size(); ++c) {
        const int k = match[c];
        if (k >= 0 && static_cast<size_t>(k) < reps.size() && cost[c][static_cast<size_t>(k)] < forbidden) {
            int g = -1, lvl = 0;
            if (ladder_level(reps[static_cast<size_t>(k)], g, lvl)) {
                cand[c].ladder = g;
                cand[c].level = lvl;
                cand[c].static_pos = reps[static_cast<size_t>(k)];
                continue;
            }
        }
        if (!reps.empty() && cand[c].z.imag() > y_edge) drop[c] = true;
    }
    std::vector<PlanEntry> kept;
    for (size_t c = 0; c < cand.size(); ++c)
        if (!drop[c]) kept.push_back(cand[c]);
    cand.swap(kept);

    std::vector<PlanEntry> real_simple;
    for (const auto& e : cand) {
        if (e.kind == EntryKind::real_pair) {
            real_simple.push_back(e);
        } else if (e.ladder >= 0 && std::abs(e.z) >= inner_radius) {
            plan.ladders[static_cast<size_t>(e.ladder)].entries.push_back(e);
        } else {
            plan.inner.push_back(e);
        }
    }

    // Simple real zeros are paired greedily by the largest |v1^dagger J v2|.
    std::sort(real_simple.begin(), real_simple.end(), [](const auto& a, const auto& b) { return std::abs(a.z) < std::abs(b.z); });
    std::vector<bool> paired(real_simple.size(), false);
    for (size_t i = 0; i < real_simple.size(); ++i) {
        if (paired[i]) continue;
        const Vec vi = sigma_real(exact[static_cast<size_t>(real_simple[i].record)].eigenvector);
        const Mat j = signature(static_cast<int>(vi.size()));
        double best = -1.0;
        size_t bj = i;
        for (size_t k = i + 1; k < real_simple.size(); ++k) {
            if (paired[k]) continue;
            const Vec vk = sigma_real(exact[static_cast<size_t>(real_simple[k].record)].eigenvector);
            const double g = std::abs(vi.dot(j * vk));
            if (g > best) {
                best = g;
                bj = k;
            }
        }
        if (bj == i) {
            throw DegeneracyError("cascade_engine", "plan_order",
                                  "simple real zero at " + num(real_simple[i].z.real()) +
                                      " has no real partner; real zeros must be detached in pairs");
        }
        paired[i] = paired[bj] = true;
        PlanEntry e = real_simple[i];
        e.z2 = real_simple[bj].z.real();
        e.record2 = real_simple[bj].record;
        e.ladder2 = real_simple[bj].ladder;
        e.level2 = real_simple[bj].level;
        e.static_pos2 = real_simple[bj].static_pos;
        plan.inner.push_back(e);
    }

    const auto key = [](const PlanEntry& e) {
        const double m = e.kind == EntryKind::real_pair ? std::min(std::abs(e.z), std::abs(e.z2)) : std::abs(e.z);
        return std::pair<double, double>(m, e.z.imag());
    };
    std::stable_sort(plan.inner.begin(), plan.inner.end(), [&](const auto& a, const auto& b) { return key(a) < key(b); });
    for (auto& g : plan.ladders) {
        const auto spiral = [&](int n) { return g.self_conjugate ? n : (n > 0 ? 2 * n - 1 : -2 * n); };
        std::stable_sort(g.entries.begin(), g.entries.end(),
                         [&](const auto& a, const auto& b) { return spiral(a.level) < spiral(b.level); });
        for (size_t i = 1; i < g.entries.size(); ++i) {
            if (g.entries[i].level == g.entries[i - 1].level) {
                throw NumericalFailure("cascade_engine", "plan_order",
                                       "two exact zeros matched to ladder level " + std::to_string(g.entries[i].level) +
                                           " of " + fmt_c(g.base));
            }
        }
    }
    return plan;
}

Mat CascadeResult::product(cplx z) const {
    const int d = factors.empty() ? static_cast<int>(B.rows()) : factors.front().dim();
    Mat m = Mat::Identity(d, d);
    for (const auto& f : factors) m = f.eval(z) * m;
    return m;
}

Mat CascadeResult::eval(cplx z) const { return B * product(z); }
Mat CascadeResult::eval_origin(cplx z) const { return B_origin * product(z); }

std::vector<CanonicalFactor> CascadeResult::conjugated_factors() const {
    std::vector<CanonicalFactor> out;
    for (auto f : factors) {
        f.V = B * f.V;
        if (f.v1.size()) f.v1 = B * f.v1;
        if (f.v2.size()) f.v2 = B * f.v2;
        out.push_back(std::move(f));
    }
    return out;
}

Mat CascadeResult::remainder(const MatrixFn& t, const std::vector<CanonicalFactor>& factors, cplx z) {
    Mat m = t(z);
    for (const auto& f : factors) m = m * f.inverse_at(z);
    return m;
}

namespace {

// Sequential right detachment of the planned entries.
void run_detachment(const MatrixFn& t, const std::vector<PlanEntry>& entries, const std::vector<ZeroPoleRecord>& exact,
                    const FactorizeOptions& opt, CascadeResult& res) {
    const auto transport = [&](cplx z, const Mat& x) {
        Mat y = x;
        for (const auto& f : res.factors) y = f.eval(z) * y;
        return y;
    };
    for (size_t k = 0; k < entries.size(); ++k) {
        const PlanEntry& e = entries[k];
        const ZeroPoleRecord& rec = exact[static_cast<size_t>(e.record)];
        CanonicalFactor p;
        switch (e.kind) {
            case EntryKind::complex_zero: {
                Vec v = rec.eigenvector;
                // The record may describe the conjugate member of the class.
                if (std::abs(rec.position - e.z) > 1e-9 * (1.0 + std::abs(e.z))) v = sigma(static_cast<int>(v.size())) * v.conjugate();
                p = build_complex_factor(e.z, transport(e.z, v).col(0), opt.tol_structural);
                break;
            }
            case EntryKind::real_pair: {
                const Vec v1 = transport(e.z, exact[static_cast<size_t>(e.record)].eigenvector).col(0);
                const Vec v2 = transport(e.z2, exact[static_cast<size_t>(e.record2)].eigenvector).col(0);
                p = build_real_factor(e.z.real(), e.z2, v1, v2, opt.tol_structural);
                break;
            }
            case EntryKind::degenerate_real:
                p = build_degenerate_real_factor(e.z.real(), transport(e.z, rec.eigenspace));
                break;
            case EntryKind::degenerate_complex: {
                if (opt.strategy == DegeneracyStrategy::phase_shift) {
                    throw DegeneracyError("cascade_engine", "factorize",
                                          "degenerate complex zero at " + fmt_c(e.z) +
                                              " persists after the phase shift; increase --delta or use the perturbation strategy");
                }
                Mat space = rec.eigenspace;
                if (std::abs(rec.position - e.z) > 1e-9 * (1.0 + std::abs(e.z))) space = sigma(static_cast<int>(space.rows())) * space.conjugate();
                p = build_degenerate_complex_factor(e.z, transport(e.z, space), opt.perturb_eps);
                break;
            }
        }
        res.factors.push_back(p);
        const auto& fs = res.factors;
        const MatrixFn rem = [&t, &fs](cplx z) { return CascadeResult::remainder(t, fs, z); };
        StepDiagnostic diag;
        diag.index = static_cast<int>(k) + 1;
        diag.kind = to_string(e.kind);
        diag.z = e.z;
        diag.eigen_residual = rec.residual;
        diag.report = check_removable(rem, p);
        res.diagnostics.push_back(diag);
        if (!diag.report.removable) {
            throw NumericalFailure("cascade_engine", "factorize",
                                   "detachment step " + std::to_string(k + 1) + " (" + to_string(e.kind) + " at " +
                                       fmt_c(e.z) + ") failed: " + diag.report.detail);
        }
    }
}

}  // namespace

CascadeResult factorize(const DelayNetwork& n, const FactorizationPlan& plan, const std::vector<ZeroPoleRecord>& exact,
                        const FactorizeOptions& opt) {
    const int K = opt.truncation;
    if (K < 0) throw Error("cascade_engine", "factorize", "truncation must be non-negative");
    std::vector<PlanEntry> entries = plan.inner;
    for (size_t g = 0; g < plan.ladders.size(); ++g) {
        const auto& lg = plan.ladders[g];
        std::set<int> present;
        for (const auto& e : plan.inner) {
            if (e.ladder == static_cast<int>(g)) present.insert(e.level);
            if (e.ladder2 == static_cast<int>(g)) present.insert(e.level2);
        }
        for (const auto& e : lg.entries) {
            if (std::abs(e.level) > K) continue;
            entries.push_back(e);
            present.insert(e.level);
        }
        const int lo = lg.self_conjugate ? 0 : -K;
        for (int l = lo; l <= K; ++l) {
            if (!present.count(l)) {
                throw NumericalFailure("cascade_engine", "factorize",
                                       "ladder " + fmt_c(lg.base) + " level " + std::to_string(l) +
                                           " has no matched exact zero; widen the scan window");
            }
        }
    }
    const MatrixFn t = [&n](cplx z) { return n.closed_tf(z); };
    CascadeResult res;
    run_detachment(t, entries, exact, opt, res);

    if (opt.tail_closure && !plan.ladders.empty()) {
        const CascadeResult stat = static_factorize(n, -1);
        const double per = plan.period;
        for (auto tail : stat.factors) {
            std::set<int> ex;
            for (const auto& e : entries) {
                std::vector<cplx> detached;
                if (e.ladder >= 0) detached.insert(detached.end(), {e.static_pos, std::conj(e.static_pos)});
                if (e.ladder2 >= 0) detached.push_back(e.static_pos2);
                for (cplx m : detached) {
                    const long lv = std::lround((m.imag() - tail.z0.imag()) / per);
                    if (std::abs(m.real() - tail.z0.real()) < 1e-6 &&
                        std::abs(m.imag() - tail.z0.imag() - per * static_cast<double>(lv)) < 1e-6)
                        ex.insert(static_cast<int>(lv));
                }
            }
            tail.ladder_excluded.assign(ex.begin(), ex.end());
            res.factors.push_back(tail);
            const auto& fs = res.factors;
            const MatrixFn rem = [&t, &fs](cplx z) { return CascadeResult::remainder(t, fs, z); };
            StepDiagnostic diag;
            diag.index = static_cast<int>(res.factors.size());
            diag.kind = "static_tail";
            diag.z = tail.z0;
            diag.report = check_removable(rem, tail);
            if (!diag.report.removable) {
                res.notes.push_back("static tail at " + fmt_c(tail.z0) +
                                    " is approximate: exact and static ladder zeros differ beyond the explicit levels");
            }
            res.diagnostics.push_back(diag);
        }
    }
    const double h = opt.window > 0 ? opt.window : 2.0 * n.delays().period();
    estimate_prefactor(t, res.factors, h, res);
    return res;
}

CascadeResult factorize_rational(const RationalTF& tf, double tol_structural) {
    auto zeros = rational_zero_records(tf);
    const FactorizationPlan plan = plan_order(zeros, {}, 1.0, std::numeric_limits<double>::infinity());
    FactorizeOptions opt;
    opt.tol_structural = tol_structural;
    const MatrixFn t = [&tf](cplx z) { return tf.eval(z); };
    CascadeResult res;
    run_detachment(t, plan.inner, zeros, opt, res);
    double h = 1.0;
    for (Eigen::Index i = 0; i < tf.poles().size(); ++i) h = std::max(h, 2.0 * std::abs(tf.poles()(i)));
    estimate_prefactor(t, res.factors, h, res);
    return res;
}

CascadeResult static_factorize(const DelayNetwork& n, int truncation) {
    const double per = n.delays().period();
    const double base = n.delays().base_period;
    const MatrixFn s = [&n](cplx z) { return n.static_tf(z); };

    // Static zeros are the mirrors -conj(p) of the static loop poles.
    std::vector<cplx> bases;
    for (cplx w : static_loop_roots_w(n)) {
        const cplx p = -std::log(w) / base;
        const cplx z(-p.real(), wrap(p.imag(), per));
        const cplx zc(z.real(), z.imag() > per - 1e-9 ? 0.0 : z.imag());
        bool dup = false;
        for (cplx b : bases)
            if (std::abs(b.real() - zc.real()) < 1e-6 && circ(b.imag(), zc.imag(), per) < 1e-6) dup = true;
        if (!dup) bases.push_back(zc);
    }
    std::vector<cplx> canon;
    for (cplx b : bases)
        if (b.imag() <= 0.5 * per + 1e-6) canon.push_back(b);
    std::sort(canon.begin(), canon.end(), [](cplx a, cplx b) { return a.real() != b.real() ? a.real() < b.real() : a.imag() < b.imag(); });

    CascadeResult res;
    for (cplx zb : canon) {
        const bool self_conj = zb.imag() < 1e-6 || std::abs(zb.imag() - 0.5 * per) < 1e-6;
        const auto& fs = res.factors;
        const MatrixFn rem = [&s, &fs](cplx z) { return CascadeResult::remainder(s, fs, z); };
        const KernelInfo k0 = kernel_of(rem, zb);
        if (k0.dim == 0) {
            throw NumericalFailure("cascade_engine", "static_factorize",
                                   "remainder is not singular at static zero " + fmt_c(zb) + " (relative sigma_min " +
                                       num(k0.rel) + ")");
        }
        // Projector drift along the ladder.
        double drift = 0.0;
        const Mat p0 = projector(k0.basis);
        for (int lv : {-2, -1, 1, 2}) {
            const KernelInfo kn = kernel_of(rem, zb + cplx(0.0, per * lv));
            drift = std::max(drift, norm2(projector(kn.basis) - p0));
        }
        if (drift > 1e-8) {
            throw NumericalFailure("cascade_engine", "static_factorize",
                                   "kernel projector drifts by " + num(drift) + " along the ladder at " + fmt_c(zb));
        }
        cplx zf = zb;
        Mat V;
        if (k0.dim >= 2) {
            V = eigenspace_frame(zb, k0.basis, 1e-3);
        } else {
            if (self_conj) {
                throw DegeneracyError("cascade_engine", "static_factorize",
                                      "simple self-conjugate static ladder at " + fmt_c(zb) + " is not supported");
            }
            const CanonicalFactor c = build_complex_factor(zb, k0.basis.col(0));
            zf = c.z0;
            V = c.V;
        }
        if (truncation < 0) {
            res.factors.push_back(build_static_ladder_factor(zf, per, V));
            const double chk = std::abs(ladder_scalar(cplx(0.37, 0.21), zf, per, {}));
            res.notes.push_back("static ladder " + fmt_c(zf) + " rank " + std::to_string(k0.dim) + ", drift " +
                                num(drift) + ", |q(0.37+0.21i)| " + num(chk));
            continue;
        }
        const bool y0 = zf.imag() < 1e-6 && zf.imag() > -1e-6;
        for (int a = 0; a <= 2 * truncation; ++a) {
            const int lv = (a == 0) ? 0 : (a % 2 == 1 ? (a + 1) / 2 : -(a / 2));
            const cplx zn = zf + cplx(0.0, per * lv);
            if (self_conj) {
                if (lv < 0) continue;
                if (y0 && lv == 0) {
                    res.factors.push_back(build_degenerate_real_factor(zn.real(), V));
                } else {
                    res.factors.push_back(build_modified_degenerate_factor(zn, V));
                }
            } else if (k0.dim >= 2) {
                res.factors.push_back(build_modified_degenerate_factor(zn, V));
            } else {
                CanonicalFactor c = build_complex_factor(zn, V.col(0));
                res.factors.push_back(c);
            }
        }
    }
    estimate_prefactor(s, res.factors, 2.0 * per, res);
    return res;
}

Pipeline run_pipeline(const DelayNetwork& n, const FactorizeOptions& opt, double inner_radius) {
    const double cr = n.delays().commensurability_residual();
    if (cr > 1e-12) {
        throw AssumptionViolation("cascade_engine", "run_pipeline",
                                  "delays are not commensurate with the base period (residual " + std::to_string(cr) +
                                      "); the zero ladders have no common period",
                                  4);
    }
    DelayNetwork net = opt.strategy == DegeneracyStrategy::phase_shift ? apply_loop_phase_shift(n, opt.phase_delta) : n;
    const double per = net.delays().period();
    const double h = std::max((opt.truncation + 0.75) * per, inner_radius + 0.5);
    const SearchStrip strip = compute_strip(net);
    const Rect region{strip.search_re_lo, strip.search_re_hi, -h, h};
    auto exact = subdivide_and_refine(net, region, RootKind::zero, Which::exact);
    auto statics = subdivide_and_refine(net, region, RootKind::zero, Which::static_surrogate);
    FactorizationPlan plan = plan_order(exact, statics, per, inner_radius);
    CascadeResult result = factorize(net, plan, exact, opt);
    return Pipeline{std::move(net), std::move(exact), std::move(statics), std::move(plan), std::move(result)};
}

std::vector<ProfilePoint> residual_profile(const DelayNetwork& n, const DelayNetwork& reference,
                                           const FactorizationPlan& plan, const std::vector<ZeroPoleRecord>& exact,
                                           FactorizeOptions opt, const std::vector<int>& ks, double h, int samples) {
    const MatrixFn t = [&reference](cplx z) { return reference.closed_tf(z); };
    std::vector<ProfilePoint> out;
    for (int k : ks) {
        opt.truncation = k;
        const CascadeResult r = factorize(n, plan, exact, opt);
        const MatrixFn a = [&r](cplx z) { return r.eval_origin(z); };
        out.push_back({k, r.factors.size(), relative_error_on_axis(t, a, h, samples)});
    }
    return out;
}

SinhOracle static_sinh_oracle(cplx z_m, double period, cplx z, int N) {
    const double y = z_m.imag();
    if (!(y > 0 && y < period) || std::abs(y - 0.5 * period) < 1e-12 * period) {
        throw Error("cascade_engine", "static_sinh_oracle", "requires 0 < Im z_m < P and Im z_m != P/2");
    }
    SinhOracle o;
    o.truncated = 1.0;
    for (int k = -N; k <= N; ++k) o.truncated *= blaschke(z, z_m + cplx(0.0, period * k));
    const double a = kPi / period;
    const cplx den = std::sinh(a * (z + std::conj(z_m)));
    if (std::abs(den) < 1e-12) throw PoleProximityError("cascade_engine", "static_sinh_oracle", "z is a pole of the ladder", z);
    o.closed = ladder_scalar(z, z_m, period, {});
    return o;
}

double relative_error_on_axis(const MatrixFn& exact, const MatrixFn& approx, double h, int samples) {
    double err = 0.0;
    for (int i = 0; i < samples; ++i) {
        const cplx z(0.0, -h + 2.0 * h * i / (samples - 1));
        const Mat t = exact(z);
        err = std::max(err, norm2(t - approx(z)) / norm2(t));
    }
    return err;
}

}  // namespace qc
