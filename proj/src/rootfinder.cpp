#include "qcascade/rootfinder.hpp"

#include "qcascade/errors.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <sstream>

namespace qc {

namespace {

constexpr double kPi = std::numbers::pi;

std::string fmt_c(cplx z) {
    std::ostringstream os;
    os.precision(10);
    os << z.real() << (z.imag() < 0 ? "-" : "+") << std::abs(z.imag()) << "i";
    return os.str();
}

struct PathCounter {
    const ScalarFn& f;
    double rate;
    int evals = 0;

    cplx value(cplx z) {
        ++evals;
        const cplx v = f(z);
        if (!std::isfinite(v.real()) || !std::isfinite(v.imag()) || v == cplx(0.0)) {
            throw NearBoundaryError("rootfinder", "count", "target vanishes or overflows on the contour at " + fmt_c(z), z);
        }
        return v;
    }

    // Total phase change along the straight segment a -> b.
    double segment(cplx a, cplx b) {
        const double len = std::abs(b - a);
        const int n = std::max(8, static_cast<int>(std::ceil(len * rate / (kPi / 6.0))));
        double total = 0.0;
        cplx za = a, fa = value(a);
        for (int k = 1; k <= n; ++k) {
            const cplx zb = a + (b - a) * (static_cast<double>(k) / n);
            const cplx fb = value(zb);
            total += refine(za, fa, zb, fb, 0);
            za = zb;
            fa = fb;
        }
        return total;
    }

    // A step is accepted when both half-steps turn by less than pi/4 and the
    // midpoint value is close to the chord relative to |f|; otherwise a pair
    // of nearby roots could hide a full turn between two samples.
    double refine(cplx za, cplx fa, cplx zb, cplx fb, int depth) {
        const cplx zm = 0.5 * (za + zb);
        const cplx fm = value(zm);
        const double d1 = std::arg(fm / fa), d2 = std::arg(fb / fm);
        const double scale = std::min({std::abs(fa), std::abs(fb), std::abs(fm)});
        if (std::abs(d1) < kPi / 4.0 && std::abs(d2) < kPi / 4.0 && std::abs(fm - 0.5 * (fa + fb)) < 0.25 * scale) {
            return d1 + d2;
        }
        const double minlen = 1e-11 * (1.0 + std::abs(za));
        if (depth > 48 || std::abs(zb - za) < minlen) {
            throw NearBoundaryError("rootfinder", "count", "root of the target within guard distance of the contour near " +
                                                               fmt_c(zm),
                                    zm);
        }
        return refine(za, fa, zm, fm, depth + 1) + refine(zm, fm, zb, fb, depth + 1);
    }
};

int round_winding(double total, double* residual) {
    const double w = total / (2.0 * kPi);
    const double r = std::round(w);
    if (residual) *residual = std::abs(w - r);
    if (std::abs(w - r) > 0.25) {
        throw NumericalFailure("rootfinder", "count", "winding number does not round cleanly (" + std::to_string(w) + ")");
    }
    return static_cast<int>(r);
}

struct Newton {
    cplx z;
    int iterations = 0;
    bool converged = false;
};

Newton newton(const ScalarFn& f, cplx z, int m, double max_step, int max_iter) {
    Newton out{z};
    double prev = 1e300;
    for (int it = 0; it < max_iter; ++it) {
        out.iterations = it + 1;
        const cplx fz = f(z);
        if (fz == cplx(0.0)) {
            out.converged = true;
            break;
        }
        const double h = 1e-7 * (1.0 + std::abs(z));
        const cplx fp = (f(z + h) - f(z - h)) / (2.0 * h);
        if (fp == cplx(0.0) || !std::isfinite(std::abs(fp))) break;
        cplx dz = static_cast<double>(m) * fz / fp;
        if (!std::isfinite(std::abs(dz))) break;
        if (std::abs(dz) > max_step) dz *= max_step / std::abs(dz);
        z -= dz;
        const double step = std::abs(dz);
        if (step < 1e-14 * (1.0 + std::abs(z))) {
            out.converged = true;
            break;
        }
        // Roundoff floor for multiple roots: the step stops shrinking.
        if (step < 1e-7 * (1.0 + std::abs(z)) && step > 0.5 * prev) {
            out.converged = true;
            break;
        }
        prev = step;
    }
    out.z = z;
    return out;
}

// Sum of the roots inside the circle, by the first moment of f'/f.
cplx root_moment(const ScalarFn& f, cplx c, double r) {
    const int k = 48;
    cplx acc = 0.0;
    const double h = 1e-3 * r;
    for (int i = 0; i < k; ++i) {
        const cplx e = std::polar(1.0, 2.0 * kPi * i / k);
        const cplx z = c + r * e;
        const cplx fp = (f(z + h) - f(z - h)) / (2.0 * h);
        acc += z * fp / f(z) * (I_unit * r * e);
    }
    return acc * (2.0 * kPi / k) / (2.0 * kPi * I_unit);
}

class Scanner {
public:
    Scanner(const FormFn& f, const ScanOptions& opt) : f_(f), opt_(opt) {}

    std::vector<RootCluster> run(const Rect& region) {
        const auto c = count(region);
        total_ = c.winding;
        if (c.winding < 0) throw NumericalFailure("rootfinder", "find_roots", "target is not entire (negative winding)");
        process(region, c, 0);
        int sum = 0;
        for (const auto& r : roots_) sum += r.multiplicity;
        if (sum != total_) {
            throw NumericalFailure("rootfinder", "find_roots",
                                   "refined multiplicity " + std::to_string(sum) + " does not match winding " +
                                       std::to_string(total_));
        }
        std::sort(roots_.begin(), roots_.end(), [](const RootCluster& a, const RootCluster& b) {
            return a.position.imag() != b.position.imag() ? a.position.imag() < b.position.imag()
                                                          : a.position.real() < b.position.real();
        });
        for (size_t i = 1; i < roots_.size(); ++i) {
            if (std::abs(roots_[i].position - roots_[i - 1].position) < opt_.dedup) {
                throw NumericalFailure("rootfinder", "find_roots", "duplicate root at " + fmt_c(roots_[i].position));
            }
        }
        return roots_;
    }

private:
    ScalarFn bind(LoopForm form) const {
        return [this, form](cplx z) { return f_(z, form); };
    }

    ContourCount count(const Rect& r) const {
        const ScalarFn g = bind(form_for(r.center().real()));
        return count_in_rectangle(g, r, opt_.phase_rate);
    }

    bool try_isolate(const Rect& r, int w) {
        const ScalarFn g = bind(form_for(r.center().real()));
        const double diam = std::hypot(r.re_hi - r.re_lo, r.im_hi - r.im_lo);
        const auto nw = newton(g, r.center(), w, 0.5 * diam, opt_.max_newton);
        if (!nw.converged || !r.contains(nw.z, 1e-9 * (1.0 + std::abs(nw.z)))) return false;
        const double rad = std::min(opt_.cluster_radius * (1.0 + std::abs(nw.z)), 0.5 * diam);
        int cw = 0;
        try {
            cw = count_on_circle(g, nw.z, rad);
        } catch (const NumericalFailure&) {
            return false;
        }
        if (cw != w) return false;
        RootCluster rc{nw.z, w, nw.iterations};
        if (w > 1) {
            const cplx centroid = root_moment(g, nw.z, rad) / static_cast<double>(w);
            if (std::abs(centroid - nw.z) < rad) rc.position = centroid;
        }
        roots_.push_back(rc);
        return true;
    }

    void process(const Rect& r, const ContourCount& c, int depth) {
        if (c.winding == 0) return;
        if (c.winding < 0) throw NumericalFailure("rootfinder", "find_roots", "negative winding in a cell");
        const double w_re = r.re_hi - r.re_lo, w_im = r.im_hi - r.im_lo;
        const bool small = std::max(w_re, w_im) < 1e-2 * (1.0 + std::abs(r.center()));
        if ((c.winding <= 2 || small) && try_isolate(r, c.winding)) return;
        if (depth > opt_.max_depth) {
            throw NumericalFailure("rootfinder", "find_roots",
                                   "cell near " + fmt_c(r.center()) + " unresolved after " + std::to_string(depth) +
                                       " subdivisions (winding " + std::to_string(c.winding) + ")");
        }
        static const double fracs[] = {0.5 + 0.0137, 0.5 - 0.0311, 0.5 + 0.0719, 0.37, 0.63, 0.27, 0.81};
        for (double fr : fracs) {
            Rect a = r, b = r;
            if (w_re >= w_im) {
                const double x = r.re_lo + fr * w_re;
                a.re_hi = x;
                b.re_lo = x;
            } else {
                const double y = r.im_lo + fr * w_im;
                a.im_hi = y;
                b.im_lo = y;
            }
            ContourCount ca, cb;
            try {
                ca = count(a);
                cb = count(b);
            } catch (const NearBoundaryError&) {
                continue;
            }
            if (ca.winding + cb.winding != c.winding) continue;
            process(a, ca, depth + 1);
            process(b, cb, depth + 1);
            return;
        }
        throw NumericalFailure("rootfinder", "find_roots", "no admissible split for cell near " + fmt_c(r.center()));
    }

    const FormFn& f_;
    ScanOptions opt_;
    std::vector<RootCluster> roots_;
    int total_ = 0;
};

}  // namespace

ContourCount count_in_rectangle(const ScalarFn& f, const Rect& rect, double phase_rate) {
    if (!(rect.re_hi > rect.re_lo) || !(rect.im_hi > rect.im_lo)) {
        throw DimensionError("rootfinder", "count_in_rectangle", "empty rectangle");
    }
    PathCounter pc{f, std::max(phase_rate, 1.0)};
    const cplx v[4] = {{rect.re_lo, rect.im_lo}, {rect.re_hi, rect.im_lo}, {rect.re_hi, rect.im_hi}, {rect.re_lo, rect.im_hi}};
    double total = 0.0;
    for (int i = 0; i < 4; ++i) total += pc.segment(v[i], v[(i + 1) % 4]);
    ContourCount out;
    out.rect = rect;
    out.winding = round_winding(total, &out.residual);
    out.samples_used = pc.evals;
    return out;
}

int count_on_circle(const ScalarFn& f, cplx center, double radius, int* samples) {
    PathCounter pc{f, 1.0};
    const int k = 32;
    double total = 0.0;
    cplx za = center + radius, fa = pc.value(za);
    for (int i = 1; i <= k; ++i) {
        const cplx zb = center + std::polar(radius, 2.0 * kPi * i / k);
        const cplx fb = pc.value(zb);
        total += pc.refine(za, fa, zb, fb, 0);
        za = zb;
        fa = fb;
    }
    if (samples) *samples = pc.evals;
    return round_winding(total, nullptr);
}

std::vector<RootCluster> find_roots(const FormFn& f, const Rect& region, const ScanOptions& opt) {
    return Scanner(f, opt).run(region);
}

std::string to_string(RootKind k) { return k == RootKind::zero ? "zero" : "pole"; }

double default_phase_rate(const DelayNetwork& n) {
    double t = 0.0;
    for (double d : n.delays().delays) t += 2.0 * d;
    return t + 2.0;
}

std::vector<ZeroPoleRecord> subdivide_and_refine(const DelayNetwork& n, const Rect& region, RootKind kind, Which which,
                                                 const ScanOptions& opt_in, Rect* scanned) {
    const DelayNetwork target = which == Which::exact ? n : n.static_surrogate();
    ScanOptions opt = opt_in;
    opt.phase_rate = std::max(opt.phase_rate, default_phase_rate(n));
    const FormFn f = [&target, kind](cplx z, LoopForm form) {
        return kind == RootKind::pole ? target.pole_target(z, form) : target.zero_target(z, form);
    };
    Rect r = region;
    // Roots just outside the requested real range widen it: bands of the
    // region's width on both sides must be root-free.
    for (int grow = 0; grow < 8; ++grow) {
        const double w = std::max(r.re_hi - r.re_lo, 1.0);
        bool widened = false;
        for (const Rect band : {Rect{r.re_hi, r.re_hi + w, r.im_lo, r.im_hi}, Rect{r.re_lo - w, r.re_lo, r.im_lo, r.im_hi}}) {
            int found = 0;
            try {
                const LoopForm form = form_for(band.center().real());
                const ScalarFn g = [&f, form](cplx z) { return f(z, form); };
                found = count_in_rectangle(g, band, opt.phase_rate).winding;
            } catch (const NearBoundaryError&) {
                found = 1;
            }
            if (found != 0) widened = true;
        }
        if (!widened) break;
        r.re_lo -= w;
        r.re_hi += w;
    }
    std::vector<RootCluster> roots;
    for (int attempt = 0;; ++attempt) {
        try {
            roots = find_roots(f, r, opt);
            break;
        } catch (const NearBoundaryError&) {
            if (attempt >= 6) throw;
            const double pad = 1.7e-3 * (attempt + 1) * std::max(r.re_hi - r.re_lo, 1.0);
            r.re_lo -= pad;
            r.re_hi += pad;
            r.im_lo -= pad;
            r.im_hi += pad;
        }
    }
    if (scanned) *scanned = r;
    std::vector<ZeroPoleRecord> out;
    for (const auto& rc : roots) {
        ZeroPoleRecord rec;
        rec.position = rc.position;
        rec.kind = kind;
        rec.which = which;
        rec.multiplicity = rc.multiplicity;
        rec.refined = true;
        eigenvector_at(n, rec);
        out.push_back(std::move(rec));
    }
    return out;
}

int winding_number(const DelayNetwork& n, const Rect& region, RootKind kind, Which which) {
    const DelayNetwork target = which == Which::exact ? n : n.static_surrogate();
    const LoopForm form = form_for(region.center().real());
    const ScalarFn g = [&target, kind, form](cplx z) {
        return kind == RootKind::pole ? target.pole_target(z, form) : target.zero_target(z, form);
    };
    return count_in_rectangle(g, region, default_phase_rate(n)).winding;
}

void eigenvector_at(const std::function<Mat(cplx)>& tf, ZeroPoleRecord& rec) {
    if (!rec.refined) throw Error("rootfinder", "eigenvector_at", "record is not refined");
    const cplx zero_pos = rec.kind == RootKind::zero ? rec.position : -std::conj(rec.position);
    const Mat t = tf(zero_pos);
    Eigen::JacobiSVD<Mat> svd(t, Eigen::ComputeFullV);
    const auto& sv = svd.singularValues();
    const Eigen::Index d = sv.size();
    // Local scale: at a zero of high order every singular value vanishes, so
    // the largest one is taken over a few nearby probe points as well.
    double smax = sv(0);
    for (cplx d : {cplx(1, 0), cplx(0, 1), cplx(-1, 0), cplx(0, -1)}) {
        try {
            smax = std::max(smax, norm2(tf(zero_pos + 0.05 * d)));
        } catch (const PoleProximityError&) {
        }
    }
    rec.residual = sv(d - 1) / smax;
    rec.sigma2_rel = d >= 2 ? sv(d - 2) / smax : 1.0;
    int dim = 0;
    for (Eigen::Index i = 0; i < d; ++i) {
        if (sv(i) <= 1e-4 * smax) ++dim;
    }
    dim = std::max({dim, rec.multiplicity, 1});
    const Mat basis = svd.matrixV().rightCols(dim);
    const Vec x = svd.matrixV().col(d - 1);
    const Mat j = signature(static_cast<int>(d));
    rec.j_norm = std::real(x.dot(j * x));
    if (rec.kind == RootKind::zero) {
        rec.eigenvector = x;
        rec.eigenspace = basis;
    } else {
        rec.eigenvector = j * x;
        rec.eigenspace = j * basis;
    }
    const bool real = rec.is_real();
    rec.degenerate = rec.sigma2_rel < 1e-4 || (!real && std::abs(rec.j_norm) < 1e-6);
}

void eigenvector_at(const DelayNetwork& n, ZeroPoleRecord& rec) {
    if (rec.which == Which::exact) {
        eigenvector_at([&n](cplx z) { return n.closed_tf(z); }, rec);
    } else {
        eigenvector_at([&n](cplx z) { return n.static_tf(z); }, rec);
    }
}

void pair_records(std::vector<ZeroPoleRecord>& records, double tol) {
    const auto find = [&](cplx target, RootKind kind, int mult) {
        int best = -1;
        double bd = 1e300;
        for (size_t i = 0; i < records.size(); ++i) {
            const auto& r = records[i];
            if (r.kind != kind || r.multiplicity != mult) continue;
            const double d = std::abs(r.position - target);
            if (d < bd) {
                bd = d;
                best = static_cast<int>(i);
            }
        }
        return bd <= tol * (1.0 + std::abs(target)) ? best : -1;
    };
    std::vector<std::string> unpaired;
    for (auto& r : records) {
        const RootKind other = r.kind == RootKind::zero ? RootKind::pole : RootKind::zero;
        r.partner_neg_conj = find(-std::conj(r.position), other, r.multiplicity);
        r.partner_conj = find(std::conj(r.position), r.kind, r.multiplicity);
        if (r.partner_neg_conj < 0 || r.partner_conj < 0) {
            unpaired.push_back(to_string(r.kind) + " at " + fmt_c(r.position) +
                               (r.partner_neg_conj < 0 ? " (no -conj partner)" : " (no conj partner)"));
        }
    }
    if (!unpaired.empty()) {
        std::string msg = "unpaired records; the scan window may be too small or a root was missed:";
        for (const auto& s : unpaired) msg += " " + s + ";";
        throw NumericalFailure("rootfinder", "pair_records", msg);
    }
}

std::vector<ZeroPoleRecord> rational_zero_records(const RationalTF& tf) {
    std::vector<ZeroPoleRecord> out;
    if (tf.states() == 0) return out;
    const auto zeros = inverse(tf).poles();
    for (Eigen::Index i = 0; i < zeros.size(); ++i) {
        ZeroPoleRecord rec;
        rec.position = zeros(i);
        if (std::abs(rec.position.imag()) < 1e-10 * (1.0 + std::abs(rec.position))) rec.position = rec.position.real();
        rec.kind = RootKind::zero;
        rec.refined = true;
        eigenvector_at([&tf](cplx z) { return tf.eval_unchecked(z); }, rec);
        out.push_back(std::move(rec));
    }
    std::sort(out.begin(), out.end(), [](const auto& a, const auto& b) {
        return a.position.imag() != b.position.imag() ? a.position.imag() < b.position.imag()
                                                      : a.position.real() < b.position.real();
    });
    return out;
}

}  // namespace qc
