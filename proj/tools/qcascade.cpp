// qcascade: pole scans, cascade factorization and verification of delayed
// coherent-feedback networks.

#include "qcascade/cascade_engine.hpp"
#include "qcascade/errors.hpp"
#include "qcascade/io.hpp"
#include "qcascade/networks.hpp"

#include <CLI11.hpp>

#include <cstdlib>
#include <filesystem>
#include <iomanip>
#include <iostream>
#include <sstream>
#include <stdexcept>

namespace {

using namespace qc;
using io::json;

constexpr int kExitInput = 1;
constexpr int kExitAssumption = 2;
constexpr int kExitNumerical = 3;

int log_level() {
    const char* v = std::getenv("QCASCADE_LOG");
    if (!v) return 1;
    const std::string s(v);
    if (s == "off" || s == "quiet" || s == "0") return 0;
    if (s == "warn" || s == "1") return 1;
    if (s == "info" || s == "2") return 2;
    return 3;
}

void log(int level, const std::string& msg) {
    static const int current = log_level();
    if (level <= current) std::cerr << "[qcascade] " << msg << '\n';
}

struct RunConfig {
    std::string input;
    std::string command;
    double window = 10.0;
    int truncation = 3;
    std::string degeneracy = "perturb";
    double delta = 1e-3;
    double perturb_eps = 1e-3;
    double tol_structural = 1e-10;
    bool tail = false;
    std::string out = "qcascade_out";
    std::uint64_t seed = 1;

    json to_json() const {
        return {{"input", input},         {"command", command},         {"window_im", window},
                {"truncation", truncation}, {"degeneracy", degeneracy}, {"delta", delta},
                {"perturb_eps", perturb_eps}, {"tol_structural", tol_structural}, {"tail_closure", tail},
                {"seed", seed}};
    }
};

std::string fmt_c(cplx z) {
    std::ostringstream os;
    os << std::setprecision(10) << z.real() << (z.imag() < 0 ? " - " : " + ") << std::abs(z.imag()) << "i";
    return os.str();
}

// Unreadable or malformed input files.
struct InputError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

json load_json(const std::filesystem::path& p) {
    try {
        return json::parse(io::read_file(p));
    } catch (const Error& e) {
        throw InputError(e.what());
    } catch (const json::exception& e) {
        throw InputError("cannot parse " + p.string() + ": " + e.what());
    }
}

DelayNetwork load_network(const RunConfig& c) {
    if (c.command == "example" || c.input == "example") return example_network();
    if (c.input == "random") return random_network(c.seed);
    if (c.input.empty()) throw InputError("--input is required for command " + c.command);
    const json j = load_json(c.input);
    try {
        return io::network_from_json(j);
    } catch (const json::exception& e) {
        throw InputError("malformed network description " + c.input + ": " + e.what());
    } catch (const AssumptionViolation&) {
        throw;
    } catch (const Error& e) {
        throw InputError("invalid network description " + c.input + ": " + e.what());
    }
}

FactorizeOptions options(const RunConfig& c) {
    FactorizeOptions o;
    o.truncation = c.truncation;
    o.strategy = c.degeneracy == "phase_shift" ? DegeneracyStrategy::phase_shift : DegeneracyStrategy::perturb;
    o.phase_delta = c.delta;
    o.perturb_eps = c.perturb_eps;
    o.tol_structural = c.tol_structural;
    o.tail_closure = c.tail;
    return o;
}

std::vector<double> omega_grid(const DelayNetwork& n, int samples = 401) {
    const double h = 2.0 * n.delays().period();
    std::vector<double> w;
    for (int i = 0; i < samples; ++i) w.push_back(-h + 2.0 * h * i / (samples - 1));
    return w;
}

// With `strategy_set`, a failed multiplicity check is handed to the degeneracy
// strategy instead of aborting the run.
void cmd_validate(const DelayNetwork& n, io::Manifest& m, bool strategy_set = false) {
    const AssumptionReport rep = validate_assumptions(n);
    m.write("assumptions.json", io::to_json(rep).dump(2) + "\n");
    for (const auto& c : rep.checks) {
        std::cout << std::left << std::setw(24) << c.name << std::setw(6) << to_string(c.status) << c.detail << '\n';
    }
    for (const auto& c : rep.checks) {
        if (c.status != CheckStatus::fail) continue;
        if (strategy_set && c.name == "simple") {
            log(1, "assumption 'simple' violated; continuing with the degeneracy strategy");
            continue;
        }
        throw AssumptionViolation("cli", "validate", "assumption '" + c.name + "' violated: " + c.detail, c.id);
    }
}

void cmd_poles(const DelayNetwork& n, const RunConfig& c, io::Manifest& m) {
    const SearchStrip strip = compute_strip(n);
    const Rect region{strip.search_re_lo, strip.search_re_hi, -c.window, c.window};
    log(2, "scanning poles in Re [" + std::to_string(region.re_lo) + ", " + std::to_string(region.re_hi) + "], Im [" +
               std::to_string(-c.window) + ", " + std::to_string(c.window) + "]");
    Rect scanned;
    auto exact = subdivide_and_refine(n, region, RootKind::pole, Which::exact, {}, &scanned);
    auto stat = subdivide_and_refine(n, region, RootKind::pole, Which::static_surrogate);
    const int winding = winding_number(n, scanned, RootKind::pole);
    int total = 0;
    for (const auto& r : exact) total += r.multiplicity;
    json recs = json::array();
    for (const auto& r : exact) recs.push_back(io::to_json(r));
    json srecs = json::array();
    for (const auto& r : stat) srecs.push_back(io::to_json(r));
    std::vector<ZeroPoleRecord> all = exact;
    all.insert(all.end(), stat.begin(), stat.end());
    m.write("poles.csv", io::records_csv(all));
    m.write("poles.json", json{{"strip", io::to_json(strip)},
                               {"window_im", c.window},
                               {"winding", winding},
                               {"multiplicity_sum", total},
                               {"exact", recs},
                               {"static", srecs}}
                              .dump(2) +
                              "\n");
    std::cout << "poles of T~ in the window (winding " << winding << ", multiplicity sum " << total << "):\n";
    for (const auto& r : exact) {
        std::cout << "  " << fmt_c(r.position) << (r.multiplicity > 1 ? "  x" + std::to_string(r.multiplicity) : "")
                  << (r.degenerate ? "  degenerate" : "") << '\n';
    }
    if (winding != total) {
        throw NumericalFailure("cli", "poles", "winding " + std::to_string(winding) +
                                                   " differs from the refined multiplicity sum " + std::to_string(total));
    }
}

void cmd_factorize(const DelayNetwork& n, const RunConfig& c, io::Manifest& m) {
    const FactorizeOptions opt = options(c);
    const Pipeline p = run_pipeline(n, opt);
    const CascadeResult& r = p.result;
    std::cout << "factorized with " << r.factors.size() << " factors (" << c.degeneracy << ", truncation "
              << c.truncation << (c.tail ? ", tail closed" : "") << ")\n";
    for (size_t i = 0; i < r.factors.size(); ++i) {
        const auto& f = r.factors[i];
        std::cout << "  P" << i + 1 << "  " << std::left << std::setw(20) << to_string(f.variant);
        if (f.variant == FactorVariant::real_pair) {
            std::cout << "zeros " << f.z1 << ", " << f.z2;
        } else {
            std::cout << "zero " << fmt_c(f.z0);
        }
        std::cout << '\n';
    }
    for (const auto& note : r.notes) log(2, note);
    std::cout << "B dispersion " << r.B_dispersion << '\n';

    const double h = 2.0 * n.delays().period();
    std::vector<int> ks;
    for (int k = 1; k < c.truncation; k *= 2) ks.push_back(k);
    ks.push_back(c.truncation);
    FactorizeOptions popt = opt;
    popt.tail_closure = false;
    const auto prof = residual_profile(p.network, n, p.plan, p.exact_zeros, popt, ks, h);
    std::ostringstream csv;
    csv << std::setprecision(12) << "truncation,factors,max_rel_error\n";
    for (const auto& pt : prof) csv << pt.truncation << ',' << pt.factors << ',' << pt.error << '\n';
    m.write("residual_profile.csv", csv.str());

    std::vector<double> skipped;
    m.write("tf_samples.csv", io::tf_samples_csv(r, n, omega_grid(n), &skipped));
    for (double w : skipped) log(1, "tf sample at omega = " + std::to_string(w) + " skipped (pole guard)");
    const MatrixFn exact = [&n](cplx z) { return n.closed_tf(z); };
    const MatrixFn approx = [&r](cplx z) { return r.eval_origin(z); };
    const double err = relative_error_on_axis(exact, approx, h);
    std::cout << "origin-matched max relative error on |omega| <= " << h << ": " << err << '\n';

    json recs = json::array();
    for (const auto& z : p.exact_zeros) recs.push_back(io::to_json(z));
    m.write("records.json", recs.dump(2) + "\n");
    json out = io::to_json(r);
    out["network"] = io::network_to_json(n);
    out["factorized_network"] = io::network_to_json(p.network);
    out["options"] = c.to_json();
    out["max_rel_error"] = err;
    m.write("cascade.json", out.dump(2) + "\n");
}

struct CheckRow {
    std::string name;
    double value;
    double limit;
    bool structural;
    bool pass() const { return value <= limit; }
};

int cmd_verify(const RunConfig& c, io::Manifest& m) {
    std::filesystem::path in = c.input;
    if (std::filesystem::is_directory(in)) in /= "cascade.json";
    const json doc = load_json(in);
    const auto parsed = [&] {
        try {
            return std::pair{io::network_from_json(doc.at("network")), io::cascade_from_json(doc)};
        } catch (const json::exception& e) {
            throw InputError(in.string() + " is not a factorize output: " + e.what());
        }
    }();
    const DelayNetwork& n = parsed.first;
    const CascadeResult& r = parsed.second;
    const auto grid = omega_grid(n, 101);
    std::vector<CheckRow> rows;
    for (size_t i = 0; i < r.factors.size(); ++i) {
        const auto& f = r.factors[i];
        double ju = 0.0, du = 0.0;
        for (double w : grid) {
            const Mat pz = f.eval(cplx(0.0, w));
            ju = std::max(ju, is_j_unitary(pz).value);
            du = std::max(du, doubled_up_pair_residual(pz, f.eval(cplx(0.0, -w))));
        }
        const std::string tag = "P" + std::to_string(i + 1);
        rows.push_back({tag + " J-unitary on axis", ju, 1e-8, true});
        rows.push_back({tag + " doubled-up on axis", du, 1e-8, true});
        rows.push_back({tag + " V doubled-up", is_doubled_up(f.V).value, 1e-8, true});
        rows.push_back({tag + " V^flat V = I", norm2(flat(f.V) * f.V - Mat::Identity(2, 2)), 1e-8, true});
    }
    rows.push_back({"B J-unitary", is_j_unitary(r.B).value, 1e-8, true});
    rows.push_back({"B doubled-up", is_doubled_up(r.B).value, 1e-8, true});
    double cons = 0.0, cdu = 0.0;
    for (double w : grid) {
        const Mat t = r.eval(cplx(0.0, w));
        cons = std::max(cons, is_j_unitary(t).value);
        cdu = std::max(cdu, doubled_up_pair_residual(t, r.eval(cplx(0.0, -w))));
    }
    rows.push_back({"B P_k...P_1 J-unitary", cons, 1e-8, true});
    rows.push_back({"B P_k...P_1 doubled-up", cdu, 1e-8, true});
    const MatrixFn exact = [&n](cplx z) { return n.closed_tf(z); };
    const MatrixFn approx = [&r](cplx z) { return r.eval_origin(z); };
    rows.push_back({"max relative error (origin matched)", relative_error_on_axis(exact, approx, 2.0 * n.delays().period()),
                    1e-2, false});
    rows.push_back({"B dispersion", r.B_dispersion, 1e-5, false});

    bool ok = true;
    json table = json::array();
    for (const auto& row : rows) {
        std::cout << std::left << std::setw(40) << row.name << std::setw(14) << row.value
                  << (row.pass() ? "PASS" : "FAIL") << (row.structural ? "" : "  (approximation)") << '\n';
        table.push_back({{"check", row.name}, {"value", row.value}, {"limit", row.limit}, {"pass", row.pass()},
                         {"structural", row.structural}});
        if (row.structural && !row.pass()) ok = false;
    }
    m.write("verify.json", table.dump(2) + "\n");
    return ok ? 0 : kExitNumerical;
}

int run(const RunConfig& c) {
    io::Manifest m(c.out);
    m.set_meta("config", c.to_json());
    int code = 0;
    if (c.command == "verify") {
        code = cmd_verify(c, m);
    } else {
        const DelayNetwork n = load_network(c);
        m.write("network.json", io::network_to_json(n).dump(2) + "\n");
        if (c.command == "validate") {
            cmd_validate(n, m);
        } else if (c.command == "poles") {
            cmd_poles(n, c, m);
        } else if (c.command == "factorize") {
            cmd_factorize(n, c, m);
        } else {
            std::cout << "example preset: T = 2.0, eta = 0.6, kappa = 1.0, eps = 0.2\n";
            cmd_validate(n, m, true);
            cmd_poles(n, c, m);
            cmd_factorize(n, c, m);
        }
    }
    m.finish();
    log(2, "outputs written to " + m.dir().string());
    return code;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Cascade factorization of delayed coherent-feedback networks"};
    RunConfig c;
    app.add_option("--input", c.input, "network JSON, 'example', 'random', or a factorize output for verify");
    app.add_option("--command", c.command, "validate | poles | factorize | verify | example")
        ->required()
        ->check(CLI::IsMember({"validate", "poles", "factorize", "verify", "example"}));
    app.add_option("--window-im", c.window, "half-height of the imaginary scan window")->check(CLI::PositiveNumber);
    app.add_option("--truncation", c.truncation, "ladder levels |n| <= K per group")->check(CLI::NonNegativeNumber);
    app.add_option("--degeneracy", c.degeneracy, "degenerate-zero strategy")
        ->check(CLI::IsMember({"phase_shift", "perturb"}));
    app.add_option("--delta", c.delta, "loop phase for the phase-shift strategy")->check(CLI::PositiveNumber);
    app.add_option("--perturb-eps", c.perturb_eps, "eigenvector perturbation")->check(CLI::PositiveNumber);
    app.add_option("--tol-structural", c.tol_structural, "J-norm threshold for factor construction")
        ->check(CLI::PositiveNumber);
    app.add_flag("--tail-closure", c.tail, "close each ladder with its static tail product");
    app.add_option("--out", c.out, "output directory");
    app.add_option("--seed", c.seed, "seed for --input random");
    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return app.exit(e) == 0 ? 0 : kExitInput;
    }

    try {
        return run(c);
    } catch (const InputError& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kExitInput;
    } catch (const AssumptionViolation& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kExitAssumption;
    } catch (const Error& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kExitNumerical;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kExitNumerical;
    }
}
