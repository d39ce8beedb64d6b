#include "qcascade/io.hpp"

#include "qcascade/errors.hpp"

#include <openssl/evp.h>

#include <fstream>
#include <iomanip>
#include <sstream>

namespace qc::io {

json to_json(cplx z) { return json::array({z.real(), z.imag()}); }

cplx cplx_from_json(const json& j) {
    if (j.is_number()) return {j.get<double>(), 0.0};
    if (!j.is_array() || j.size() != 2) throw Error("io", "cplx_from_json", "complex number must be [re, im]");
    return {j[0].get<double>(), j[1].get<double>()};
}

json to_json(const Mat& m) {
    json data = json::array();
    for (Eigen::Index i = 0; i < m.rows(); ++i)
        for (Eigen::Index k = 0; k < m.cols(); ++k) data.push_back(to_json(m(i, k)));
    return {{"rows", m.rows()}, {"cols", m.cols()}, {"data", data}};
}

Mat mat_from_json(const json& j) {
    const auto r = j.at("rows").get<Eigen::Index>();
    const auto c = j.at("cols").get<Eigen::Index>();
    const auto& d = j.at("data");
    if (static_cast<Eigen::Index>(d.size()) != r * c) {
        throw DimensionError("io", "mat_from_json", "data has " + std::to_string(d.size()) + " entries, expected " +
                                                        std::to_string(r * c));
    }
    Mat m(r, c);
    for (Eigen::Index i = 0; i < r; ++i)
        for (Eigen::Index k = 0; k < c; ++k) m(i, k) = cplx_from_json(d[static_cast<size_t>(i * c + k)]);
    return m;
}

json to_json(const SLHModel& m) {
    return {{"S", to_json(m.S)},
            {"L_minus", to_json(m.L_minus)},
            {"L_plus", to_json(m.L_plus)},
            {"omega", to_json(m.omega)},
            {"eps", to_json(m.eps)}};
}

SLHModel slh_from_json(const json& j) {
    SLHModel m;
    m.S = mat_from_json(j.at("S"));
    m.L_minus = mat_from_json(j.at("L_minus"));
    m.L_plus = mat_from_json(j.at("L_plus"));
    m.omega = mat_from_json(j.at("omega"));
    m.eps = mat_from_json(j.at("eps"));
    m.validate();
    return m;
}

json to_json(const StateSpaceModel& m) {
    return {{"A", to_json(m.A)}, {"B", to_json(m.B)}, {"C", to_json(m.C)}, {"D", to_json(m.D)}};
}

StateSpaceModel statespace_from_json(const json& j) {
    StateSpaceModel m{mat_from_json(j.at("A")), mat_from_json(j.at("B")), mat_from_json(j.at("C")),
                      mat_from_json(j.at("D"))};
    m.validate_shapes();
    return m;
}

json network_to_json(const DelayNetwork& n) {
    return {{"open", {{"state_space", to_json(n.open_tf().realization())}}},
            {"external_ports", n.external_ports()},
            {"delays", n.delays().delays},
            {"base_period", n.delays().base_period}};
}

DelayNetwork network_from_json(const json& j) {
    const auto& open = j.at("open");
    RationalTF tf;
    if (open.contains("slh")) {
        tf = RationalTF(slh_to_statespace(slh_from_json(open.at("slh"))));
    } else if (open.contains("state_space")) {
        tf = RationalTF(statespace_from_json(open.at("state_space")));
    } else {
        throw Error("io", "network_from_json", "\"open\" needs an \"slh\" or \"state_space\" entry");
    }
    const int ext = j.at("external_ports").get<int>();
    if (j.contains("input_phase")) {
        const double ph = j.at("input_phase").get<double>();
        Mat d = Mat::Identity(tf.inputs(), tf.inputs());
        for (int i = 2 * ext; i < tf.inputs(); i += 2) {
            d(i, i) = std::polar(1.0, ph);
            d(i + 1, i + 1) = std::polar(1.0, -ph);
        }
        tf = with_input_dressing(tf, d);
    }
    DelaySpec spec{j.at("delays").get<std::vector<double>>(), j.at("base_period").get<double>()};
    return DelayNetwork(std::move(tf), ext, std::move(spec));
}

json to_json(const AssumptionReport& r) {
    json checks = json::array();
    for (const auto& c : r.checks) {
        checks.push_back({{"id", c.id},
                          {"name", c.name},
                          {"status", to_string(c.status)},
                          {"measured", c.measured},
                          {"detail", c.detail}});
    }
    return {{"all_pass", r.all_pass()}, {"checks", checks}};
}

json to_json(const SearchStrip& s) {
    return {{"c_low", s.c_low},
            {"c_high", s.c_high},
            {"raw_low", s.raw_low},
            {"raw_high", s.raw_high},
            {"period", s.period},
            {"sigma_min_T4", s.sigma_min_T4},
            {"sigma_max_T4", s.sigma_max_T4},
            {"search_re", {s.search_re_lo, s.search_re_hi}}};
}

json to_json(const ZeroPoleRecord& r) {
    json ev = json::array();
    for (Eigen::Index i = 0; i < r.eigenvector.size(); ++i) ev.push_back(to_json(r.eigenvector(i)));
    return {{"position", to_json(r.position)},
            {"kind", to_string(r.kind)},
            {"which", r.which == Which::exact ? "exact" : "static"},
            {"multiplicity", r.multiplicity},
            {"residual", r.residual},
            {"sigma2_rel", r.sigma2_rel},
            {"j_norm", r.j_norm},
            {"degenerate", r.degenerate},
            {"eigenvector", ev},
            {"partner_neg_conj", r.partner_neg_conj},
            {"partner_conj", r.partner_conj}};
}

std::string records_csv(const std::vector<ZeroPoleRecord>& recs) {
    std::ostringstream os;
    os << std::setprecision(17);
    os << "kind,which,re,im,multiplicity,residual,degenerate\n";
    for (const auto& r : recs) {
        os << to_string(r.kind) << ',' << (r.which == Which::exact ? "exact" : "static") << ',' << r.position.real()
           << ',' << r.position.imag() << ',' << r.multiplicity << ',' << r.residual << ',' << (r.degenerate ? 1 : 0)
           << '\n';
    }
    return os.str();
}

namespace {

FactorVariant variant_from(const std::string& s) {
    if (s == "complex_pair") return FactorVariant::complex_pair;
    if (s == "real_pair") return FactorVariant::real_pair;
    if (s == "modified_degenerate") return FactorVariant::modified_degenerate;
    if (s == "static_ladder") return FactorVariant::static_ladder;
    throw Error("io", "factor_from_json", "unknown factor variant '" + s + "'");
}

json vec_json(const Vec& v) {
    json a = json::array();
    for (Eigen::Index i = 0; i < v.size(); ++i) a.push_back(to_json(v(i)));
    return a;
}

Vec vec_from(const json& j) {
    Vec v(static_cast<Eigen::Index>(j.size()));
    for (size_t i = 0; i < j.size(); ++i) v(static_cast<Eigen::Index>(i)) = cplx_from_json(j[i]);
    return v;
}

}  // namespace

json to_json(const CanonicalFactor& f) {
    json out = {{"variant", to_string(f.variant)}, {"V", to_json(f.V)}, {"v1", vec_json(f.v1)}, {"v2", vec_json(f.v2)}};
    json zs = json::array(), ps = json::array();
    for (cplx z : f.zeros()) zs.push_back(to_json(z));
    for (cplx p : f.poles()) ps.push_back(to_json(p));
    out["zeros"] = zs;
    out["poles"] = ps;
    switch (f.variant) {
        case FactorVariant::real_pair:
            out["z1"] = f.z1;
            out["z2"] = f.z2;
            break;
        case FactorVariant::static_ladder:
            out["z0"] = to_json(f.z0);
            out["period"] = f.ladder_period;
            out["excluded_levels"] = f.ladder_excluded;
            break;
        default: out["z0"] = to_json(f.z0);
    }
    if (f.variant == FactorVariant::complex_pair || f.variant == FactorVariant::real_pair) {
        try {
            const SLHParams p = factor_to_slh(f);
            json l = json::array();
            for (Eigen::Index i = 0; i < p.L_minus.size(); ++i) l.push_back({to_json(p.L_minus(i)), to_json(p.L_plus(i))});
            out["slh"] = {{"kappa", p.kappa}, {"c", p.c}, {"omega", p.omega}, {"eps", to_json(p.eps)}, {"L", l}};
        } catch (const Error& e) {
            out["slh"] = nullptr;
            out["slh_error"] = e.what();
        }
    }
    return out;
}

CanonicalFactor factor_from_json(const json& j) {
    CanonicalFactor f;
    f.variant = variant_from(j.at("variant").get<std::string>());
    f.V = mat_from_json(j.at("V"));
    f.v1 = vec_from(j.at("v1"));
    f.v2 = vec_from(j.at("v2"));
    if (f.variant == FactorVariant::real_pair) {
        f.z1 = j.at("z1").get<double>();
        f.z2 = j.at("z2").get<double>();
    } else {
        f.z0 = cplx_from_json(j.at("z0"));
    }
    if (f.variant == FactorVariant::static_ladder) {
        f.ladder_period = j.at("period").get<double>();
        f.ladder_excluded = j.at("excluded_levels").get<std::vector<int>>();
    }
    return f;
}

json to_json(const CascadeResult& r) {
    json fs = json::array();
    for (const auto& f : r.factors) fs.push_back(to_json(f));
    json diag = json::array();
    for (const auto& d : r.diagnostics) {
        diag.push_back({{"index", d.index},
                        {"kind", d.kind},
                        {"z", to_json(d.z)},
                        {"eigen_residual", d.eigen_residual},
                        {"removable", d.report.removable},
                        {"sigma_min_rel", d.report.sigma_min_rel},
                        {"det_gap", d.report.det_gap},
                        {"growth", d.report.growth},
                        {"detail", d.report.detail}});
    }
    return {{"convention", "T(z) = B P_k(z) ... P_1(z); factors listed P_1 first"},
            {"factors", fs},
            {"B", to_json(r.B)},
            {"B_dispersion", r.B_dispersion},
            {"B_origin", to_json(r.B_origin)},
            {"diagnostics", diag},
            {"notes", r.notes}};
}

CascadeResult cascade_from_json(const json& j) {
    CascadeResult r;
    for (const auto& f : j.at("factors")) r.factors.push_back(factor_from_json(f));
    r.B = mat_from_json(j.at("B"));
    r.B_dispersion = j.at("B_dispersion").get<double>();
    r.B_origin = mat_from_json(j.at("B_origin"));
    if (j.contains("notes")) r.notes = j.at("notes").get<std::vector<std::string>>();
    return r;
}

std::string tf_samples_csv(const CascadeResult& r, const DelayNetwork& n, const std::vector<double>& omegas,
                           std::vector<double>* skipped) {
    std::ostringstream os;
    os << std::setprecision(12);
    os << "omega,T00_re,T00_im,T01_re,T01_im,R00_re,R00_im,R01_re,R01_im,rel_err,prefactor_re,prefactor_im\n";
    const cplx pre = r.B_origin(0, 0);
    for (double w : omegas) {
        const cplx z(0.0, w);
        Mat t, a;
        try {
            t = n.closed_tf(z);
            a = r.eval_origin(z);
        } catch (const PoleProximityError&) {
            if (skipped) skipped->push_back(w);
            continue;
        }
        const double err = norm2(t - a) / norm2(t);
        os << w << ',' << t(0, 0).real() << ',' << t(0, 0).imag() << ',' << t(0, 1).real() << ',' << t(0, 1).imag()
           << ',' << a(0, 0).real() << ',' << a(0, 0).imag() << ',' << a(0, 1).real() << ',' << a(0, 1).imag() << ','
           << err << ',' << pre.real() << ',' << pre.imag() << '\n';
    }
    return os.str();
}

std::string sha256_hex(const std::string& bytes) {
    unsigned char md[EVP_MAX_MD_SIZE];
    unsigned int len = 0;
    if (EVP_Digest(bytes.data(), bytes.size(), md, &len, EVP_sha256(), nullptr) != 1) {
        throw Error("io", "sha256_hex", "digest failed");
    }
    std::ostringstream os;
    for (unsigned int i = 0; i < len; ++i) os << std::hex << std::setw(2) << std::setfill('0') << static_cast<int>(md[i]);
    return os.str();
}

Manifest::Manifest(std::filesystem::path dir) : dir_(std::move(dir)) { std::filesystem::create_directories(dir_); }

void Manifest::write(const std::string& name, const std::string& content) {
    std::ofstream f(dir_ / name, std::ios::binary);
    if (!f) throw Error("io", "Manifest::write", "cannot open " + (dir_ / name).string());
    f << content;
    files_.emplace_back(name, sha256_hex(content));
}

std::string Manifest::finish() {
    json files = json::array();
    for (const auto& [name, hash] : files_) files.push_back({{"path", name}, {"sha256", hash}});
    json m = meta_;
    m["files"] = files;
    const std::string text = m.dump(2) + "\n";
    std::ofstream f(dir_ / "manifest.json", std::ios::binary);
    if (!f) throw Error("io", "Manifest::finish", "cannot write manifest.json");
    f << text;
    return text;
}

std::string read_file(const std::filesystem::path& p) {
    std::ifstream f(p, std::ios::binary);
    if (!f) throw Error("io", "read_file", "cannot open " + p.string());
    std::ostringstream os;
    os << f.rdbuf();
    return os.str();
}

}  // namespace qc::io
