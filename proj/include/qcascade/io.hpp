#pragma once

#include "qcascade/cascade_engine.hpp"

#include <json.hpp>

#include <filesystem>
#include <string>
#include <vector>

namespace qc::io {

using nlohmann::json;

// Complex numbers are [re, im]; matrices {"rows", "cols", "data"} with data
// row-major as a flat list of [re, im] pairs.
json to_json(cplx z);
cplx cplx_from_json(const json& j);
json to_json(const Mat& m);
Mat mat_from_json(const json& j);

json to_json(const SLHModel& m);
SLHModel slh_from_json(const json& j);
json to_json(const StateSpaceModel& m);
StateSpaceModel statespace_from_json(const json& j);

// Network description:
// {"open": {"slh": {...}} | {"state_space": {...}},
//  "external_ports": N, "delays": [...], "base_period": T0,
//  "input_phase": optional loop phase applied to the internal inputs}
json network_to_json(const DelayNetwork& n);
DelayNetwork network_from_json(const json& j);

json to_json(const AssumptionReport& r);
json to_json(const SearchStrip& s);
json to_json(const ZeroPoleRecord& r);
std::string records_csv(const std::vector<ZeroPoleRecord>& recs);

json to_json(const CanonicalFactor& f);
CanonicalFactor factor_from_json(const json& j);
json to_json(const CascadeResult& r);
CascadeResult cascade_from_json(const json& j);

// Samples of T~(i w) and of the origin-matched reconstruction. Columns: omega,
// re/im of entries (0,0) and (0,1) of both, relative error, prefactor (0,0).
// Points inside a pole guard are skipped and reported through `skipped`.
std::string tf_samples_csv(const CascadeResult& r, const DelayNetwork& n, const std::vector<double>& omegas,
                           std::vector<double>* skipped = nullptr);

std::string sha256_hex(const std::string& bytes);

// Files written under one output directory together with their hashes.
class Manifest {
public:
    explicit Manifest(std::filesystem::path dir);
    // Writes `content` to dir/name and records its hash.
    void write(const std::string& name, const std::string& content);
    void set_meta(const std::string& key, json value) { meta_[key] = std::move(value); }
    // Writes manifest.json; returns its text.
    std::string finish();
    const std::filesystem::path& dir() const { return dir_; }

private:
    std::filesystem::path dir_;
    json meta_ = json::object();
    std::vector<std::pair<std::string, std::string>> files_;  // name, sha256
};

std::string read_file(const std::filesystem::path& p);

}  // namespace qc::io
