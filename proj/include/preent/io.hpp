// Copyright 2026 The preent Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include <cstdint>
#include <fstream>
#include <iomanip>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "json.hpp"
#include "preent/analysis.hpp"
#include "preent/protocol.hpp"
#include "preent/states.hpp"
#include "preent/tomography.hpp"

namespace preent::io {

using nlohmann::json;

inline constexpr int kRecordSchemaVersion = 1;
inline constexpr int kReportSchemaVersion = 1;
inline constexpr const char *kRecordKind = "preent.records";
inline constexpr const char *kReportKind = "preent.report";

class FormatError : public std::runtime_error {
   public:
    using std::runtime_error::runtime_error;
};

// ---------------------------------------------------------------------------
// Config.
// ---------------------------------------------------------------------------

inline json basis_to_json(const PreparationBasis &b) {
    return {{"theta", b.theta()}, {"phi", b.phi()}};
}

inline PreparationBasis basis_from_json(const json &j, const std::string &field) {
    if (!j.is_object()) {
        throw ConfigError(field, "expected an object with theta and phi");
    }
    for (const auto &[k, v] : j.items()) {
        if (k != "theta" && k != "phi") {
            throw ConfigError(field + "." + k, "unknown field");
        }
        if (!v.is_number()) {
            throw ConfigError(field + "." + k, "expected a number");
        }
    }
    return PreparationBasis::from_bloch(j.value("theta", 0.0), j.value("phi", 0.0));
}

inline json config_to_json(const ExperimentConfig &c) {
    json axes = json::array();
    for (auto a : c.tomography_axes) {
        axes.push_back(std::string(axis_name(a)));
    }
    return {
        {"nRuns", c.n_runs},
        {"masterSeed", c.master_seed},
        {"aliceBasis", basis_to_json(c.alice_basis)},
        {"bobBasis", basis_to_json(c.bob_basis)},
        {"tomographyAxes", axes},
        {"scenario", std::string(scenario_name(c.scenario))},
        {"pbrBases", json::array({basis_to_json(c.pbr_bases[0]), basis_to_json(c.pbr_bases[1])})},
    };
}

/// Strict parse: unknown fields and wrong types are ConfigErrors naming the
/// field. Missing fields keep their defaults. The result is not validated.
inline ExperimentConfig config_from_json(const json &j) {
    if (!j.is_object()) {
        throw ConfigError("config", "expected a JSON object");
    }
    ExperimentConfig c;
    for (const auto &[key, v] : j.items()) {
        if (key == "nRuns" || key == "masterSeed") {
            if (!v.is_number_integer() || (v.is_number_integer() && !v.is_number_unsigned() && v.get<std::int64_t>() < 0)) {
                throw ConfigError(key, "expected a non-negative integer");
            }
            (key == "nRuns" ? c.n_runs : c.master_seed) = v.get<std::uint64_t>();
        } else if (key == "aliceBasis") {
            c.alice_basis = basis_from_json(v, key);
        } else if (key == "bobBasis") {
            c.bob_basis = basis_from_json(v, key);
        } else if (key == "tomographyAxes") {
            if (!v.is_array()) {
                throw ConfigError(key, "expected an array of axis names");
            }
            c.tomography_axes.clear();
            for (const auto &a : v) {
                auto axis = a.is_string() ? parse_axis(a.get<std::string>()) : std::nullopt;
                if (!axis) {
                    throw ConfigError(key, "entries must be \"X\", \"Y\" or \"Z\"");
                }
                c.tomography_axes.push_back(*axis);
            }
        } else if (key == "scenario") {
            auto s = v.is_string() ? parse_scenario(v.get<std::string>()) : std::nullopt;
            if (!s) {
                throw ConfigError(key, "expected one of standard, pbr, dces");
            }
            c.scenario = *s;
        } else if (key == "pbrBases") {
            if (!v.is_array() || v.size() != 2) {
                throw ConfigError(key, "expected an array of two bases");
            }
            c.pbr_bases = {basis_from_json(v[0], key + "[0]"), basis_from_json(v[1], key + "[1]")};
        } else {
            throw ConfigError(key, "unknown field");
        }
    }
    return c;
}

inline ExperimentConfig load_config(const std::string &path) {
    std::ifstream in(path);
    if (!in) {
        throw std::runtime_error("cannot open config file '" + path + "'");
    }
    json j;
    try {
        in >> j;
    } catch (const json::parse_error &e) {
        throw ConfigError("config", std::string("JSON parse error: ") + e.what());
    }
    return config_from_json(j);
}

/// FNV-1a over the canonical (key-sorted) JSON form of the config.
inline std::string config_hash(const ExperimentConfig &c) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char ch : config_to_json(c).dump()) {
        h ^= ch;
        h *= 0x100000001b3ULL;
    }
    std::ostringstream s;
    s << "fnv1a64:" << std::hex << std::setw(16) << std::setfill('0') << h;
    return s.str();
}

// ---------------------------------------------------------------------------
// Run records (JSONL).
// ---------------------------------------------------------------------------

inline json optional_int(const std::optional<int> &v) {
    return v ? json(*v) : json(nullptr);
}

inline json record_to_json(const RunRecord &r) {
    json j = {
        {"runId", r.run_id},
        {"aliceLabel", optional_int(r.alice_label)},
        {"bobLabel", optional_int(r.bob_label)},
    };
    if (r.alice_basis || r.bob_basis) {
        j["aliceBasis"] = optional_int(r.alice_basis);
        j["bobBasis"] = optional_int(r.bob_basis);
    }
    j["pAAxis"] = std::string(axis_name(r.pA_axis));
    j["pAOut"] = r.pA_out;
    j["pBAxis"] = std::string(axis_name(r.pB_axis));
    j["pBOut"] = r.pB_out;
    j["qOut"] = std::string(bell_name(r.q_out));
    j["rCAxis"] = std::string(axis_name(r.rC_axis));
    j["rCOut"] = r.rC_out;
    j["rDAxis"] = std::string(axis_name(r.rD_axis));
    j["rDOut"] = r.rD_out;
    return j;
}

inline RunRecord record_from_json(const json &j) {
    auto field = [&](const char *key) -> const json & {
        if (!j.contains(key)) {
            throw FormatError(std::string("record is missing field '") + key + "'");
        }
        return j.at(key);
    };
    auto axis = [&](const char *key) {
        const auto &v = field(key);
        auto a = v.is_string() ? parse_axis(v.get<std::string>()) : std::nullopt;
        if (!a) {
            throw FormatError(std::string("record field '") + key + "' is not an axis");
        }
        return *a;
    };
    auto outcome = [&](const char *key) {
        const auto &v = field(key);
        if (!v.is_number_integer() || (v.get<int>() != 1 && v.get<int>() != -1)) {
            throw FormatError(std::string("record field '") + key + "' must be +1 or -1");
        }
        return v.get<int>();
    };
    auto opt_choice = [&](const char *key, int lo, int hi) -> std::optional<int> {
        if (!j.contains(key) || j.at(key).is_null()) {
            return std::nullopt;
        }
        const auto &v = j.at(key);
        if (!v.is_number_integer() || v.get<int>() < lo || v.get<int>() > hi) {
            throw FormatError(std::string("record field '") + key + "' is out of range");
        }
        return v.get<int>();
    };
    RunRecord r;
    const auto &id = field("runId");
    if (!id.is_number_unsigned() && !(id.is_number_integer() && id.get<std::int64_t>() >= 0)) {
        throw FormatError("record field 'runId' must be a non-negative integer");
    }
    r.run_id = id.get<std::uint64_t>();
    r.alice_label = opt_choice("aliceLabel", 1, 2);
    r.bob_label = opt_choice("bobLabel", 1, 2);
    r.alice_basis = opt_choice("aliceBasis", 0, 1);
    r.bob_basis = opt_choice("bobBasis", 0, 1);
    r.pA_axis = axis("pAAxis");
    r.pA_out = outcome("pAOut");
    r.pB_axis = axis("pBAxis");
    r.pB_out = outcome("pBOut");
    const auto &q = field("qOut");
    auto bell = q.is_string() ? parse_bell(q.get<std::string>()) : std::nullopt;
    if (!bell) {
        throw FormatError("record field 'qOut' is not a Bell outcome name");
    }
    r.q_out = *bell;
    r.rC_axis = axis("rCAxis");
    r.rC_out = outcome("rCOut");
    r.rD_axis = axis("rDAxis");
    r.rD_out = outcome("rDOut");
    return r;
}

struct RecordFile {
    ExperimentConfig config;
    std::string config_hash;
    std::vector<RunRecord> records;
};

inline json record_header(const ExperimentConfig &config) {
    return {
        {"kind", kRecordKind},
        {"schemaVersion", kRecordSchemaVersion},
        {"scenario", std::string(scenario_name(config.scenario))},
        {"configHash", config_hash(config)},
        {"config", config_to_json(config)},
    };
}

inline void write_records(std::ostream &out, const ExperimentConfig &config, std::span<const RunRecord> records) {
    out << record_header(config).dump() << '\n';
    for (const auto &r : records) {
        out << record_to_json(r).dump() << '\n';
    }
}

inline void write_records_file(
    const std::string &path, const ExperimentConfig &config, std::span<const RunRecord> records) {
    std::ofstream out(path, std::ios::binary);
    if (!out) {
        throw std::runtime_error("cannot open '" + path + "' for writing");
    }
    write_records(out, config, records);
    if (!out) {
        throw std::runtime_error("write to '" + path + "' failed");
    }
}

/// Parses a record stream: header line first, then one record per line with
/// strictly increasing run ids. The header's config hash must match its
/// config.
inline RecordFile read_records(std::istream &in) {
    std::string line;
    if (!std::getline(in, line)) {
        throw FormatError("record file is empty");
    }
    json header;
    try {
        header = json::parse(line);
    } catch (const json::parse_error &e) {
        throw FormatError(std::string("record header is not JSON: ") + e.what());
    }
    if (!header.is_object() || header.value("kind", "") != kRecordKind) {
        throw FormatError("first line is not a preent record header");
    }
    if (header.value("schemaVersion", -1) != kRecordSchemaVersion) {
        throw FormatError("unsupported record schema version");
    }
    RecordFile file;
    file.config = config_from_json(header.at("config"));
    file.config_hash = header.value("configHash", "");
    if (file.config_hash != config_hash(file.config)) {
        throw FormatError("record header config hash does not match its config");
    }
    std::size_t line_no = 1;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty()) {
            continue;
        }
        try {
            file.records.push_back(record_from_json(json::parse(line)));
        } catch (const json::parse_error &e) {
            throw FormatError("line " + std::to_string(line_no) + ": " + e.what());
        } catch (const FormatError &e) {
            throw FormatError("line " + std::to_string(line_no) + ": " + e.what());
        }
        if (file.records.size() > 1 && file.records.back().run_id <= file.records[file.records.size() - 2].run_id) {
            throw FormatError("line " + std::to_string(line_no) + ": run ids are not strictly increasing");
        }
    }
    return file;
}

inline RecordFile read_records_file(const std::string &path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw std::runtime_error("cannot open record file '" + path + "'");
    }
    return read_records(in);
}

// ---------------------------------------------------------------------------
// Reports.
// ---------------------------------------------------------------------------

/// Rows of [re, im] pairs, row-major.
inline json matrix_to_json(const ComplexMatrix &m) {
    json rows = json::array();
    for (std::size_t r = 0; r < m.dim(); ++r) {
        json row = json::array();
        for (std::size_t c = 0; c < m.dim(); ++c) {
            row.push_back(json::array({m(r, c).real(), m(r, c).imag()}));
        }
        rows.push_back(row);
    }
    return rows;
}

inline ComplexMatrix matrix_from_json(const json &j) {
    if (!j.is_array() || j.empty()) {
        throw FormatError("matrix must be a non-empty array of rows");
    }
    ComplexMatrix m(j.size());
    for (std::size_t r = 0; r < j.size(); ++r) {
        if (!j[r].is_array() || j[r].size() != j.size()) {
            throw FormatError("matrix rows must form a square matrix");
        }
        for (std::size_t c = 0; c < j.size(); ++c) {
            const auto &e = j[r][c];
            if (!e.is_array() || e.size() != 2 || !e[0].is_number() || !e[1].is_number()) {
                throw FormatError("matrix entries must be [re, im] pairs");
            }
            m(r, c) = Complex{e[0].get<double>(), e[1].get<double>()};
        }
    }
    return m;
}

inline json pauli_table_to_json(const PauliTable &t) {
    json rows = json::array();
    for (const auto &row : t) {
        rows.push_back(json(row));
    }
    return rows;
}

inline PauliTable pauli_table_from_json(const json &j) {
    PauliTable t{};
    if (!j.is_array() || j.size() != 4) {
        throw FormatError("Pauli table must be 4x4");
    }
    for (std::size_t i = 0; i < 4; ++i) {
        if (!j[i].is_array() || j[i].size() != 4) {
            throw FormatError("Pauli table must be 4x4");
        }
        for (std::size_t k = 0; k < 4; ++k) {
            t[i][k] = j[i][k].get<double>();
        }
    }
    return t;
}

inline json counts_to_json(const CountTable &t) {
    json out = json::object();
    for (auto a : kAllAxes) {
        for (auto b : kAllAxes) {
            json cell = json::object();
            for (int sa : {1, -1}) {
                for (int sb : {1, -1}) {
                    cell[std::string(sa > 0 ? "+" : "-") + (sb > 0 ? "+" : "-")] = t.at(a, b, sa, sb);
                }
            }
            out[std::string(axis_name(a)) + std::string(axis_name(b))] = cell;
        }
    }
    return out;
}

inline json reconstruction_to_json(const ReconstructionResult &r) {
    json fid = json::object();
    for (auto b : kAllBell) {
        fid[std::string(bell_name(b))] = fidelity_pure(r.physical, bell_state(b));
    }
    return {
        {"stage", std::string(stage_name(r.stage))},
        {"criterion", r.criterion.to_string()},
        {"nSelected", r.counts.total},
        {"counts", counts_to_json(r.counts)},
        {"correlators", pauli_table_to_json(r.correlators)},
        {"standardErrors", pauli_table_to_json(r.std_errors)},
        {"raw", matrix_to_json(r.raw)},
        {"physical", matrix_to_json(r.physical.matrix())},
        {"bellFidelity", fid},
    };
}

inline json certification_to_json(const CertificationReport &c) {
    return {
        {"ptSpectrum", c.pt_spectrum},
        {"pptMinEigenvalue", c.pt_spectrum[3]},
        {"negativity", c.negativity},
        {"concurrence", c.concurrence},
        {"chshMax", c.chsh_max},
        {"minEigenvalueStdError", c.min_eigenvalue_std_error},
        {"tolerance", c.tolerance},
        {"verdict", std::string(verdict_name(c.verdict))},
    };
}

inline json label_weights_to_json(const PrepLabelState &p) {
    json arr = json::array();
    for (const auto &w : p.weights) {
        json e = {{"aliceLabel", w.alice_label}, {"bobLabel", w.bob_label}, {"count", w.count}, {"frequency", w.frequency}};
        if (w.alice_basis) {
            e["aliceBasis"] = *w.alice_basis;
        }
        if (w.bob_basis) {
            e["bobBasis"] = *w.bob_basis;
        }
        arr.push_back(e);
    }
    return arr;
}

inline json contradiction_to_json(const ContradictionReport &c) {
    return {
        {"bell", std::string(bell_name(c.bell))},
        {"tomographic",
         {{"reconstruction", reconstruction_to_json(c.tomographic)},
          {"fidelity", c.tomographic_fidelity},
          {"certification", certification_to_json(c.tomographic_certification)}}},
        {"prepLabel",
         {{"state", matrix_to_json(c.prep_label.state.matrix())},
          {"nSelected", c.prep_label.n_selected},
          {"weights", label_weights_to_json(c.prep_label)},
          {"certification", certification_to_json(c.prep_label_certification)}}},
    };
}

inline json sub_ensembles_to_json(const std::vector<SubEnsemble> &subs) {
    json arr = json::array();
    for (const auto &s : subs) {
        arr.push_back({
            {"criterion", s.criterion.to_string()},
            {"bloch", s.estimate.bloch},
            {"standardErrors", s.estimate.std_error},
            {"counts", s.estimate.counts},
            {"expected", s.expected},
            {"maxDeviation", s.max_deviation()},
        });
    }
    return arr;
}

inline json pbr_to_json(const PbrSummary &p) {
    return {
        {"nRuns", p.n_runs},
        {"sourceEliminatedFraction", p.source_eliminated_fraction},
        {"pairEliminatedFraction", p.pair_eliminated_fraction},
        {"retainedRuns", p.retained_runs},
        {"phiPlus", reconstruction_to_json(p.phi_plus)},
        {"phiPlusCertification", certification_to_json(p.phi_plus_certification)},
    };
}

/// Common report envelope.
inline json report_envelope(
    const std::string &command, const ExperimentConfig &config, const std::string &hash, double wall_seconds) {
    return {
        {"kind", kReportKind},
        {"schemaVersion", kReportSchemaVersion},
        {"command", command},
        {"meta",
         {{"scenario", std::string(scenario_name(config.scenario))},
          {"masterSeed", config.master_seed},
          {"nRuns", config.n_runs},
          {"configHash", hash},
          {"wallTimeSeconds", wall_seconds}}},
    };
}

inline void write_json_file(const std::string &path, const json &j) {
    std::ofstream out(path, std::ios::binary);
    if (!out) {
        throw std::runtime_error("cannot open '" + path + "' for writing");
    }
    out << j.dump(2) << '\n';
    if (!out) {
        throw std::runtime_error("write to '" + path + "' failed");
    }
}

inline json read_json_file(const std::string &path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw std::runtime_error("cannot open '" + path + "'");
    }
    try {
        return json::parse(in);
    } catch (const json::parse_error &e) {
        throw FormatError("'" + path + "' is not JSON: " + e.what());
    }
}

}  // namespace preent::io
