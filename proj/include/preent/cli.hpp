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

#include <chrono>
#include <functional>
#include <iomanip>
#include <iostream>
#include <optional>
#include <string>

#include "preent/analysis.hpp"
#include "preent/io.hpp"
#include "preent/protocol.hpp"
#include "preent/tomography.hpp"

namespace preent::cli {

using io::json;

/// 0 success, 1 analytic/acceptance failure, 2 usage error or empty selection.
enum ExitCode : int { kExitOk = 0, kExitAnalyticFailure = 1, kExitUsage = 2 };

namespace detail {

class Stopwatch {
   public:
    double seconds() const {
        return std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count();
    }

   private:
    std::chrono::steady_clock::time_point start_ = std::chrono::steady_clock::now();
};

/// Runs a command body, mapping input problems to exit code 2.
inline int guarded(std::ostream &err, const std::function<int()> &body) {
    try {
        return body();
    } catch (const EmptySelectionError &e) {
        err << "error: " << e.what() << '\n';
    } catch (const InsufficientCountsError &e) {
        err << "error: insufficient counts: " << e.what() << '\n';
    } catch (const ConfigError &e) {
        err << "error: invalid config field " << e.what() << '\n';
    } catch (const SelectionError &e) {
        err << "error: bad criterion: " << e.what() << '\n';
    } catch (const io::FormatError &e) {
        err << "error: malformed input: " << e.what() << '\n';
    } catch (const std::exception &e) {
        err << "error: " << e.what() << '\n';
    }
    return kExitUsage;
}

inline void emit(const json &j, const std::optional<std::string> &path, std::ostream &out) {
    if (path) {
        io::write_json_file(*path, j);
    } else {
        out << j.dump(2) << '\n';
    }
}

inline std::string fixed(double x, int digits = 4) {
    std::ostringstream s;
    s << std::fixed << std::setprecision(digits) << x;
    return s.str();
}

}  // namespace detail

struct SimulateOptions {
    std::optional<std::string> config_path;
    std::string out_path;
    std::optional<std::uint64_t> seed;
    std::optional<std::uint64_t> runs;
    std::optional<Scenario> scenario;
    unsigned threads = 1;
};

/// Config file plus overrides → validated config.
inline ExperimentConfig resolve_config(const SimulateOptions &opt) {
    ExperimentConfig config = opt.config_path ? io::load_config(*opt.config_path) : ExperimentConfig{};
    if (opt.seed) {
        config.master_seed = *opt.seed;
    }
    if (opt.runs) {
        config.n_runs = *opt.runs;
    }
    if (opt.scenario) {
        config.scenario = *opt.scenario;
    }
    config.validate();
    return config;
}

inline int cmd_simulate(const SimulateOptions &opt, std::ostream &out, std::ostream &err) {
    return detail::guarded(err, [&] {
        const ExperimentConfig config = resolve_config(opt);
        const auto records = run_experiment(config, RunOptions{opt.threads, {}});
        io::write_records_file(opt.out_path, config, records);
        const auto freq = bell_frequencies(records);
        out << "scenario " << scenario_name(config.scenario) << ", seed " << config.master_seed << ", runs "
            << records.size() << '\n';
        out << "config " << io::config_hash(config) << '\n';
        for (auto b : kAllBell) {
            out << "  " << std::left << std::setw(9) << bell_name(b) << ' '
                << detail::fixed(freq[static_cast<std::size_t>(b)]) << '\n';
        }
        return kExitOk;
    });
}

struct ReconstructCommand {
    std::string records_path;
    Stage stage = Stage::P;
    std::string criterion = "all";
    std::optional<std::string> out_path;
    bool force = false;
};

inline int cmd_reconstruct(const ReconstructCommand &opt, std::ostream &out, std::ostream &err) {
    return detail::guarded(err, [&] {
        const detail::Stopwatch clock;
        const auto crit = SelectionCriterion::parse(opt.criterion);
        const auto file = io::read_records_file(opt.records_path);
        ReconstructOptions ro;
        ro.force = opt.force;
        const auto rec = reconstruct(file.records, opt.stage, crit, ro);
        json report = io::report_envelope("reconstruct", file.config, file.config_hash, 0);
        report["settings"] = {
            {"records", opt.records_path}, {"stage", std::string(stage_name(opt.stage))},
            {"criterion", crit.to_string()}, {"force", opt.force}};
        report["reconstruction"] = io::reconstruction_to_json(rec);
        report["meta"]["wallTimeSeconds"] = clock.seconds();
        detail::emit(report, opt.out_path, out);
        if (opt.out_path) {
            out << "stage " << stage_name(opt.stage) << ", criterion " << crit.to_string() << ", selected "
                << rec.counts.total << ", fidelity to " << bell_name(BellIndex::PhiPlus) << ' '
                << detail::fixed(fidelity_pure(rec.physical, bell_state(BellIndex::PhiPlus))) << '\n';
        }
        return kExitOk;
    });
}

struct CertifyCommand {
    std::optional<std::string> records_path;
    std::optional<std::string> report_path;
    Stage stage = Stage::P;
    std::string criterion = "all";
    std::optional<std::string> out_path;
    bool force = false;
};

/// Certifies a reconstructed state. From records the selection is
/// reconstructed first; from a reconstruct report the stored physical state
/// and standard errors are used. When the criterion is exactly one Bell
/// outcome and the runs carry preparation labels, the contradiction report is
/// attached.
inline int cmd_certify(const CertifyCommand &opt, std::ostream &out, std::ostream &err) {
    return detail::guarded(err, [&] {
        const detail::Stopwatch clock;
        if (opt.records_path.has_value() == opt.report_path.has_value()) {
            throw std::invalid_argument("certify needs exactly one of --records or --report");
        }
        json report;
        CertificationReport cert;
        if (opt.report_path) {
            const json in = io::read_json_file(*opt.report_path);
            if (!in.contains("reconstruction")) {
                throw io::FormatError("report has no reconstruction section");
            }
            const auto &r = in.at("reconstruction");
            const DensityMatrix rho(io::matrix_from_json(r.at("physical")));
            const PauliTable se = io::pauli_table_from_json(r.at("standardErrors"));
            cert = certify(rho, &se);
            report = {{"kind", io::kReportKind}, {"schemaVersion", io::kReportSchemaVersion}, {"command", "certify"}};
            report["meta"] = in.value("meta", json::object());
            report["reconstruction"] = r;
        } else {
            const auto crit = SelectionCriterion::parse(opt.criterion);
            const auto file = io::read_records_file(*opt.records_path);
            ReconstructOptions ro;
            ro.force = opt.force;
            const auto rec = reconstruct(file.records, opt.stage, crit, ro);
            cert = certify(rec);
            report = io::report_envelope("certify", file.config, file.config_hash, 0);
            report["reconstruction"] = io::reconstruction_to_json(rec);
            const bool single_bell = crit.bell.size() == 1 && crit.to_string() == "q=" + std::string(bell_name(crit.bell[0]));
            if (single_bell && file.config.scenario != Scenario::Dces) {
                report["contradiction"] =
                    io::contradiction_to_json(contradiction_report(file.records, file.config, crit.bell[0], ro));
            }
        }
        report["certification"] = io::certification_to_json(cert);
        report["meta"]["wallTimeSeconds"] = clock.seconds();
        detail::emit(report, opt.out_path, out);
        if (opt.out_path) {
            out << "verdict " << verdict_name(cert.verdict) << ", negativity " << detail::fixed(cert.negativity)
                << ", concurrence " << detail::fixed(cert.concurrence) << ", chsh " << detail::fixed(cert.chsh_max)
                << ", min PT eigenvalue " << detail::fixed(cert.pt_spectrum[3]) << '\n';
        }
        return kExitOk;
    });
}

/// Prints the analytic identity table; exit 0 iff every check is within
/// tolerance.
inline int cmd_oracle(bool inject_sign_flip, std::ostream &out, std::ostream &err) {
    return detail::guarded(err, [&] {
        const auto rep = run_oracle(inject_sign_flip);
        out << "bell      A B  a  b   closed-form   bayes-pre     bayes-post    deviation\n";
        std::size_t verified = 0;
        for (const auto &r : rep.rows) {
            const bool ok = r.deviation() <= rep.tolerance;
            verified += ok;
            out << std::left << std::setw(9) << bell_name(r.bell) << ' ' << axis_name(r.axis_a) << ' '
                << axis_name(r.axis_b) << ' ' << (r.out_a > 0 ? " +" : " -") << ' ' << (r.out_b > 0 ? " +" : " -")
                << std::right << std::scientific << std::setprecision(6) << "  " << std::setw(12) << r.closed_form
                << "  " << std::setw(12) << r.bayes_pre << "  " << std::setw(12) << r.bayes_post << "  "
                << std::setw(10) << std::setprecision(2) << r.deviation() << (ok ? "" : "  MISMATCH") << '\n'
                << std::defaultfloat;
            if (!ok) {
                err << "identity violated for (" << bell_name(r.bell) << ", " << axis_name(r.axis_a)
                    << axis_name(r.axis_b) << ", " << (r.out_a > 0 ? '+' : '-') << (r.out_b > 0 ? '+' : '-')
                    << "): closed form " << r.closed_form << " vs Bayes " << r.bayes_pre << '\n';
            }
        }
        for (auto b : kAllBell) {
            out << "P[" << bell_name(b) << "] = " << rep.bell_marginals[static_cast<std::size_t>(b)] << '\n';
        }
        out << "exact-moment inversion: " << rep.inversion_states << " states, max error " << std::scientific
            << std::setprecision(2) << rep.max_inversion_error << std::defaultfloat << '\n';
        out << verified << " of " << rep.rows.size() << " identities verified\n";
        if (!rep.ok()) {
            out << "FAIL: " << rep.failures() << " check(s) outside " << rep.tolerance << '\n';
            return kExitAnalyticFailure;
        }
        out << "OK\n";
        return kExitOk;
    });
}

struct ReportCommand {
    std::string records_path;
    std::optional<std::string> out_path;
    bool force = false;
};

/// The headline document: unconditioned and Bell-conditioned reconstructions
/// at both stages, certification, and the scenario-specific sections.
inline json build_report(const io::RecordFile &file, const ReconstructOptions &ro) {
    json report = io::report_envelope("report", file.config, file.config_hash, 0);
    const auto &records = file.records;
    report["bellFrequencies"] = json::object();
    const auto freq = bell_frequencies(records);
    for (auto b : kAllBell) {
        report["bellFrequencies"][std::string(bell_name(b))] = freq[static_cast<std::size_t>(b)];
    }

    auto section = [&](const std::function<json()> &body) -> json {
        try {
            return body();
        } catch (const std::exception &e) {
            return {{"error", e.what()}};
        }
    };
    auto reconstructed = [&](Stage stage, const SelectionCriterion &c) {
        return section([&] {
            const auto rec = reconstruct(records, stage, c, ro);
            return json{
                {"reconstruction", io::reconstruction_to_json(rec)},
                {"certification", io::certification_to_json(certify(rec))}};
        });
    };

    report["unconditioned"] = {
        {"P", reconstructed(Stage::P, SelectionCriterion::all())},
        {"R", reconstructed(Stage::R, SelectionCriterion::all())}};

    json by_bell = json::object();
    for (auto b : kAllBell) {
        const auto c = SelectionCriterion::bell_outcome(b);
        json entry = {{"P", reconstructed(Stage::P, c)}, {"R", reconstructed(Stage::R, c)}};
        entry["preVsPostTraceDistance"] = section([&] {
            const auto p = reconstruct(records, Stage::P, c, ro);
            const auto r = reconstruct(records, Stage::R, c, ro);
            return json(trace_distance(p.physical.matrix(), r.physical.matrix()));
        });
        if (file.config.scenario != Scenario::Dces) {
            entry["contradiction"] =
                section([&] { return io::contradiction_to_json(contradiction_report(records, file.config, b, ro)); });
        }
        by_bell[std::string(bell_name(b))] = entry;
    }
    report["byBellOutcome"] = by_bell;

    if (file.config.scenario != Scenario::Dces) {
        report["partnerSubEnsembles"] =
            section([&] { return io::sub_ensembles_to_json(partner_sub_ensembles(records, BellIndex::PhiPlus)); });
    }
    if (file.config.scenario == Scenario::PbrVariant) {
        report["pbr"] = section([&] { return io::pbr_to_json(pbr_summary(records, ro)); });
    }
    return report;
}

inline int cmd_report(const ReportCommand &opt, std::ostream &out, std::ostream &err) {
    return detail::guarded(err, [&] {
        const detail::Stopwatch clock;
        const auto file = io::read_records_file(opt.records_path);
        ReconstructOptions ro;
        ro.force = opt.force;
        json report = build_report(file, ro);
        report["meta"]["wallTimeSeconds"] = clock.seconds();
        detail::emit(report, opt.out_path, out);
        if (opt.out_path) {
            out << "report written to " << *opt.out_path << '\n';
        }
        return kExitOk;
    });
}

}  // namespace preent::cli
