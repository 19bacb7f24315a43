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

#include <iostream>
#include <map>
#include <optional>
#include <string>

#include "CLI11.hpp"
#include "preent/cli.hpp"

int main(int argc, char **argv) {
    using namespace preent;

    CLI::App app{"Monte-Carlo simulator and analysis tools for pre-entanglement experiments"};
    app.require_subcommand(1);

    const std::map<std::string, Stage> stages{{"P", Stage::P}, {"R", Stage::R}};
    const std::map<std::string, Scenario> scenarios{
        {"standard", Scenario::Standard}, {"pbr", Scenario::PbrVariant}, {"dces", Scenario::Dces}};

    cli::SimulateOptions sim;
    std::optional<std::string> sim_config;
    std::optional<std::uint64_t> sim_seed;
    std::optional<std::uint64_t> sim_runs;
    std::optional<Scenario> sim_scenario;
    auto *simulate = app.add_subcommand("simulate", "Generate run records (JSONL)");
    simulate->add_option("--config", sim_config, "Experiment config (JSON)")->check(CLI::ExistingFile);
    simulate->add_option("--out", sim.out_path, "Record file to write")->required();
    simulate->add_option("--seed", sim_seed, "Override masterSeed");
    simulate->add_option("--runs", sim_runs, "Override nRuns");
    simulate->add_option("--scenario", sim_scenario, "Override scenario")
        ->transform(CLI::CheckedTransformer(scenarios, CLI::ignore_case));
    simulate->add_option("--threads", sim.threads, "Worker threads (results do not depend on it)")
        ->check(CLI::PositiveNumber);

    cli::ReconstructCommand rec;
    auto *reconstruct = app.add_subcommand("reconstruct", "Reconstruct a two-qubit state from tomography data");
    reconstruct->add_option("--records", rec.records_path, "Record file")->required();
    reconstruct->add_option("--stage", rec.stage, "Tomography stage")
        ->transform(CLI::CheckedTransformer(stages, CLI::ignore_case));
    reconstruct->add_option("--criterion", rec.criterion, "Selection, e.g. q=PhiPlus&aliceLabel=1");
    reconstruct->add_option("--out", rec.out_path, "Report file (stdout when omitted)");
    reconstruct->add_flag("--force", rec.force, "Allow fewer than 50 counts per setting pair");

    cli::CertifyCommand cert;
    auto *certify = app.add_subcommand("certify", "Certify entanglement of a reconstructed state");
    certify->add_option("--records", cert.records_path, "Record file");
    certify->add_option("--report", cert.report_path, "Report written by reconstruct");
    certify->add_option("--stage", cert.stage, "Tomography stage (with --records)")
        ->transform(CLI::CheckedTransformer(stages, CLI::ignore_case));
    certify->add_option("--criterion", cert.criterion, "Selection (with --records)");
    certify->add_option("--out", cert.out_path, "Report file (stdout when omitted)");
    certify->add_flag("--force", cert.force, "Allow fewer than 50 counts per setting pair");

    bool inject_sign_flip = false;
    auto *oracle = app.add_subcommand("oracle", "Check the analytic conditional-probability identities");
    oracle->add_flag("--inject-sign-flip", inject_sign_flip, "Test hook: corrupt the closed form");

    cli::ReportCommand rep;
    auto *report = app.add_subcommand("report", "Full analysis report for a record file");
    report->add_option("--records", rep.records_path, "Record file")->required();
    report->add_option("--out", rep.out_path, "Report file (stdout when omitted)");
    report->add_flag("--force", rep.force, "Allow fewer than 50 counts per setting pair");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError &e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : cli::kExitUsage;
    }

    if (*simulate) {
        sim.config_path = sim_config;
        sim.seed = sim_seed;
        sim.runs = sim_runs;
        sim.scenario = sim_scenario;
        return cli::cmd_simulate(sim, std::cout, std::cerr);
    }
    if (*reconstruct) {
        return cli::cmd_reconstruct(rec, std::cout, std::cerr);
    }
    if (*certify) {
        return cli::cmd_certify(cert, std::cout, std::cerr);
    }
    if (*oracle) {
        return cli::cmd_oracle(inject_sign_flip, std::cout, std::cerr);
    }
    if (*report) {
        return cli::cmd_report(rep, std::cout, std::cerr);
    }
    return cli::kExitUsage;
}
