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

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <exception>
#include <functional>
#include <numbers>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <thread>
#include <vector>

#include "preent/qmath.hpp"
#include "preent/rng.hpp"
#include "preent/states.hpp"

namespace preent {

enum class Scenario { Standard, PbrVariant, Dces };

inline constexpr std::string_view scenario_name(Scenario s) {
    switch (s) {
        case Scenario::Standard:
            return "standard";
        case Scenario::PbrVariant:
            return "pbr";
        case Scenario::Dces:
            return "dces";
    }
    return "?";
}

inline std::optional<Scenario> parse_scenario(std::string_view s) {
    for (auto sc : {Scenario::Standard, Scenario::PbrVariant, Scenario::Dces}) {
        if (scenario_name(sc) == s) {
            return sc;
        }
    }
    return std::nullopt;
}

/// Invalid experiment configuration. `field()` names the offending field.
class ConfigError : public std::invalid_argument {
   public:
    ConfigError(std::string field, const std::string &message)
        : std::invalid_argument(field + ": " + message), field_(std::move(field)) {
    }
    const std::string &field() const {
        return field_;
    }

   private:
    std::string field_;
};

struct ExperimentConfig {
    std::uint64_t n_runs = 0;
    std::uint64_t master_seed = 0;
    PreparationBasis alice_basis = PreparationBasis::z_basis();
    PreparationBasis bob_basis = PreparationBasis::z_basis();
    std::vector<PauliAxis> tomography_axes{PauliAxis::X, PauliAxis::Y, PauliAxis::Z};
    Scenario scenario = Scenario::Standard;
    /// (ψ0, ψ0⊥) and (ψ1, ψ1⊥) for the PBR variant, shared by both sources.
    std::array<PreparationBasis, 2> pbr_bases{
        PreparationBasis::z_basis(), PreparationBasis::from_bloch(std::numbers::pi / 2, 0)};

    void validate() const {
        if (n_runs < 1) {
            throw ConfigError("nRuns", "must be at least 1");
        }
        if (tomography_axes.empty()) {
            throw ConfigError("tomographyAxes", "must not be empty");
        }
        auto sorted = tomography_axes;
        std::sort(sorted.begin(), sorted.end());
        if (std::adjacent_find(sorted.begin(), sorted.end()) != sorted.end()) {
            throw ConfigError("tomographyAxes", "contains a repeated axis");
        }
    }
};

/// Everything recorded about one run. Labels are absent in the D-CES
/// scenario; preparation-basis choices are present only in the PBR variant.
/// In D-CES the P and R parties are the outer qubits A1 and B2.
struct RunRecord {
    std::uint64_t run_id = 0;
    std::optional<int> alice_label;
    std::optional<int> bob_label;
    std::optional<int> alice_basis;
    std::optional<int> bob_basis;
    PauliAxis pA_axis = PauliAxis::Z;
    PauliAxis pB_axis = PauliAxis::Z;
    int pA_out = 1;
    int pB_out = 1;
    BellIndex q_out = BellIndex::PhiPlus;
    PauliAxis rC_axis = PauliAxis::Z;
    PauliAxis rD_axis = PauliAxis::Z;
    int rC_out = 1;
    int rD_out = 1;

    bool operator==(const RunRecord &) const = default;
};

struct MeasurementResult {
    std::size_t outcome = 0;
    DensityMatrix post_state;
};

inline constexpr double kCompletenessTolerance = 1e-10;
inline constexpr double kNegligibleProbability = 1e-14;

/// Born-rule measurement driven by a uniform variate u in [0, 1).
///
/// Outcome k has probability tr(Πk ρ) and leaves Πk ρ Πk / pk. Outcomes with
/// pk < 1e-14 are never selected.
inline MeasurementResult measure_projective(
    const DensityMatrix &state, std::span<const Projector> projectors, double u) {
    if (projectors.empty()) {
        throw std::invalid_argument("measure_projective: empty projector set");
    }
    ComplexMatrix sum(state.dim());
    for (const auto &p : projectors) {
        if (p.dim() != state.dim()) {
            throw std::invalid_argument("measure_projective: projector dimension does not match state");
        }
        sum += p.matrix();
    }
    if (max_abs_diff(sum, ComplexMatrix::identity(state.dim())) > kCompletenessTolerance) {
        throw std::invalid_argument("measure_projective: projectors do not sum to the identity");
    }

    std::vector<double> probs(projectors.size());
    double total = 0;
    for (std::size_t k = 0; k < projectors.size(); ++k) {
        const double pk = trace_of_product(projectors[k].matrix(), state.matrix()).real();
        probs[k] = pk < kNegligibleProbability ? 0.0 : pk;
        total += probs[k];
    }
    if (!(total > kNegligibleProbability)) {
        throw std::invalid_argument("measure_projective: all outcome probabilities vanish (invalid state)");
    }

    const double target = u * total;
    std::size_t chosen = projectors.size();
    double acc = 0;
    for (std::size_t k = 0; k < projectors.size(); ++k) {
        if (probs[k] == 0.0) {
            continue;
        }
        acc += probs[k];
        chosen = k;
        if (target < acc) {
            break;
        }
    }

    const ComplexMatrix &pi = projectors[chosen].matrix();
    const ComplexMatrix left = pi * state.matrix();
    // Πρ Π = (Π (Πρ)†)† since Π and ρ are Hermitian.
    ComplexMatrix collapsed = adjoint(pi * adjoint(left));
    collapsed = (collapsed + adjoint(collapsed)) * Complex{0.5 / trace(collapsed).real()};
    return {chosen, DensityMatrix::trusted(std::move(collapsed))};
}

inline MeasurementResult measure_projective(
    const DensityMatrix &state, std::span<const Projector> projectors, const RngStream &rng, Draw draw) {
    return measure_projective(state, projectors, rng.uniform(draw));
}

inline const std::vector<Projector> &bell_projectors() {
    static const std::vector<Projector> set = [] {
        std::vector<Projector> out;
        for (auto b : kAllBell) {
            out.push_back(bell_projector(b));
        }
        return out;
    }();
    return set;
}

/// Measures a two-qubit state in the Bell basis.
inline std::pair<BellIndex, DensityMatrix> bell_measure(const DensityMatrix &pair_state, double u) {
    if (pair_state.dim() != 4) {
        throw std::invalid_argument("bell_measure: expected a two-qubit state");
    }
    auto r = measure_projective(pair_state, bell_projectors(), u);
    return {static_cast<BellIndex>(r.outcome), std::move(r.post_state)};
}

inline std::pair<BellIndex, DensityMatrix> bell_measure(const DensityMatrix &pair_state, const RngStream &rng) {
    return bell_measure(pair_state, rng.uniform(Draw::Bell));
}

struct RunOptions {
    unsigned threads = 1;
    /// Called with the state that enters the entangling measurement. May be
    /// invoked from worker threads when threads > 1.
    std::function<void(std::uint64_t run_id, const DensityMatrix &)> on_enter_bell;
};

namespace detail {

/// Pauli measurement projector pairs (+ then -) embedded on each qubit.
class LocalMeasurements {
   public:
    explicit LocalMeasurements(std::size_t num_qubits) {
        sets_.resize(num_qubits);
        for (std::size_t q = 0; q < num_qubits; ++q) {
            for (auto axis : kAllAxes) {
                std::vector<Projector> pair;
                for (int sign : {1, -1}) {
                    pair.emplace_back(embed_single(pauli_projector(axis, sign).matrix(), q, num_qubits));
                }
                sets_[q].push_back(std::move(pair));
            }
        }
    }

    std::span<const Projector> on(std::size_t qubit, PauliAxis axis) const {
        return sets_[qubit][static_cast<std::size_t>(axis)];
    }

   private:
    std::vector<std::vector<std::vector<Projector>>> sets_;
};

inline PauliAxis draw_axis(const RngStream &rng, Draw draw, std::span<const PauliAxis> axes) {
    auto k = static_cast<std::size_t>(rng.uniform(draw) * static_cast<double>(axes.size()));
    return axes[std::min(k, axes.size() - 1)];
}

inline int sign_of(std::size_t outcome) {
    return outcome == 0 ? 1 : -1;
}

class Engine {
   public:
    Engine(const ExperimentConfig &config, const RunOptions &options)
        : config_(config),
          options_(options),
          two_qubit_(2),
          four_qubit_(config.scenario == Scenario::Dces ? 4 : 1) {
        if (config.scenario == Scenario::Dces) {
            for (auto b : kAllBell) {
                inner_bell_.emplace_back(embed_adjacent_pair(bell_projector(b).matrix(), 1, 4));
            }
        }
    }

    RunRecord run(std::uint64_t run_id) const {
        return config_.scenario == Scenario::Dces ? run_dces(run_id) : run_pair(run_id);
    }

   private:
    // Standard and PBR: one qubit from each source, A slow, B fast.
    RunRecord run_pair(std::uint64_t run_id) const {
        const RngStream rng(config_.master_seed, run_id);
        RunRecord rec;
        rec.run_id = run_id;
        rec.alice_label = rng.coin(Draw::Labels, 0) ? 2 : 1;
        rec.bob_label = rng.coin(Draw::Labels, 1) ? 2 : 1;
        const Ket *alice = nullptr;
        const Ket *bob = nullptr;
        if (config_.scenario == Scenario::PbrVariant) {
            rec.alice_basis = rng.coin(Draw::Labels, 2) ? 1 : 0;
            rec.bob_basis = rng.coin(Draw::Labels, 3) ? 1 : 0;
            alice = &config_.pbr_bases[*rec.alice_basis].state(*rec.alice_label);
            bob = &config_.pbr_bases[*rec.bob_basis].state(*rec.bob_label);
        } else {
            alice = &config_.alice_basis.state(*rec.alice_label);
            bob = &config_.bob_basis.state(*rec.bob_label);
        }
        DensityMatrix state = DensityMatrix::pure(tensor(*alice, *bob));

        rec.pA_axis = draw_axis(rng, Draw::PAxisA, config_.tomography_axes);
        auto m = measure_projective(state, two_qubit_.on(0, rec.pA_axis), rng, Draw::POutcomeA);
        rec.pA_out = sign_of(m.outcome);
        rec.pB_axis = draw_axis(rng, Draw::PAxisB, config_.tomography_axes);
        m = measure_projective(m.post_state, two_qubit_.on(1, rec.pB_axis), rng, Draw::POutcomeB);
        rec.pB_out = sign_of(m.outcome);

        if (options_.on_enter_bell) {
            options_.on_enter_bell(run_id, m.post_state);
        }
        auto [bell, after] = bell_measure(m.post_state, rng);
        rec.q_out = bell;

        rec.rC_axis = draw_axis(rng, Draw::RAxisC, config_.tomography_axes);
        m = measure_projective(after, two_qubit_.on(0, rec.rC_axis), rng, Draw::ROutcomeC);
        rec.rC_out = sign_of(m.outcome);
        rec.rD_axis = draw_axis(rng, Draw::RAxisD, config_.tomography_axes);
        m = measure_projective(m.post_state, two_qubit_.on(1, rec.rD_axis), rng, Draw::ROutcomeD);
        rec.rD_out = sign_of(m.outcome);
        return rec;
    }

    // Register order (A1, A2, B1, B2); pairs (A1, A2) and (B1, B2) start as
    // singlets, the inner qubits A2 and B1 go to the Bell measurement.
    RunRecord run_dces(std::uint64_t run_id) const {
        static const DensityMatrix initial = DensityMatrix::pure(
            tensor(bell_state(BellIndex::PsiMinus), bell_state(BellIndex::PsiMinus)));
        const RngStream rng(config_.master_seed, run_id);
        RunRecord rec;
        rec.run_id = run_id;

        rec.pA_axis = draw_axis(rng, Draw::PAxisA, config_.tomography_axes);
        auto m = measure_projective(initial, four_qubit_.on(0, rec.pA_axis), rng, Draw::POutcomeA);
        rec.pA_out = sign_of(m.outcome);
        rec.pB_axis = draw_axis(rng, Draw::PAxisB, config_.tomography_axes);
        m = measure_projective(m.post_state, four_qubit_.on(3, rec.pB_axis), rng, Draw::POutcomeB);
        rec.pB_out = sign_of(m.outcome);

        if (options_.on_enter_bell) {
            options_.on_enter_bell(run_id, m.post_state);
        }
        m = measure_projective(m.post_state, inner_bell_, rng, Draw::Bell);
        rec.q_out = static_cast<BellIndex>(m.outcome);

        rec.rC_axis = draw_axis(rng, Draw::RAxisC, config_.tomography_axes);
        m = measure_projective(m.post_state, four_qubit_.on(0, rec.rC_axis), rng, Draw::ROutcomeC);
        rec.rC_out = sign_of(m.outcome);
        rec.rD_axis = draw_axis(rng, Draw::RAxisD, config_.tomography_axes);
        m = measure_projective(m.post_state, four_qubit_.on(3, rec.rD_axis), rng, Draw::ROutcomeD);
        rec.rD_out = sign_of(m.outcome);
        return rec;
    }

    const ExperimentConfig &config_;
    const RunOptions &options_;
    LocalMeasurements two_qubit_;
    LocalMeasurements four_qubit_;
    std::vector<Projector> inner_bell_;
};

}  // namespace detail

/// Simulates the configured experiment. Records come back in run-id order and
/// are identical for any thread count.
inline std::vector<RunRecord> run_experiment(const ExperimentConfig &config, const RunOptions &options = {}) {
    config.validate();
    const detail::Engine engine(config, options);
    std::vector<RunRecord> records(config.n_runs);
    const std::uint64_t threads = std::clamp<std::uint64_t>(options.threads, 1, config.n_runs);

    auto shard = [&](std::uint64_t begin, std::uint64_t end) {
        for (std::uint64_t i = begin; i < end; ++i) {
            records[i] = engine.run(i);
        }
    };
    if (threads == 1) {
        shard(0, config.n_runs);
        return records;
    }

    std::vector<std::exception_ptr> errors(threads);
    std::vector<std::thread> workers;
    const std::uint64_t chunk = (config.n_runs + threads - 1) / threads;
    for (std::uint64_t t = 0; t < threads; ++t) {
        const std::uint64_t begin = std::min(config.n_runs, t * chunk);
        const std::uint64_t end = std::min(config.n_runs, begin + chunk);
        workers.emplace_back([&, t, begin, end] {
            try {
                shard(begin, end);
            } catch (...) {
                errors[t] = std::current_exception();
            }
        });
    }
    for (auto &w : workers) {
        w.join();
    }
    for (auto &e : errors) {
        if (e) {
            std::rethrow_exception(e);
        }
    }
    return records;
}

}  // namespace preent
