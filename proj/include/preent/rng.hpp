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

#include <array>
#include <cstdint>

namespace preent {

/// Philox4x32-10 counter-based generator (Salmon et al., SC'11).
///
/// A pure function of (counter, key): there is no hidden state to advance, so
/// any draw can be reproduced in isolation.
class Philox4x32 {
   public:
    using Counter = std::array<std::uint32_t, 4>;
    using Key = std::array<std::uint32_t, 2>;

    static Counter generate(Counter ctr, Key key) {
        for (int round = 0; round < 10; ++round) {
            if (round > 0) {
                key[0] += kWeyl0;
                key[1] += kWeyl1;
            }
            const std::uint64_t p0 = std::uint64_t{kMul0} * ctr[0];
            const std::uint64_t p1 = std::uint64_t{kMul1} * ctr[2];
            const auto hi0 = static_cast<std::uint32_t>(p0 >> 32);
            const auto lo0 = static_cast<std::uint32_t>(p0);
            const auto hi1 = static_cast<std::uint32_t>(p1 >> 32);
            const auto lo1 = static_cast<std::uint32_t>(p1);
            ctr = {hi1 ^ ctr[1] ^ key[0], lo1, hi0 ^ ctr[3] ^ key[1], lo0};
        }
        return ctr;
    }

   private:
    static constexpr std::uint32_t kMul0 = 0xD2511F53;
    static constexpr std::uint32_t kMul1 = 0xCD9E8D57;
    static constexpr std::uint32_t kWeyl0 = 0x9E3779B9;
    static constexpr std::uint32_t kWeyl1 = 0xBB67AE85;
};

/// Fixed draw slots within one experiment run. The order is part of the
/// replay contract: changing it changes every simulated record.
enum class Draw : std::uint32_t {
    Labels = 0,
    PAxisA = 1,
    POutcomeA = 2,
    PAxisB = 3,
    POutcomeB = 4,
    Bell = 5,
    RAxisC = 6,
    ROutcomeC = 7,
    RAxisD = 8,
    ROutcomeD = 9,
};

/// Random draws for one run, keyed by (master seed, run id, draw index).
///
/// Identical triples give identical draws regardless of which thread asks or
/// in which order, which is what lets the engine shard runs freely.
class RngStream {
   public:
    RngStream(std::uint64_t master_seed, std::uint64_t run_id) : seed_(master_seed), run_id_(run_id) {
    }

    std::uint64_t master_seed() const {
        return seed_;
    }
    std::uint64_t run_id() const {
        return run_id_;
    }

    Philox4x32::Counter block(std::uint32_t draw_index) const {
        const Philox4x32::Counter ctr{
            draw_index, static_cast<std::uint32_t>(run_id_), static_cast<std::uint32_t>(run_id_ >> 32), 0};
        const Philox4x32::Key key{static_cast<std::uint32_t>(seed_), static_cast<std::uint32_t>(seed_ >> 32)};
        return Philox4x32::generate(ctr, key);
    }
    Philox4x32::Counter block(Draw draw) const {
        return block(static_cast<std::uint32_t>(draw));
    }

    /// Uniform double in [0, 1) with 53 random bits. Lane 0 uses words 0-1
    /// of the block, lane 1 uses words 2-3.
    double uniform(std::uint32_t draw_index, int lane = 0) const {
        const auto b = block(draw_index);
        const std::uint64_t hi = b[2 * lane];
        const std::uint64_t lo = b[2 * lane + 1];
        const std::uint64_t bits = ((hi << 32) | lo) >> 11;
        return static_cast<double>(bits) * 0x1.0p-53;
    }
    double uniform(Draw draw, int lane = 0) const {
        return uniform(static_cast<std::uint32_t>(draw), lane);
    }

    /// Fair coin from the top bit of one word of the block.
    bool coin(Draw draw, int word) const {
        return (block(draw)[word] >> 31) != 0;
    }

   private:
    std::uint64_t seed_;
    std::uint64_t run_id_;
};

}  // namespace preent
