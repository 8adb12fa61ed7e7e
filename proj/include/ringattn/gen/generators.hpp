/*
 * Copyright 2026 The ringattn Authors
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 * http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

/**
 * @file generators.hpp
 * @brief Closed-form ring schedules for the three attention variants.
 *
 * All three share the loop skeleton below, with l the PE index and floored
 * modulo:
 *
 *   B(l, i, j) = ((l - j) % m + (i - 1) m - 1) % n + 1
 *   C(l, i, j) = (l + ((j - 1) / m) m + (i - 1) m - 1) % n + 1
 *
 * Phase 1 walks w' partials around the ring while q and k stay put; phase 2
 * circulates the row sums; phase 3 circulates the normalized weights while the
 * outputs stay put. Inputs are never transferred.
 */

#pragma once

#include <utility>
#include <vector>

#include "json.hpp"
#include "ringattn/core/model.hpp"

namespace ringattn {

/// One group of weights computed together in a phase-1 outer iteration.
struct WeightGroup {
    int index = 0;
    /// (row, column) of every computed weight, by virtual column 1..n.
    /// Gated slots are absent.
    std::vector<std::pair<int, int>> elements;
    /// Ring hops that carry each computed weight to where its transpose is
    /// consumed; 0 when the group is not reused.
    int reuse_hops = 0;
    /// Even-n trade-off group, computed in both orientations.
    bool trade_off = false;
};

struct GroupPlan {
    int algo = 0;
    std::vector<WeightGroup> groups;
    /// Pure-transfer cycles spent on reuse hops beyond the first.
    int reuse_overhead = 0;
};

nlohmann::json plan_to_json(const GroupPlan& plan);

/// Diagonal groups of the shared scheme. Throws SpecError (SchemeMismatch).
GroupPlan plan_algo2(const ProblemSpec& spec);
/// Row-pair groups of the masked scheme. Throws SpecError (SchemeMismatch).
GroupPlan plan_algo3(const ProblemSpec& spec);

/// Baseline schedule, any scheme. Under the masked scheme every w' is still
/// computed, while phase 2 and 3 skip masked entries.
Schedule gen_algo1(const ProblemSpec& spec, const ArchConfig& arch);
/// Shared scheme: half of the off-diagonal weights plus reuse by renaming.
Schedule gen_algo2(const ProblemSpec& spec, const ArchConfig& arch);
/// Masked scheme: only the lower triangle is computed.
Schedule gen_algo3(const ProblemSpec& spec, const ArchConfig& arch);

/// Dispatches on algo (1, 2 or 3).
Schedule generate(int algo, const ProblemSpec& spec, const ArchConfig& arch);

}  // namespace ringattn
