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
 * @file simulator.hpp
 * @brief Cycle-accurate executor and checker for ring schedules.
 *
 * Cycle t runs in two stages on every PE:
 *
 *  1. compute: operands, including the destination accumulator when it is
 *     already resident, must be resident at the start of t. The result is
 *     resident immediately.
 *  2. transfer: at most one datum goes to the successor PE. The sender keeps
 *     its copy; the receiver sees the datum from t + 1 on, replacing any
 *     copy it held.
 *
 * Every accumulator version carries the set of terms added to it. A run is
 * provenance-correct when each required w', s and y reached exactly its
 * defining term set and no check fired along the way.
 */

#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"
#include "ringattn/core/model.hpp"
#include "ringattn/oracle/reference.hpp"

namespace ringattn {

/// Set of 1-based term indices; grows as needed.
class TermSet {
public:
    bool contains(int term) const {
        const auto w = static_cast<std::size_t>(term) / 64;
        return w < words_.size() && ((words_[w] >> (term % 64)) & 1U);
    }
    void insert(int term) {
        const auto w = static_cast<std::size_t>(term) / 64;
        if (w >= words_.size()) words_.resize(w + 1, 0);
        words_[w] |= std::uint64_t{1} << (term % 64);
    }
    int size() const;
    /// True when the set is exactly {1..count}.
    bool is_full(int count) const;
    /// Members of {1..count} that are absent.
    std::vector<int> missing(int count) const;

    bool operator==(const TermSet& o) const;

private:
    std::vector<std::uint64_t> words_;
};

enum class ViolationKind : std::uint8_t {
    OperandMissing,
    TransferSourceMissing,
    RenameUnjustified,
    DuplicateTerm,
    MissingTerm,
    ForeignTerm,
    CapacityExceeded,
    MaskedValueComputed,
};

std::string_view to_string(ViolationKind kind);

/// cycle and pe are 1-based. End-of-run findings use the last cycle and pe 0.
struct Violation {
    int cycle = 0;
    int pe = 0;
    ViolationKind kind{};
    std::string detail;
};

struct OpCounts {
    std::uint64_t mac = 0;
    std::uint64_t eac = 0;
    std::uint64_t div = 0;
    std::uint64_t mac_weights = 0;  ///< macs into w' (phase 1)
    std::uint64_t mac_outputs = 0;  ///< macs into y (phase 3)

    std::uint64_t total() const noexcept { return mac + eac + div; }
};

struct PhaseUtilization {
    std::optional<double> p1, p2, p3;
};

struct ExecutionReport {
    int cycles_executed = 0;
    OpCounts ops;
    std::uint64_t transfer_count = 0;
    std::uint64_t rename_count = 0;
    PhaseUtilization utilization;
    /// Cycles per phase, keyed by the phase tag of the cycle's actions.
    int phase_cycles[4] = {0, 0, 0, 0};  // none, 1, 2, 3
    std::vector<int> register_high_water;  ///< per PE, liveness-based
    std::vector<Violation> violations;
    std::vector<Violation> warnings;  ///< MaskedValueComputed when not strict
    bool provenance_ok = false;
    std::optional<double> numeric_max_rel_err;

    int mem_high_water_max() const;
};

struct ExecOptions {
    /// Promotes MaskedValueComputed from a warning to a violation.
    bool strict_mask = false;
    /// Set for numeric mode: values are evaluated and compared to the oracle.
    std::optional<AttentionInputs> inputs;
};

/// Runs the schedule. Never throws for machine-level problems; they become
/// violations. Throws ScheduleError if validate_schedule fails.
ExecutionReport execute(const Schedule& s, const ExecOptions& options = {});

/// Same violations as execute(s, symbolic) without numeric work.
std::vector<Violation> check_validity(const Schedule& s, bool strict_mask = false);

/// Per-PE peak of simultaneously live data. A datum is live from its arrival
/// or production until its last use as an operand or transfer source; complete
/// outputs held at the end stay live to the end.
std::vector<int> memory_high_water(const Schedule& s);

/// |a - b| / |b|, with |a - b| <= 1e-15 counted as exact.
double relative_error(double a, double b);

nlohmann::json report_to_json(const ExecutionReport& r);

/// Header of the metrics CSV.
std::string metrics_csv_header();
/// One metrics row: n, m, scheme, algo, cycles, macs, eacs, divs, transfers,
/// util_p1, util_p2, util_p3, mem_hw_max.
std::string metrics_csv_row(const ProblemSpec& spec, const std::string& algo, const ExecutionReport& r);

}  // namespace ringattn
