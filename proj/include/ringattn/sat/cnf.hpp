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
 * @file cnf.hpp
 * @brief CNF encoding of the ring scheduling problem with deadline T.
 *
 * State is sampled before each cycle t = 1..T+1. An accumulator (w', s or y)
 * held by a PE is one of the subsets of its term set, the empty set standing
 * for "absent":
 *
 *   Acc(x, S, t, p)   PE p holds version S of x before cycle t
 *   Post(x, S, t, p)  PE p holds version S of x after the compute stage of t
 *
 * Exactly one version is true per (x, t, p). A compute adding term u turns
 * Acc(S) into Post(S + u); otherwise Post equals Acc. The version before
 * t + 1 is the predecessor's Post when it sent x (possibly under the
 * w'_ij -> w'_ji rename), else the PE's own Post. Exponentials and normalized
 * weights are plain presence bits that never disappear. Inputs are placed
 * freely before cycle 1 and never move.
 *
 * Computes are split into the four phases; a monotone barrier pair keeps
 * phase 1, phase 2 and phase 3 computes in order.
 */

#pragma once

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "json.hpp"
#include "ringattn/core/model.hpp"

namespace ringattn {

class SatError : public std::runtime_error {
public:
    enum class Kind { TooLarge, Indivisible, ScheduleOutOfBounds, ModelInconsistent, ParseError, SolverFailed };
    SatError(Kind kind, const std::string& what) : std::runtime_error(what), kind_(kind) {}
    Kind kind() const noexcept { return kind_; }

private:
    Kind kind_;
};

enum class VarKind : std::uint8_t { Elem, Present, Acc, Post, Trans, Compute, Barrier, Aux };

std::string_view to_string(VarKind kind);

struct VarDescriptor {
    VarKind kind = VarKind::Aux;
    /// Elem: the input. Present, Acc, Post, Trans: the datum. Compute: the destination.
    DataId datum{};
    /// Trans: id stored by the receiver; differs from datum for a rename.
    DataId store_as{};
    /// Acc, Post: bit u-1 set when term u is included.
    std::uint32_t termset = 0;
    OpKind op = OpKind::Nop;
    /// Compute: term added (l for w', j for s and y); 0 for Div.
    int term = 0;
    /// Cycle; for Present/Acc the state before it. Barrier: 12 or 23 in p.
    int t = 0;
    int p = 0;

    bool operator==(const VarDescriptor&) const = default;
};

class CnfInstance {
public:
    ProblemSpec spec{};
    ArchConfig arch{};
    int deadline = 0;

    int num_vars() const noexcept { return static_cast<int>(vars_.size()) - 1; }
    std::size_t num_clauses() const noexcept { return num_clauses_; }

    /// Descriptor of variable v (1-based).
    const VarDescriptor& var(int v) const { return vars_.at(static_cast<std::size_t>(v)); }
    /// Variable index of a descriptor, if present.
    std::optional<int> find(const VarDescriptor& d) const;

    int new_var(const VarDescriptor& d);
    void add_clause(std::initializer_list<int> lits) { add_clause(std::vector<int>(lits)); }
    /// Literals equal to kTrue satisfy the clause; kFalse literals are dropped.
    void add_clause(std::vector<int> lits);
    /// All clauses, each terminated by 0.
    const std::vector<int>& literals() const noexcept { return lits_; }
    /// Clause k as a list of literals.
    std::vector<int> clause(std::size_t k) const;

    static constexpr int kTrue = 0x3fffffff;
    static constexpr int kFalse = -kTrue;

private:
    std::vector<VarDescriptor> vars_{VarDescriptor{}};
    std::vector<int> lits_;
    std::size_t num_clauses_ = 0;
    mutable std::unordered_map<std::string, int> index_;  // built on first find
};

/// Largest supported n (accumulator term sets are enumerated).
inline constexpr int kMaxSatN = 6;

/// Throws SatError (TooLarge when n > kMaxSatN, Indivisible when m does not divide n).
CnfInstance encode(const ProblemSpec& spec, const ArchConfig& arch, int deadline);

/**
 * Copy of @p c with units fixing every compute, transfer and input-placement
 * variable to match @p s. Shorter schedules are padded with idle cycles. An
 * action the encoding cannot represent adds the empty clause.
 * Throws SatError (ScheduleOutOfBounds) if s is longer than the deadline or
 * its spec/arch differ.
 */
CnfInstance assume_schedule(const CnfInstance& c, const Schedule& s);

/// Model as a truth value per variable, index 0 unused.
using Model = std::vector<bool>;

/// Schedule read from a satisfying model. Throws SatError (ModelInconsistent).
Schedule decode(const CnfInstance& c, const Model& model);

/// DIMACS text.
std::string emit_cnf_text(const CnfInstance& c);

enum class Verdict { Sat, Unsat, Unknown };

struct SolverOutput {
    Verdict verdict = Verdict::Unknown;
    Model model;
};

/// Accepts "s SATISFIABLE" with "v" lines, "s UNSATISFIABLE", and the bare
/// "SAT" / "UNSAT" result-file form. Throws SatError (ParseError).
SolverOutput parse_solver_output(std::string_view text, int num_vars);

/// Sidecar with spec, arch, deadline and every named variable.
nlohmann::json varmap_to_json(const CnfInstance& c);
/// Rebuilds the variable map (no clauses) from a sidecar.
CnfInstance varmap_from_json(const nlohmann::json& j);

}  // namespace ringattn
