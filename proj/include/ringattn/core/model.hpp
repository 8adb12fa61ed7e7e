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
 * @file model.hpp
 * @brief Problem instance, ring machine, data identities and schedules.
 *
 * Everything here is 1-based: vectors are numbered 1..n, elements 1..d and
 * PEs 1..m. PE p sends only to PE (p mod m) + 1.
 */

#pragma once

#include <compare>
#include <cstdint>
#include <functional>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace ringattn {

enum class Scheme : std::uint8_t { Distinct, SharedQKV, Masked };

std::string_view to_string(Scheme s);
/// Accepts "distinct", "shared", "sharedqkv", "masked" (case-insensitive).
std::optional<Scheme> parse_scheme(std::string_view text);

class SpecError : public std::invalid_argument {
public:
    enum class Kind { DimensionMismatch, Indivisible, BadScheme, OutOfRange, SchemeMismatch };

    SpecError(Kind kind, const std::string& what) : std::invalid_argument(what), kind_(kind) {}
    Kind kind() const noexcept { return kind_; }

private:
    Kind kind_;
};

struct ProblemSpec {
    int n = 0;  ///< number of input vectors
    int d = 0;  ///< vector dimension, always equal to n
    int m = 0;  ///< number of PEs
    Scheme scheme = Scheme::Distinct;

    bool operator==(const ProblemSpec&) const = default;
};

/// Builds a spec after checking d == n, n >= 2, m >= 1 and m | n.
ProblemSpec validate_spec(int n, int d, int m, Scheme scheme);
ProblemSpec validate_spec(int n, int d, int m, std::string_view scheme);

struct ArchConfig {
    int m = 0;
    std::optional<int> register_capacity;

    int successor(int pe) const noexcept { return pe % m + 1; }
    bool operator==(const ArchConfig&) const = default;
};

ArchConfig make_arch(const ProblemSpec& spec, std::optional<int> register_capacity = std::nullopt);

// ---------------------------------------------------------------------------
// Data identities
// ---------------------------------------------------------------------------

enum class Role : std::uint8_t { Q, K, V, X };
enum class DataKind : std::uint8_t { Elem, RawW, ExpW, RowSum, NormW, Out };

/**
 * Symbolic identity of a value on the machine.
 *
 *   Elem(role, i, l)  q/k/v/x element l of vector i
 *   RawW(i, j)        w'_ij, dot product of q_i and k_j
 *   ExpW(i, j)        exp(w'_ij), kept after an EAC so the division can use it
 *   RowSum(i)         softmax denominator of row i          (j is 0)
 *   NormW(i, j)       w_ij = exp(w'_ij) / RowSum(i)
 *   Out(i, l)         y_i[l]
 */
struct DataId {
    DataKind kind = DataKind::Elem;
    Role role = Role::Q;  ///< meaningful for Elem only
    int i = 0;
    int j = 0;

    static DataId elem(Role r, int i, int l) { return {DataKind::Elem, r, i, l}; }
    static DataId raw(int i, int j) { return {DataKind::RawW, Role::Q, i, j}; }
    static DataId exp(int i, int j) { return {DataKind::ExpW, Role::Q, i, j}; }
    static DataId row_sum(int i) { return {DataKind::RowSum, Role::Q, i, 0}; }
    static DataId norm(int i, int j) { return {DataKind::NormW, Role::Q, i, j}; }
    static DataId out(int i, int l) { return {DataKind::Out, Role::Q, i, l}; }

    bool is_accumulator() const noexcept {
        return kind == DataKind::RawW || kind == DataKind::RowSum || kind == DataKind::Out;
    }

    /// Dense key, unique per id; used for hashing and ordering.
    std::uint64_t key() const noexcept {
        return (std::uint64_t(kind) << 56) | (std::uint64_t(role) << 48) |
               (std::uint64_t(std::uint32_t(i) & 0xFFFFFF) << 24) | (std::uint32_t(j) & 0xFFFFFF);
    }

    friend bool operator==(const DataId& a, const DataId& b) noexcept { return a.key() == b.key(); }
    friend std::strong_ordering operator<=>(const DataId& a, const DataId& b) noexcept {
        return a.key() <=> b.key();
    }
};

/// Text form: q[i][l] k[i][l] v[i][l] x[i][l] w'[i][j] e[i][j] s[i] w[i][j] y[i][l].
std::string to_string(const DataId& id);

class DataIdError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

/// Parses the text form. Indices must be >= 1; range checks against a spec
/// are done by check_data_id.
DataId parse_data_id(std::string_view token);

/// Empty string if the id is legal for the spec, otherwise the reason.
std::string check_data_id(const DataId& id, const ProblemSpec& spec);

/// Roles used by the scheme for the query, key and value inputs.
struct InputRoles {
    Role query, key, value;
};
InputRoles input_roles(Scheme scheme);

// ---------------------------------------------------------------------------
// Actions and schedules
// ---------------------------------------------------------------------------

enum class OpKind : std::uint8_t { Nop, Mac, Eac, Div };

std::string_view to_string(OpKind op);

/**
 * One arithmetic operation.
 *
 *   Mac: dst (RawW | Out) += a * b
 *   Eac: dst (RowSum) += exp(a), with a a RawW; also stores ExpW(a.i, a.j)
 *   Div: dst (NormW) = a / b, with a the ExpW and b the RowSum
 */
struct Compute {
    OpKind op = OpKind::Nop;
    DataId dst{};
    DataId a{};
    DataId b{};

    static Compute mac(DataId dst, DataId a, DataId b) { return {OpKind::Mac, dst, a, b}; }
    static Compute eac(DataId dst, DataId src) { return {OpKind::Eac, dst, src, {}}; }
    static Compute div(DataId dst, DataId num, DataId den) { return {OpKind::Div, dst, num, den}; }

    bool is_nop() const noexcept { return op == OpKind::Nop; }
    bool operator==(const Compute& o) const noexcept {
        if (op != o.op) return false;
        switch (op) {
            case OpKind::Nop: return true;
            case OpKind::Eac: return dst == o.dst && a == o.a;
            default: return dst == o.dst && a == o.a && b == o.b;
        }
    }
};

struct Transfer {
    DataId datum{};
    DataId store_as{};  ///< differs from datum only for the w'_ij -> w'_ji rename

    bool is_rename() const noexcept { return !(datum == store_as); }
    bool operator==(const Transfer&) const = default;
};

enum class PhaseTag : std::uint8_t { None, P1, P2a, P2b, P3 };

std::string_view to_string(PhaseTag tag);
std::optional<PhaseTag> parse_phase_tag(std::string_view text);

struct PEAction {
    Compute compute{};
    std::optional<Transfer> transfer;
    PhaseTag phase = PhaseTag::None;

    bool idle() const noexcept { return compute.is_nop() && !transfer; }
    bool operator==(const PEAction&) const = default;
};

using Cycle = std::vector<PEAction>;  ///< exactly m entries, index p-1 for PE p

struct Schedule {
    ProblemSpec spec{};
    ArchConfig arch{};
    std::vector<std::vector<DataId>> initial;  ///< m entries, sorted, Elem only
    std::vector<Cycle> cycles;

    int num_cycles() const noexcept { return static_cast<int>(cycles.size()); }
    PEAction& at(int cycle, int pe) { return cycles.at(cycle - 1).at(pe - 1); }
    const PEAction& at(int cycle, int pe) const { return cycles.at(cycle - 1).at(pe - 1); }

    bool operator==(const Schedule&) const = default;
};

/// Empty schedule with m idle PEs and no cycles.
Schedule empty_schedule(const ProblemSpec& spec, const ArchConfig& arch);

/// Appends one all-idle cycle and returns its index (1-based).
int append_cycle(Schedule& s);

class ScheduleError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

/// Structural checks: cycle widths, Elem-only initial placement and every id
/// in range for the spec. Throws ScheduleError. Machine-level legality (operand
/// residency, renames, term sets) is the simulator's job.
void validate_schedule(const Schedule& s);

/// Derives the initial placement: every Elem a PE consumes is placed there.
void place_consumed_inputs(Schedule& s);

}  // namespace ringattn

template <>
struct std::hash<ringattn::DataId> {
    std::size_t operator()(const ringattn::DataId& id) const noexcept {
        std::uint64_t k = id.key();
        k ^= k >> 33;
        k *= 0xff51afd7ed558ccdULL;
        k ^= k >> 33;
        return static_cast<std::size_t>(k);
    }
};
