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

#include "ringattn/core/model.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <set>
#include <sstream>

namespace ringattn {

std::string_view to_string(Scheme s) {
    switch (s) {
        case Scheme::Distinct: return "distinct";
        case Scheme::SharedQKV: return "shared";
        case Scheme::Masked: return "masked";
    }
    return "unknown";
}

std::optional<Scheme> parse_scheme(std::string_view text) {
    std::string lower(text);
    std::transform(lower.begin(), lower.end(), lower.begin(),
                   [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
    if (lower == "distinct") return Scheme::Distinct;
    if (lower == "shared" || lower == "sharedqkv" || lower == "shared_qkv") return Scheme::SharedQKV;
    if (lower == "masked") return Scheme::Masked;
    return std::nullopt;
}

ProblemSpec validate_spec(int n, int d, int m, Scheme scheme) {
    if (d != n) {
        throw SpecError(SpecError::Kind::DimensionMismatch,
                        "d must equal n (got n=" + std::to_string(n) + ", d=" + std::to_string(d) + ")");
    }
    if (n < 2) throw SpecError(SpecError::Kind::OutOfRange, "n must be at least 2");
    if (m < 1) throw SpecError(SpecError::Kind::OutOfRange, "m must be at least 1");
    if (n % m != 0) {
        throw SpecError(SpecError::Kind::Indivisible,
                        "m must divide n (got n=" + std::to_string(n) + ", m=" + std::to_string(m) + ")");
    }
    return ProblemSpec{n, d, m, scheme};
}

ProblemSpec validate_spec(int n, int d, int m, std::string_view scheme) {
    auto parsed = parse_scheme(scheme);
    if (!parsed) throw SpecError(SpecError::Kind::BadScheme, "unknown scheme '" + std::string(scheme) + "'");
    return validate_spec(n, d, m, *parsed);
}

ArchConfig make_arch(const ProblemSpec& spec, std::optional<int> register_capacity) {
    if (register_capacity && *register_capacity < 1) {
        throw SpecError(SpecError::Kind::OutOfRange, "register capacity must be at least 1");
    }
    return ArchConfig{spec.m, register_capacity};
}

// ---------------------------------------------------------------------------

namespace {

char role_letter(Role r) {
    switch (r) {
        case Role::Q: return 'q';
        case Role::K: return 'k';
        case Role::V: return 'v';
        case Role::X: return 'x';
    }
    return '?';
}

}  // namespace

std::string to_string(const DataId& id) {
    auto idx = [](int v) { return "[" + std::to_string(v) + "]"; };
    switch (id.kind) {
        case DataKind::Elem: return std::string(1, role_letter(id.role)) + idx(id.i) + idx(id.j);
        case DataKind::RawW: return "w'" + idx(id.i) + idx(id.j);
        case DataKind::ExpW: return "e" + idx(id.i) + idx(id.j);
        case DataKind::RowSum: return "s" + idx(id.i);
        case DataKind::NormW: return "w" + idx(id.i) + idx(id.j);
        case DataKind::Out: return "y" + idx(id.i) + idx(id.j);
    }
    return "?";
}

DataId parse_data_id(std::string_view token) {
    const std::string tok(token);
    auto fail = [&](const std::string& why) -> DataIdError {
        return DataIdError("bad data id '" + tok + "': " + why);
    };

    std::size_t pos = 0;
    std::string head;
    while (pos < token.size() && token[pos] != '[') head.push_back(token[pos++]);

    std::vector<int> indices;
    while (pos < token.size()) {
        if (token[pos] != '[') throw fail("expected '['");
        auto close = token.find(']', pos);
        if (close == std::string_view::npos) throw fail("missing ']'");
        int value = 0;
        auto digits = token.substr(pos + 1, close - pos - 1);
        auto [ptr, ec] = std::from_chars(digits.data(), digits.data() + digits.size(), value);
        if (ec != std::errc() || ptr != digits.data() + digits.size() || digits.empty()) {
            throw fail("index is not an integer");
        }
        if (value < 1) throw fail("indices are 1-based");
        indices.push_back(value);
        pos = close + 1;
    }

    auto want = [&](std::size_t count) {
        if (indices.size() != count) throw fail("expected " + std::to_string(count) + " indices");
    };
    if (head == "q" || head == "k" || head == "v" || head == "x") {
        want(2);
        Role r = head == "q" ? Role::Q : head == "k" ? Role::K : head == "v" ? Role::V : Role::X;
        return DataId::elem(r, indices[0], indices[1]);
    }
    if (head == "w'") { want(2); return DataId::raw(indices[0], indices[1]); }
    if (head == "e") { want(2); return DataId::exp(indices[0], indices[1]); }
    if (head == "s") { want(1); return DataId::row_sum(indices[0]); }
    if (head == "w") { want(2); return DataId::norm(indices[0], indices[1]); }
    if (head == "y") { want(2); return DataId::out(indices[0], indices[1]); }
    throw fail("unknown kind '" + head + "'");
}

InputRoles input_roles(Scheme scheme) {
    if (scheme == Scheme::SharedQKV) return {Role::X, Role::X, Role::X};
    return {Role::Q, Role::K, Role::V};
}

std::string check_data_id(const DataId& id, const ProblemSpec& spec) {
    auto in = [](int v, int hi) { return v >= 1 && v <= hi; };
    switch (id.kind) {
        case DataKind::Elem:
            if (spec.scheme == Scheme::SharedQKV && id.role != Role::X) return "shared scheme uses role x only";
            if (spec.scheme != Scheme::SharedQKV && id.role == Role::X) return "role x requires the shared scheme";
            if (!in(id.i, spec.n) || !in(id.j, spec.d)) return "index out of range";
            return {};
        case DataKind::RowSum:
            if (!in(id.i, spec.n) || id.j != 0) return "index out of range";
            return {};
        case DataKind::Out:
            if (!in(id.i, spec.n) || !in(id.j, spec.d)) return "index out of range";
            return {};
        case DataKind::RawW:
            if (!in(id.i, spec.n) || !in(id.j, spec.n)) return "index out of range";
            return {};
        case DataKind::ExpW:
        case DataKind::NormW:
            if (!in(id.i, spec.n) || !in(id.j, spec.n)) return "index out of range";
            if (spec.scheme == Scheme::Masked && id.j > id.i) return "masked position";
            return {};
    }
    return "unknown kind";
}

std::string_view to_string(OpKind op) {
    switch (op) {
        case OpKind::Nop: return "nop";
        case OpKind::Mac: return "mac";
        case OpKind::Eac: return "eac";
        case OpKind::Div: return "div";
    }
    return "?";
}

std::string_view to_string(PhaseTag tag) {
    switch (tag) {
        case PhaseTag::None: return "";
        case PhaseTag::P1: return "1";
        case PhaseTag::P2a: return "2a";
        case PhaseTag::P2b: return "2b";
        case PhaseTag::P3: return "3";
    }
    return "";
}

std::optional<PhaseTag> parse_phase_tag(std::string_view text) {
    if (text.empty()) return PhaseTag::None;
    if (text == "1") return PhaseTag::P1;
    if (text == "2a") return PhaseTag::P2a;
    if (text == "2b") return PhaseTag::P2b;
    if (text == "3") return PhaseTag::P3;
    return std::nullopt;
}

Schedule empty_schedule(const ProblemSpec& spec, const ArchConfig& arch) {
    Schedule s;
    s.spec = spec;
    s.arch = arch;
    s.initial.assign(static_cast<std::size_t>(arch.m), {});
    return s;
}

int append_cycle(Schedule& s) {
    s.cycles.emplace_back(static_cast<std::size_t>(s.arch.m));
    return s.num_cycles();
}

void validate_schedule(const Schedule& s) {
    auto where = [](int t, int p) {
        return "cycle " + std::to_string(t) + ", PE " + std::to_string(p) + ": ";
    };
    if (s.arch.m != s.spec.m) throw ScheduleError("arch.m differs from spec.m");
    if (s.initial.size() != static_cast<std::size_t>(s.arch.m)) {
        throw ScheduleError("initial placement must list exactly m PEs");
    }
    for (std::size_t p = 0; p < s.initial.size(); ++p) {
        for (const auto& id : s.initial[p]) {
            if (id.kind != DataKind::Elem) {
                throw ScheduleError("initial placement of PE " + std::to_string(p + 1) +
                                    " holds intermediate " + to_string(id));
            }
            if (auto why = check_data_id(id, s.spec); !why.empty()) {
                throw ScheduleError("initial " + to_string(id) + ": " + why);
            }
        }
    }
    auto check = [&](const DataId& id, int t, int p) {
        if (auto why = check_data_id(id, s.spec); !why.empty()) {
            throw ScheduleError(where(t, p) + to_string(id) + ": " + why);
        }
    };
    for (int t = 1; t <= s.num_cycles(); ++t) {
        const auto& cyc = s.cycles[static_cast<std::size_t>(t - 1)];
        if (cyc.size() != static_cast<std::size_t>(s.arch.m)) {
            throw ScheduleError("cycle " + std::to_string(t) + " has " + std::to_string(cyc.size()) +
                                " actions, expected " + std::to_string(s.arch.m));
        }
        for (int p = 1; p <= s.arch.m; ++p) {
            const auto& act = cyc[static_cast<std::size_t>(p - 1)];
            const auto& c = act.compute;
            switch (c.op) {
                case OpKind::Nop: break;
                case OpKind::Mac:
                    if (c.dst.kind != DataKind::RawW && c.dst.kind != DataKind::Out) {
                        throw ScheduleError(where(t, p) + "mac destination must be w' or y");
                    }
                    check(c.dst, t, p), check(c.a, t, p), check(c.b, t, p);
                    break;
                case OpKind::Eac:
                    if (c.dst.kind != DataKind::RowSum || c.a.kind != DataKind::RawW) {
                        throw ScheduleError(where(t, p) + "eac must accumulate a w' into an s");
                    }
                    check(c.dst, t, p), check(c.a, t, p);
                    break;
                case OpKind::Div:
                    if (c.dst.kind != DataKind::NormW || c.a.kind != DataKind::ExpW ||
                        c.b.kind != DataKind::RowSum) {
                        throw ScheduleError(where(t, p) + "div must compute w from e and s");
                    }
                    check(c.dst, t, p), check(c.a, t, p), check(c.b, t, p);
                    break;
            }
            if (act.transfer) {
                check(act.transfer->datum, t, p);
                check(act.transfer->store_as, t, p);
            }
        }
    }
}

void place_consumed_inputs(Schedule& s) {
    std::vector<std::set<DataId>> used(static_cast<std::size_t>(s.arch.m));
    for (const auto& cyc : s.cycles) {
        for (std::size_t p = 0; p < cyc.size(); ++p) {
            const auto& c = cyc[p].compute;
            if (c.op != OpKind::Mac) continue;
            if (c.a.kind == DataKind::Elem) used[p].insert(c.a);
            if (c.b.kind == DataKind::Elem) used[p].insert(c.b);
        }
    }
    s.initial.assign(used.size(), {});
    for (std::size_t p = 0; p < used.size(); ++p) s.initial[p].assign(used[p].begin(), used[p].end());
}

}  // namespace ringattn
