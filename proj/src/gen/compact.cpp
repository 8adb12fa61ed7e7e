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

#include "ringattn/gen/compact.hpp"

#include <algorithm>
#include <set>
#include <string>
#include <tuple>

#include "ringattn/sim/simulator.hpp"

namespace ringattn {

namespace {

int predecessor(const ArchConfig& arch, int pe) { return pe == 1 ? arch.m : pe - 1; }

bool writes(const Compute& c, const DataId& id) {
    if (c.is_nop()) return false;
    if (c.dst == id) return true;
    return c.op == OpKind::Eac && DataId::exp(c.a.i, c.a.j) == id;
}

bool touches(const Compute& c, const DataId& id) {
    if (c.is_nop()) return false;
    if (writes(c, id) || c.a == id) return true;
    return c.op != OpKind::Eac && c.b == id;
}

// Sender-side blocker at cycle c: the sender's copy of datum changes.
bool sender_blocked(const Schedule& s, int c, int pe, const DataId& datum) {
    if (writes(s.at(c, pe).compute, datum)) return true;
    if (c == 1) return false;
    const auto& in = s.at(c - 1, predecessor(s.arch, pe)).transfer;
    return in && in->store_as == datum;
}

// Receiver-side blocker at cycle c for the stored id.
bool receiver_blocked(const Schedule& s, int c, int sender, int t, const DataId& stored) {
    const int recv = s.arch.successor(sender);
    const auto& act = s.at(c, recv);
    if (touches(act.compute, stored)) return true;
    if (act.transfer && act.transfer->datum == stored) return true;
    const auto& out = s.at(c, sender).transfer;
    return c != t && out && out->store_as == stored;
}

// Latest cycle before t that can take the transfer of (t, pe), or 0.
int hoist_target(const Schedule& s, int t, int pe) {
    const Transfer tr = *s.at(t, pe).transfer;
    if (receiver_blocked(s, t, pe, t, tr.store_as)) return 0;
    for (int c = t - 1; c >= 1; --c) {
        if (sender_blocked(s, c + 1, pe, tr.datum)) return 0;
        if (receiver_blocked(s, c, pe, t, tr.store_as)) return 0;
        if (!s.at(c, pe).transfer) return c;
    }
    return 0;
}

bool compute_free(const Cycle& cyc) {
    return std::all_of(cyc.begin(), cyc.end(), [](const PEAction& a) { return a.compute.is_nop(); });
}

bool idle(const Cycle& cyc) {
    return std::all_of(cyc.begin(), cyc.end(), [](const PEAction& a) { return a.idle(); });
}

// Violations without their cycle, which shifts when cycles are removed.
std::multiset<std::tuple<int, int, std::string>> findings(const Schedule& s) {
    std::multiset<std::tuple<int, int, std::string>> out;
    for (const auto& v : check_validity(s)) out.emplace(static_cast<int>(v.kind), v.pe, v.detail);
    return out;
}

bool try_remove(Schedule& s, int t, const std::multiset<std::tuple<int, int, std::string>>& baseline) {
    Schedule trial = s;
    for (int pe = 1; pe <= s.arch.m; ++pe) {
        auto& act = trial.at(t, pe);
        if (!act.transfer) continue;
        const int to = hoist_target(trial, t, pe);
        if (to == 0) return false;
        auto& dst = trial.at(to, pe);
        dst.transfer = act.transfer;
        if (dst.phase == PhaseTag::None) dst.phase = act.phase;
        act = PEAction{};
    }
    trial.cycles.erase(trial.cycles.begin() + (t - 1));
    // Moves in one batch can interact; keep the batch only if the run is unchanged.
    if (findings(trial) != baseline) return false;
    s = std::move(trial);
    return true;
}

}  // namespace

Schedule compact(const Schedule& input) {
    Schedule s = input;
    std::erase_if(s.cycles, idle);
    const auto baseline = findings(s);
    bool changed = true;
    while (changed) {
        changed = false;
        for (int t = s.num_cycles(); t >= 2; --t) {
            if (t > s.num_cycles() || !compute_free(s.cycles[static_cast<std::size_t>(t - 1)])) continue;
            if (try_remove(s, t, baseline)) changed = true;
        }
    }
    return s;
}

}  // namespace ringattn
