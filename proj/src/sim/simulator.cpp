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

#include "ringattn/sim/simulator.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <iomanip>
#include <set>
#include <sstream>
#include <unordered_map>
#include <unordered_set>

namespace ringattn {

int TermSet::size() const {
    int count = 0;
    for (auto w : words_) count += std::popcount(w);
    return count;
}

bool TermSet::is_full(int count) const {
    if (size() != count) return false;
    for (int t = 1; t <= count; ++t) {
        if (!contains(t)) return false;
    }
    return true;
}

std::vector<int> TermSet::missing(int count) const {
    std::vector<int> out;
    for (int t = 1; t <= count; ++t) {
        if (!contains(t)) out.push_back(t);
    }
    return out;
}

bool TermSet::operator==(const TermSet& o) const {
    const auto n = std::max(words_.size(), o.words_.size());
    for (std::size_t k = 0; k < n; ++k) {
        const auto a = k < words_.size() ? words_[k] : 0;
        const auto b = k < o.words_.size() ? o.words_[k] : 0;
        if (a != b) return false;
    }
    return true;
}

std::string_view to_string(ViolationKind kind) {
    switch (kind) {
        case ViolationKind::OperandMissing: return "OperandMissing";
        case ViolationKind::TransferSourceMissing: return "TransferSourceMissing";
        case ViolationKind::RenameUnjustified: return "RenameUnjustified";
        case ViolationKind::DuplicateTerm: return "DuplicateTerm";
        case ViolationKind::MissingTerm: return "MissingTerm";
        case ViolationKind::ForeignTerm: return "ForeignTerm";
        case ViolationKind::CapacityExceeded: return "CapacityExceeded";
        case ViolationKind::MaskedValueComputed: return "MaskedValueComputed";
    }
    return "?";
}

int ExecutionReport::mem_high_water_max() const {
    return register_high_water.empty() ? 0 : *std::max_element(register_high_water.begin(), register_high_water.end());
}

double relative_error(double a, double b) {
    const double diff = std::fabs(a - b);
    if (diff <= 1e-15) return 0.0;
    return diff / std::fabs(b);
}

namespace {

struct Version {
    TermSet terms;
    double value = 0.0;
};

enum class Access : std::uint8_t { Write, Update, Read };

struct Event {
    int pe;
    DataId id;
    int cycle;
    Access access;
};

class Machine {
public:
    Machine(const Schedule& s, const ExecOptions& opt) : s_(s), opt_(opt), state_(static_cast<std::size_t>(s.arch.m)) {}

    ExecutionReport run();

private:
    // Number of terms in the complete version of an accumulator.
    int full_size(const DataId& id) const {
        switch (id.kind) {
            case DataKind::RawW: return s_.spec.d;
            case DataKind::RowSum:
            case DataKind::Out: return s_.spec.scheme == Scheme::Masked ? id.i : s_.spec.n;
            default: return 0;
        }
    }
    bool complete(const DataId& id, const Version& v) const { return v.terms.is_full(full_size(id)); }

    Version* find(int pe, const DataId& id) {
        auto& st = state_[static_cast<std::size_t>(pe - 1)];
        auto it = st.find(id);
        return it == st.end() ? nullptr : &it->second;
    }

    void flag(int t, int pe, ViolationKind kind, std::string detail) {
        report_.violations.push_back({t, pe, kind, std::move(detail)});
    }

    void note(int pe, const DataId& id, int t, Access a) { events_.push_back({pe, id, t, a}); }

    double elem_value(const DataId& id) const { return opt_.inputs ? input_value(*opt_.inputs, id) : 0.0; }

    void compute(int t, int pe, const Compute& c);
    void mac(int t, int pe, const Compute& c);
    void eac(int t, int pe, const Compute& c);
    void div(int t, int pe, const Compute& c);
    // Adds term `term` to the accumulator `dst` at `pe`.
    void accumulate(int t, int pe, const DataId& dst, int term, double delta);

    void finish();
    void liveness();

    const Schedule& s_;
    const ExecOptions& opt_;
    std::vector<std::unordered_map<DataId, Version>> state_;
    std::vector<Event> events_;
    std::unordered_set<DataId> ever_complete_;
    ExecutionReport report_;
};

void Machine::accumulate(int t, int pe, const DataId& dst, int term, double delta) {
    if (Version* v = find(pe, dst)) {
        note(pe, dst, t, Access::Update);
        if (v->terms.contains(term)) {
            flag(t, pe, ViolationKind::DuplicateTerm,
                 "term " + std::to_string(term) + " added twice to " + to_string(dst));
            return;
        }
        v->terms.insert(term);
        v->value += delta;
        if (complete(dst, *v)) ever_complete_.insert(dst);
        return;
    }
    note(pe, dst, t, Access::Write);
    Version fresh;
    fresh.terms.insert(term);
    fresh.value = delta;
    if (complete(dst, fresh)) ever_complete_.insert(dst);
    state_[static_cast<std::size_t>(pe - 1)].emplace(dst, std::move(fresh));
}

void Machine::mac(int t, int pe, const Compute& c) {
    const auto roles = input_roles(s_.spec.scheme);
    const DataId& dst = c.dst;
    int term = 0;
    if (dst.kind == DataKind::RawW) {
        // term l of w'_ij is q_i[l] * k_j[l]
        const bool shaped = c.a.kind == DataKind::Elem && c.b.kind == DataKind::Elem && c.a.role == roles.query &&
                            c.b.role == roles.key && c.a.i == dst.i && c.b.i == dst.j && c.a.j == c.b.j;
        if (!shaped) {
            flag(t, pe, ViolationKind::ForeignTerm,
                 to_string(c.a) + " * " + to_string(c.b) + " is not a term of " + to_string(dst));
            return;
        }
        term = c.a.j;
        if (s_.spec.scheme == Scheme::Masked && dst.j > dst.i) {
            Violation v{t, pe, ViolationKind::MaskedValueComputed, to_string(dst) + " is masked"};
            (opt_.strict_mask ? report_.violations : report_.warnings).push_back(std::move(v));
        }
    } else {
        // term j of y_i[l] is w_ij * v_j[l]
        const bool shaped = dst.kind == DataKind::Out && c.a.kind == DataKind::NormW && c.b.kind == DataKind::Elem && c.b.role == roles.value &&
                            c.a.i == dst.i && c.b.i == c.a.j && c.b.j == dst.j;
        if (!shaped || !unmasked(s_.spec.scheme, dst.i, c.a.j)) {
            flag(t, pe, ViolationKind::ForeignTerm,
                 to_string(c.a) + " * " + to_string(c.b) + " is not a term of " + to_string(dst));
            return;
        }
        term = c.a.j;
    }

    const Version* a = find(pe, c.a);
    const Version* b = find(pe, c.b);
    if (!a || !b) {
        flag(t, pe, ViolationKind::OperandMissing,
             "mac operand " + to_string(!a ? c.a : c.b) + " not resident");
        return;
    }
    const double product = (c.a.kind == DataKind::Elem ? elem_value(c.a) : a->value) * elem_value(c.b);
    note(pe, c.a, t, Access::Read);
    note(pe, c.b, t, Access::Read);
    accumulate(t, pe, dst, term, product);
}

void Machine::eac(int t, int pe, const Compute& c) {
    const DataId& dst = c.dst;
    const DataId& src = c.a;
    if (dst.kind != DataKind::RowSum || src.kind != DataKind::RawW || src.i != dst.i || !unmasked(s_.spec.scheme, dst.i, src.j)) {
        flag(t, pe, ViolationKind::ForeignTerm, "exp(" + to_string(src) + ") is not a term of " + to_string(dst));
        return;
    }
    const Version* w = find(pe, src);
    if (!w) {
        flag(t, pe, ViolationKind::OperandMissing, "eac operand " + to_string(src) + " not resident");
        return;
    }
    if (!complete(src, *w)) {
        flag(t, pe, ViolationKind::MissingTerm, "eac reads incomplete " + to_string(src));
    }
    note(pe, src, t, Access::Read);
    const double e = std::exp(w->value);
    const DataId exp_id = DataId::exp(src.i, src.j);
    note(pe, exp_id, t, Access::Write);
    state_[static_cast<std::size_t>(pe - 1)][exp_id] = Version{{}, e};
    accumulate(t, pe, dst, src.j, e);
}

void Machine::div(int t, int pe, const Compute& c) {
    const DataId& dst = c.dst;
    if (dst.kind != DataKind::NormW || c.a != DataId::exp(dst.i, dst.j) || c.b != DataId::row_sum(dst.i)) {
        flag(t, pe, ViolationKind::ForeignTerm,
             to_string(c.a) + " / " + to_string(c.b) + " does not define " + to_string(dst));
        return;
    }
    const Version* num = find(pe, c.a);
    const Version* den = find(pe, c.b);
    if (!num || !den) {
        flag(t, pe, ViolationKind::OperandMissing, "div operand " + to_string(!num ? c.a : c.b) + " not resident");
        return;
    }
    if (!complete(c.b, *den)) {
        flag(t, pe, ViolationKind::MissingTerm, "div reads incomplete " + to_string(c.b));
    }
    note(pe, c.a, t, Access::Read);
    note(pe, c.b, t, Access::Read);
    const double value = num->value / den->value;
    note(pe, dst, t, Access::Write);
    state_[static_cast<std::size_t>(pe - 1)][dst] = Version{{}, value};
}

void Machine::compute(int t, int pe, const Compute& c) {
    switch (c.op) {
        case OpKind::Nop: return;
        case OpKind::Mac:
            ++report_.ops.mac;
            ++(c.dst.kind == DataKind::RawW ? report_.ops.mac_weights : report_.ops.mac_outputs);
            mac(t, pe, c);
            return;
        case OpKind::Eac: ++report_.ops.eac; eac(t, pe, c); return;
        case OpKind::Div: ++report_.ops.div; div(t, pe, c); return;
    }
}

ExecutionReport Machine::run() {
    const int m = s_.arch.m;
    for (int p = 1; p <= m; ++p) {
        for (const auto& id : s_.initial[static_cast<std::size_t>(p - 1)]) {
            state_[static_cast<std::size_t>(p - 1)][id] = Version{{}, elem_value(id)};
            note(p, id, 1, Access::Write);
        }
    }

    struct Delivery {
        int to;
        DataId id;
        Version version;
    };
    std::vector<Delivery> deliveries;
    int phase_computes[4] = {0, 0, 0, 0};

    for (int t = 1; t <= s_.num_cycles(); ++t) {
        const auto& cyc = s_.cycles[static_cast<std::size_t>(t - 1)];

        int phase = 0;
        for (const auto& act : cyc) {
            if (act.phase != PhaseTag::None && !act.compute.is_nop()) { phase = act.phase == PhaseTag::P1 ? 1 : act.phase == PhaseTag::P3 ? 3 : 2; break; }
        }
        if (phase == 0) {
            for (const auto& act : cyc) {
                if (act.phase != PhaseTag::None) { phase = act.phase == PhaseTag::P1 ? 1 : act.phase == PhaseTag::P3 ? 3 : 2; break; }
            }
        }
        ++report_.phase_cycles[phase];

        for (int p = 1; p <= m; ++p) {
            const auto& c = cyc[static_cast<std::size_t>(p - 1)].compute;
            if (!c.is_nop()) ++phase_computes[phase];
            compute(t, p, c);
        }

        deliveries.clear();
        for (int p = 1; p <= m; ++p) {
            const auto& tr = cyc[static_cast<std::size_t>(p - 1)].transfer;
            if (!tr) continue;
            ++report_.transfer_count;
            const Version* v = find(p, tr->datum);
            if (!v) {
                flag(t, p, ViolationKind::TransferSourceMissing, to_string(tr->datum) + " not resident at sender");
                continue;
            }
            note(p, tr->datum, t, Access::Read);
            if (tr->is_rename()) {
                ++report_.rename_count;
                const bool legal = s_.spec.scheme == Scheme::SharedQKV && tr->datum.kind == DataKind::RawW &&
                                   tr->store_as == DataId::raw(tr->datum.j, tr->datum.i);
                if (!legal) {
                    flag(t, p, ViolationKind::RenameUnjustified,
                         "cannot store " + to_string(tr->datum) + " as " + to_string(tr->store_as));
                    continue;
                }
            }
            deliveries.push_back({s_.arch.successor(p), tr->store_as, *v});
        }
        for (auto& d : deliveries) {
            if (d.id.is_accumulator() && complete(d.id, d.version)) ever_complete_.insert(d.id);
            note(d.to, d.id, t + 1, Access::Write);
            state_[static_cast<std::size_t>(d.to - 1)][d.id] = std::move(d.version);
        }
    }

    report_.cycles_executed = s_.num_cycles();
    auto util = [&](int phase) -> std::optional<double> {
        if (report_.phase_cycles[phase] == 0) return std::nullopt;
        return double(phase_computes[phase]) / (double(report_.phase_cycles[phase]) * double(m));
    };
    report_.utilization = {util(1), util(2), util(3)};

    finish();
    liveness();
    report_.provenance_ok = report_.violations.empty();
    return std::move(report_);
}

void Machine::finish() {
    const int n = s_.spec.n, d = s_.spec.d, T = s_.num_cycles();
    for (int i = 1; i <= n; ++i) {
        for (int j = 1; j <= n; ++j) {
            if (!unmasked(s_.spec.scheme, i, j)) continue;
            const auto id = DataId::raw(i, j);
            if (!ever_complete_.count(id)) flag(T, 0, ViolationKind::MissingTerm, to_string(id) + " never completed");
        }
    }
    for (int i = 1; i <= n; ++i) {
        const auto id = DataId::row_sum(i);
        if (!ever_complete_.count(id)) flag(T, 0, ViolationKind::MissingTerm, to_string(id) + " never completed");
    }

    const bool numeric = opt_.inputs.has_value();
    std::optional<OracleResult> golden;
    if (numeric) golden = reference_attention(s_.spec, *opt_.inputs);
    double worst = 0.0;

    for (int i = 1; i <= n; ++i) {
        for (int l = 1; l <= d; ++l) {
            const auto id = DataId::out(i, l);
            bool held = false;
            for (int p = 1; p <= s_.arch.m; ++p) {
                const Version* v = find(p, id);
                if (!v || !complete(id, *v)) continue;
                held = true;
                if (numeric) worst = std::max(worst, relative_error(v->value, golden->outputs(i, l)));
            }
            if (!held) flag(T, 0, ViolationKind::MissingTerm, to_string(id) + " not complete at end");
        }
    }
    if (numeric) report_.numeric_max_rel_err = worst;
}

void Machine::liveness() {
    const int m = s_.arch.m, T = s_.num_cycles();
    report_.register_high_water.assign(static_cast<std::size_t>(m), 0);
    if (T == 0) return;

    std::set<std::pair<int, std::uint64_t>> final_outputs;
    for (int p = 1; p <= m; ++p) {
        for (const auto& [id, v] : state_[static_cast<std::size_t>(p - 1)]) {
            if (id.kind == DataKind::Out && complete(id, v)) final_outputs.insert({p, id.key()});
        }
    }

    std::sort(events_.begin(), events_.end(), [](const Event& a, const Event& b) {
        if (a.pe != b.pe) return a.pe < b.pe;
        if (a.id.key() != b.id.key()) return a.id.key() < b.id.key();
        if (a.cycle != b.cycle) return a.cycle < b.cycle;
        return a.access < b.access;
    });

    // delta[p][t] for t in 1..T+1
    std::vector<std::vector<int>> delta(static_cast<std::size_t>(m), std::vector<int>(static_cast<std::size_t>(T) + 2, 0));
    auto add_interval = [&](int pe, int from, int to) {
        if (from > T) return;
        to = std::min(to, T);
        auto& row = delta[static_cast<std::size_t>(pe - 1)];
        ++row[static_cast<std::size_t>(from)];
        --row[static_cast<std::size_t>(to) + 1];
    };

    std::size_t k = 0;
    while (k < events_.size()) {
        std::size_t end = k;
        while (end < events_.size() && events_[end].pe == events_[k].pe && events_[end].id == events_[k].id) ++end;
        bool open = false;
        int start = 0, last = 0;
        for (std::size_t e = k; e < end; ++e) {
            const auto& ev = events_[e];
            switch (ev.access) {
                case Access::Write:
                    if (open) add_interval(ev.pe, start, std::max(start, last));
                    open = true;
                    start = last = ev.cycle;
                    break;
                case Access::Update:
                    if (!open) {
                        open = true;
                        start = ev.cycle;
                    }
                    last = ev.cycle;
                    break;
                case Access::Read:
                    if (open) last = std::max(last, ev.cycle);
                    break;
            }
        }
        if (open) {
            const bool keep = final_outputs.count({events_[k].pe, events_[k].id.key()}) > 0;
            add_interval(events_[k].pe, start, keep ? T : std::max(start, last));
        }
        k = end;
    }

    for (int p = 1; p <= m; ++p) {
        int live = 0, peak = 0;
        bool reported = false;
        const auto& row = delta[static_cast<std::size_t>(p - 1)];
        for (int t = 1; t <= T; ++t) {
            live += row[static_cast<std::size_t>(t)];
            peak = std::max(peak, live);
            if (s_.arch.register_capacity && live > *s_.arch.register_capacity && !reported) {
                flag(t, p, ViolationKind::CapacityExceeded,
                     std::to_string(live) + " live data exceed capacity " + std::to_string(*s_.arch.register_capacity));
                reported = true;
            }
        }
        report_.register_high_water[static_cast<std::size_t>(p - 1)] = peak;
    }
}

}  // namespace

ExecutionReport execute(const Schedule& s, const ExecOptions& options) {
    validate_schedule(s);
    Machine machine(s, options);
    return machine.run();
}

std::vector<Violation> check_validity(const Schedule& s, bool strict_mask) {
    ExecOptions opt;
    opt.strict_mask = strict_mask;
    return execute(s, opt).violations;
}

std::vector<int> memory_high_water(const Schedule& s) { return execute(s).register_high_water; }

nlohmann::json report_to_json(const ExecutionReport& r) {
    using nlohmann::json;
    auto opt = [](const std::optional<double>& v) { return v ? json(*v) : json(nullptr); };
    auto list = [](const std::vector<Violation>& vs) {
        json arr = json::array();
        for (const auto& v : vs) {
            arr.push_back({{"cycle", v.cycle}, {"pe", v.pe}, {"kind", std::string(to_string(v.kind))}, {"detail", v.detail}});
        }
        return arr;
    };
    json j;
    j["cycles_executed"] = r.cycles_executed;
    j["op_counts"] = {{"mac", r.ops.mac}, {"eac", r.ops.eac}, {"div", r.ops.div},
                      {"mac_phase1", r.ops.mac_weights}, {"mac_phase3", r.ops.mac_outputs}};
    j["transfer_count"] = r.transfer_count;
    j["rename_count"] = r.rename_count;
    j["utilization"] = {{"phase1", opt(r.utilization.p1)}, {"phase2", opt(r.utilization.p2)}, {"phase3", opt(r.utilization.p3)}};
    j["register_high_water"] = r.register_high_water;
    j["violations"] = list(r.violations);
    j["warnings"] = list(r.warnings);
    j["provenance_ok"] = r.provenance_ok;
    j["numeric_max_rel_err"] = opt(r.numeric_max_rel_err);
    return j;
}

std::string metrics_csv_header() {
    return "n,m,scheme,algo,cycles,macs,eacs,divs,transfers,util_p1,util_p2,util_p3,mem_hw_max";
}

std::string metrics_csv_row(const ProblemSpec& spec, const std::string& algo, const ExecutionReport& r) {
    std::ostringstream out;
    auto util = [&](const std::optional<double>& v) {
        if (v) out << std::fixed << std::setprecision(6) << *v;
    };
    out << spec.n << ',' << spec.m << ',' << to_string(spec.scheme) << ',' << algo << ',' << r.cycles_executed << ','
        << r.ops.mac << ',' << r.ops.eac << ',' << r.ops.div << ',' << r.transfer_count << ',';
    util(r.utilization.p1);
    out << ',';
    util(r.utilization.p2);
    out << ',';
    util(r.utilization.p3);
    out << ',' << r.mem_high_water_max();
    return out.str();
}

}  // namespace ringattn
