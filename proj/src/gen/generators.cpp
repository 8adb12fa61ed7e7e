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

#include "ringattn/gen/generators.hpp"

#include <optional>
#include <unordered_set>

#include "ringattn/oracle/reference.hpp"

namespace ringattn {

namespace {

int fmod(int a, int b) { return ((a % b) + b) % b; }

// Loop-skeleton index formulas, see the header.
int idx_b(int l, int i, int j, int n, int m) { return fmod(fmod(l - j, m) + (i - 1) * m - 1, n) + 1; }
int idx_c(int l, int i, int j, int n, int m) { return fmod(l + ((j - 1) / m) * m + (i - 1) * m - 1, n) + 1; }
// Row handled by PE l in phase 2, and the rotating column of phase 3.
int idx_row(int l, int i, int j, int m) { return fmod(l - j, m) + (i - 1) * m + 1; }

void check_arch(const ProblemSpec& spec, const ArchConfig& arch) {
    if (spec.n % spec.m != 0) throw SpecError(SpecError::Kind::Indivisible, "m must divide n");
    if (arch.m != spec.m) {
        throw SpecError(SpecError::Kind::DimensionMismatch,
                        "arch has " + std::to_string(arch.m) + " PEs, spec " + std::to_string(spec.m));
    }
}

void require_scheme(const ProblemSpec& spec, Scheme scheme) {
    if (spec.scheme != scheme) {
        throw SpecError(SpecError::Kind::SchemeMismatch,
                        "needs the " + std::string(to_string(scheme)) + " scheme, got " +
                            std::string(to_string(spec.scheme)));
    }
}

// Appends cycles while tracking which ids each PE holds, so that transfers
// can be conditioned on residency.
class Builder {
public:
    Builder(const ProblemSpec& spec, const ArchConfig& arch)
        : s_(empty_schedule(spec, arch)), held_(static_cast<std::size_t>(arch.m)) {}

    int m() const { return s_.arch.m; }

    void begin(PhaseTag tag) {
        append_cycle(s_);
        for (auto& act : s_.cycles.back()) act.phase = tag;
    }

    void compute(int pe, const Compute& c) {
        auto& act = s_.cycles.back()[static_cast<std::size_t>(pe - 1)];
        act.compute = c;
        auto& held = held_[static_cast<std::size_t>(pe - 1)];
        held.insert(c.dst);
        if (c.op == OpKind::Eac) held.insert(DataId::exp(c.a.i, c.a.j));
    }

    bool holds(int pe, const DataId& id) const { return held_[static_cast<std::size_t>(pe - 1)].count(id) > 0; }

    void send(int pe, const DataId& datum, const DataId& store_as) {
        auto& act = s_.cycles.back()[static_cast<std::size_t>(pe - 1)];
        act.transfer = Transfer{datum, store_as};
        pending_.emplace_back(s_.arch.successor(pe), store_as);
    }
    void send(int pe, const DataId& datum) { send(pe, datum, datum); }

    void end() {
        for (const auto& [to, id] : pending_) held_[static_cast<std::size_t>(to - 1)].insert(id);
        pending_.clear();
    }

    Schedule finish() {
        place_consumed_inputs(s_);
        return std::move(s_);
    }

private:
    Schedule s_;
    std::vector<std::unordered_set<DataId>> held_;
    std::vector<std::pair<int, DataId>> pending_;
};

// Phases 2a and 2b. col(A, b) maps PE-resident column b of row A to the real
// column, or nullopt when the slot is gated.
template <typename ColFn>
void emit_phase2(Builder& bld, const ProblemSpec& spec, ColFn col) {
    const int n = spec.n, m = spec.m;
    for (int step = 0; step < 2; ++step) {
        for (int i = 1; i <= n / m; ++i) {
            for (int j = 1; j <= n; ++j) {
                bld.begin(step == 0 ? PhaseTag::P2a : PhaseTag::P2b);
                for (int l = 1; l <= m; ++l) {
                    const int a = idx_row(l, i, j, m);
                    const auto b = col(a, idx_c(l, i, j, n, m));
                    if (b && step == 0) bld.compute(l, Compute::eac(DataId::row_sum(a), DataId::raw(a, *b)));
                    if (b && step == 1) {
                        bld.compute(l, Compute::div(DataId::norm(a, *b), DataId::exp(a, *b), DataId::row_sum(a)));
                    }
                    if ((step == 0 || j != n) && bld.holds(l, DataId::row_sum(a))) bld.send(l, DataId::row_sum(a));
                }
                bld.end();
            }
        }
    }
}

// Phase 1 or 3 over groups. cell(g, b) gives the (row, column) of virtual
// column b in group g, or nullopt when gated.
template <typename CellFn>
void emit_sweep(Builder& bld, const ProblemSpec& spec, int groups, bool outputs, CellFn cell) {
    const int n = spec.n, m = spec.m;
    const auto roles = input_roles(spec.scheme);
    for (int g = 0; g < groups; ++g) {
        for (int i = 1; i <= n / m; ++i) {
            for (int j = 1; j <= n; ++j) {
                bld.begin(outputs ? PhaseTag::P3 : PhaseTag::P1);
                for (int l = 1; l <= m; ++l) {
                    const int b = outputs ? idx_row(l, i, j, m) : idx_b(l, i, j, n, m);
                    const auto rc = cell(g, b);
                    if (!rc) continue;
                    const auto [a, col] = *rc;
                    const int c = idx_c(l, i, j, n, m);
                    DataId moving;
                    if (outputs) {
                        moving = DataId::norm(a, col);
                        bld.compute(l, Compute::mac(DataId::out(a, c), moving, DataId::elem(roles.value, col, c)));
                    } else {
                        moving = DataId::raw(a, col);
                        bld.compute(l, Compute::mac(moving, DataId::elem(roles.query, a, c),
                                                    DataId::elem(roles.key, col, c)));
                    }
                    if (j != n) bld.send(l, moving);
                }
                bld.end();
            }
        }
    }
}

int algo2_hops(int h, int m) {
    const int hm = h % m;
    if (hm == 0) return m;
    return 2 * hm <= m ? hm : m - hm;
}

// Row of virtual column b in diagonal group h of the shared scheme.
int algo2_row(int h, int b, int n, int m) {
    return 2 * (h % m) <= m ? fmod(b + h - 1, n) + 1 : fmod(b - h - 1, n) + 1;
}

// Number of regular groups: h = 0 .. h'.
int regular_groups(int n) { return n % 2 ? (n + 1) / 2 : n / 2; }

std::optional<std::pair<int, int>> algo3_cell(int g, int b, int n) {
    if (n % 2 == 0 && g == n / 2) {
        if (b <= n / 2) return std::pair{n / 2, b};
        return std::nullopt;
    }
    if (b <= n - g) return std::pair{n - g, b};
    return std::pair{g, b - (n - g)};
}

}  // namespace

nlohmann::json plan_to_json(const GroupPlan& plan) {
    using nlohmann::json;
    json groups = json::array();
    for (const auto& g : plan.groups) {
        json elems = json::array();
        for (const auto& [r, c] : g.elements) elems.push_back({r, c});
        groups.push_back({{"index", g.index}, {"elements", elems}, {"reuse_hops", g.reuse_hops},
                          {"trade_off", g.trade_off}});
    }
    return {{"algo", plan.algo}, {"groups", groups}, {"reuse_overhead", plan.reuse_overhead}};
}

GroupPlan plan_algo2(const ProblemSpec& spec) {
    require_scheme(spec, Scheme::SharedQKV);
    const int n = spec.n, m = spec.m;
    GroupPlan plan;
    plan.algo = 2;
    for (int h = 0; h < regular_groups(n); ++h) {
        WeightGroup g;
        g.index = h;
        for (int b = 1; b <= n; ++b) g.elements.emplace_back(algo2_row(h, b, n, m), b);
        g.reuse_hops = h == 0 ? 0 : algo2_hops(h, m);
        if (g.reuse_hops > 1) plan.reuse_overhead += (n / m) * (g.reuse_hops - 1);
        plan.groups.push_back(std::move(g));
    }
    if (n % 2 == 0) {
        WeightGroup g;
        g.index = n / 2;
        g.trade_off = true;
        for (int b = 1; b <= n; ++b) g.elements.emplace_back(fmod(b + n / 2 - 1, n) + 1, b);
        plan.groups.push_back(std::move(g));
    }
    return plan;
}

GroupPlan plan_algo3(const ProblemSpec& spec) {
    require_scheme(spec, Scheme::Masked);
    const int n = spec.n;
    GroupPlan plan;
    plan.algo = 3;
    const int groups = n % 2 ? (n + 1) / 2 : n / 2 + 1;
    for (int g = 0; g < groups; ++g) {
        WeightGroup wg;
        wg.index = g;
        for (int b = 1; b <= n; ++b) {
            if (auto rc = algo3_cell(g, b, n)) wg.elements.push_back(*rc);
        }
        plan.groups.push_back(std::move(wg));
    }
    return plan;
}

Schedule gen_algo1(const ProblemSpec& spec, const ArchConfig& arch) {
    check_arch(spec, arch);
    const int n = spec.n;
    const Scheme scheme = spec.scheme;
    Builder bld(spec, arch);
    emit_sweep(bld, spec, n, false, [](int h, int b) { return std::optional<std::pair<int, int>>{{h + 1, b}}; });
    emit_phase2(bld, spec, [scheme](int a, int b) -> std::optional<int> {
        if (!unmasked(scheme, a, b)) return std::nullopt;
        return b;
    });
    emit_sweep(bld, spec, n, true, [scheme](int h, int b) -> std::optional<std::pair<int, int>> {
        if (!unmasked(scheme, h + 1, b)) return std::nullopt;
        return std::pair{h + 1, b};
    });
    return bld.finish();
}

Schedule gen_algo2(const ProblemSpec& spec, const ArchConfig& arch) {
    check_arch(spec, arch);
    const GroupPlan plan = plan_algo2(spec);
    const int n = spec.n, m = spec.m;
    Builder bld(spec, arch);

    for (const auto& group : plan.groups) {
        for (int i = 1; i <= n / m; ++i) {
            // final[l - 1]: weight completed at PE l in the last cycle
            std::vector<std::pair<int, int>> final(static_cast<std::size_t>(m));
            for (int j = 1; j <= n; ++j) {
                bld.begin(PhaseTag::P1);
                for (int l = 1; l <= m; ++l) {
                    const int b = idx_b(l, i, j, n, m);
                    const int a = group.elements[static_cast<std::size_t>(b - 1)].first;
                    const int c = idx_c(l, i, j, n, m);
                    const DataId w = DataId::raw(a, b);
                    bld.compute(l, Compute::mac(w, DataId::elem(Role::X, a, c), DataId::elem(Role::X, b, c)));
                    if (j != n) {
                        bld.send(l, w);
                    } else if (group.reuse_hops > 0) {
                        bld.send(l, w, group.reuse_hops == 1 ? DataId::raw(b, a) : w);
                    }
                    if (j == n) final[static_cast<std::size_t>(l - 1)] = {a, b};
                }
                bld.end();
            }
            for (int hop = 2; hop <= group.reuse_hops; ++hop) {
                bld.begin(PhaseTag::P1);
                for (int l = 1; l <= m; ++l) {
                    const int origin = fmod(l - hop + 1 - 1, m) + 1;
                    const auto [a, b] = final[static_cast<std::size_t>(origin - 1)];
                    bld.send(l, DataId::raw(a, b), hop == group.reuse_hops ? DataId::raw(b, a) : DataId::raw(a, b));
                }
                bld.end();
            }
        }
    }
    emit_phase2(bld, spec, [](int, int b) { return std::optional<int>{b}; });
    emit_sweep(bld, spec, n, true, [](int h, int b) { return std::optional<std::pair<int, int>>{{h + 1, b}}; });
    return bld.finish();
}

Schedule gen_algo3(const ProblemSpec& spec, const ArchConfig& arch) {
    check_arch(spec, arch);
    require_scheme(spec, Scheme::Masked);
    const int n = spec.n;
    const int groups = static_cast<int>(plan_algo3(spec).groups.size());
    Builder bld(spec, arch);
    auto cell = [n](int g, int b) { return algo3_cell(g, b, n); };
    emit_sweep(bld, spec, groups, false, cell);
    // Rows below n/2 share their PE columns with row n - A, shifted by n - A.
    emit_phase2(bld, spec, [n](int a, int b) -> std::optional<int> {
        const int col = 2 * a < n ? fmod(b - (n - a) - 1, n) + 1 : b;
        if (col > a) return std::nullopt;
        return col;
    });
    emit_sweep(bld, spec, groups, true, cell);
    return bld.finish();
}

Schedule generate(int algo, const ProblemSpec& spec, const ArchConfig& arch) {
    switch (algo) {
        case 1: return gen_algo1(spec, arch);
        case 2: return gen_algo2(spec, arch);
        case 3: return gen_algo3(spec, arch);
        default: throw std::invalid_argument("algo must be 1, 2 or 3");
    }
}

}  // namespace ringattn
