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

#include <algorithm>
#include <bit>
#include <charconv>
#include <cstring>
#include <map>
#include <sstream>
#include <unordered_map>

#include "ringattn/oracle/reference.hpp"
#include "ringattn/sat/cnf.hpp"

namespace ringattn {

std::string_view to_string(VarKind kind) {
    switch (kind) {
        case VarKind::Elem: return "elem";
        case VarKind::Present: return "present";
        case VarKind::Acc: return "acc";
        case VarKind::Post: return "post";
        case VarKind::Trans: return "trans";
        case VarKind::Compute: return "compute";
        case VarKind::Barrier: return "barrier";
        case VarKind::Aux: return "aux";
    }
    return "?";
}

namespace {

std::string descriptor_key(const VarDescriptor& d) {
    const std::uint64_t parts[] = {std::uint64_t(d.kind), d.datum.key(), d.store_as.key(), d.termset,
                                   std::uint64_t(d.op), std::uint64_t(std::uint32_t(d.term)),
                                   std::uint64_t(std::uint32_t(d.t)), std::uint64_t(std::uint32_t(d.p))};
    std::string key(sizeof parts, '\0');
    std::memcpy(key.data(), parts, sizeof parts);
    return key;
}

}  // namespace

std::optional<int> CnfInstance::find(const VarDescriptor& d) const {
    if (index_.size() + 1 < vars_.size()) {
        index_.clear();
        for (std::size_t v = 1; v < vars_.size(); ++v) {
            if (vars_[v].kind != VarKind::Aux) index_.emplace(descriptor_key(vars_[v]), static_cast<int>(v));
        }
        // Aux variables are not indexed; pad so the size check stays cheap.
        index_.reserve(vars_.size());
        for (std::size_t v = index_.size() + 1; v < vars_.size(); ++v) index_.emplace("#" + std::to_string(v), 0);
    }
    auto it = index_.find(descriptor_key(d));
    if (it == index_.end() || it->second == 0) return std::nullopt;
    return it->second;
}

int CnfInstance::new_var(const VarDescriptor& d) {
    vars_.push_back(d);
    return static_cast<int>(vars_.size()) - 1;
}

void CnfInstance::add_clause(std::vector<int> lits) {
    std::size_t keep = 0;
    for (int lit : lits) {
        if (lit == kTrue) return;
        if (lit == kFalse) continue;
        lits[keep++] = lit;
    }
    lits.resize(keep);
    std::vector<int> sorted = lits;
    std::sort(sorted.begin(), sorted.end());
    for (std::size_t k = 0; k < sorted.size(); ++k) {
        if (std::binary_search(sorted.begin(), sorted.end(), -sorted[k])) return;  // tautology
    }
    if (std::adjacent_find(sorted.begin(), sorted.end()) != sorted.end()) {
        std::vector<int> seen;
        std::erase_if(lits, [&](int lit) {
            if (std::find(seen.begin(), seen.end(), lit) != seen.end()) return true;
            seen.push_back(lit);
            return false;
        });
    }
    lits_.insert(lits_.end(), lits.begin(), lits.end());
    lits_.push_back(0);
    ++num_clauses_;
}

std::vector<int> CnfInstance::clause(std::size_t k) const {
    std::size_t at = 0;
    for (std::size_t seen = 0; seen < k; ++at) {
        if (lits_.at(at) == 0) ++seen;
    }
    std::vector<int> out;
    for (; lits_.at(at) != 0; ++at) out.push_back(lits_[at]);
    return out;
}

namespace {

constexpr int T_ = CnfInstance::kTrue;
constexpr int F_ = CnfInstance::kFalse;

// Number of terms of row i's sum and outputs.
int row_terms(const ProblemSpec& spec, int i) { return spec.scheme == Scheme::Masked ? i : spec.n; }

class Encoder {
public:
    Encoder(const ProblemSpec& spec, const ArchConfig& arch, int deadline)
        : n_(spec.n), d_(spec.d), m_(arch.m), T_steps(deadline), roles_(input_roles(spec.scheme)) {
        c_.spec = spec;
        c_.arch = arch;
        c_.deadline = deadline;
    }

    CnfInstance run();

private:
    struct Acc {
        DataId id;
        int k;  // term count; terms are 1..k
    };

    int full(int a) const { return (1 << accs_[static_cast<std::size_t>(a)].k) - 1; }
    int subsets(int a) const { return 1 << accs_[static_cast<std::size_t>(a)].k; }

    // Acc before cycle tau (1..T+1); Post after the compute stage of t (1..T).
    int acc(int a, int tau, int p, int S) const {
        return acc_vars_[static_cast<std::size_t>(a)][static_cast<std::size_t>(((tau - 1) * m_ + (p - 1)) * subsets(a) + S)];
    }
    int post(int a, int t, int p, int S) const {
        return post_vars_[static_cast<std::size_t>(a)][static_cast<std::size_t>(((t - 1) * m_ + (p - 1)) * subsets(a) + S)];
    }
    int pres(int x, int tau, int p) const {
        return pres_vars_[static_cast<std::size_t>(x)][static_cast<std::size_t>((tau - 1) * m_ + (p - 1))];
    }
    int elem(const DataId& e, int p) const { return elem_vars_.at(e)[static_cast<std::size_t>(p - 1)]; }
    int acc_of(const DataId& id) const { return acc_index_.at(id); }
    int pres_of(const DataId& id) const { return pres_index_.at(id); }

    bool unmasked_pair(int i, int j) const { return unmasked(c_.spec.scheme, i, j); }
    int pred(int p) const { return p == 1 ? m_ : p - 1; }

    void declare();
    void barrier_bounds();
    void cycle(int t);
    void at_most_one(std::vector<int> xs);

    int n_, d_, m_, T_steps;
    InputRoles roles_;
    CnfInstance c_;

    std::vector<Acc> accs_;
    std::unordered_map<DataId, int> acc_index_;
    std::vector<DataId> pres_ids_;
    std::unordered_map<DataId, int> pres_index_;
    std::unordered_map<DataId, std::vector<int>> elem_vars_;
    std::vector<std::vector<int>> acc_vars_, post_vars_, pres_vars_;
    std::vector<int> b12_, b23_;  // index t - 1
    // Every slot that can add term u to accumulator a, key a * 32 + u (w' only
    // when it cannot arrive renamed); and
    // every slot that can produce presence item x.
    std::map<int, std::vector<int>> term_slots_;
    std::vector<std::vector<int>> producer_slots_;
};

void Encoder::at_most_one(std::vector<int> xs) {
    std::erase_if(xs, [](int x) { return x == F_; });
    if (xs.size() < 2) return;
    // sequential counter
    std::vector<int> s(xs.size() - 1);
    for (auto& v : s) v = c_.new_var({});
    c_.add_clause({-xs[0], s[0]});
    for (std::size_t i = 1; i + 1 < xs.size(); ++i) {
        c_.add_clause({-xs[i], s[i]});
        c_.add_clause({-s[i - 1], s[i]});
        c_.add_clause({-xs[i], -s[i - 1]});
    }
    c_.add_clause({-xs.back(), -s.back()});
}

void Encoder::declare() {
    const auto scheme = c_.spec.scheme;
    for (int i = 1; i <= n_; ++i) {
        for (int j = 1; j <= n_; ++j) {
            if (!unmasked_pair(i, j)) continue;
            acc_index_[DataId::raw(i, j)] = static_cast<int>(accs_.size());
            accs_.push_back({DataId::raw(i, j), d_});
        }
    }
    for (int i = 1; i <= n_; ++i) {
        acc_index_[DataId::row_sum(i)] = static_cast<int>(accs_.size());
        accs_.push_back({DataId::row_sum(i), row_terms(c_.spec, i)});
    }
    for (int i = 1; i <= n_; ++i) {
        for (int l = 1; l <= d_; ++l) {
            acc_index_[DataId::out(i, l)] = static_cast<int>(accs_.size());
            accs_.push_back({DataId::out(i, l), row_terms(c_.spec, i)});
        }
    }
    for (int i = 1; i <= n_; ++i) {
        for (int j = 1; j <= n_; ++j) {
            if (!unmasked_pair(i, j)) continue;
            for (const auto& id : {DataId::exp(i, j), DataId::norm(i, j)}) {
                pres_index_[id] = static_cast<int>(pres_ids_.size());
                pres_ids_.push_back(id);
            }
        }
    }

    std::vector<Role> used = scheme == Scheme::SharedQKV ? std::vector<Role>{Role::X}
                                                           : std::vector<Role>{Role::Q, Role::K, Role::V};
    for (Role r : used) {
        for (int i = 1; i <= n_; ++i) {
            for (int l = 1; l <= d_; ++l) {
                const auto e = DataId::elem(r, i, l);
                auto& vs = elem_vars_[e];
                for (int p = 1; p <= m_; ++p) vs.push_back(c_.new_var({VarKind::Elem, e, {}, 0, OpKind::Nop, 0, 0, p}));
            }
        }
    }

    const int T = T_steps;
    for (std::size_t a = 0; a < accs_.size(); ++a) {
        const int count = 1 << accs_[a].k;
        auto& av = acc_vars_.emplace_back(static_cast<std::size_t>((T + 1) * m_ * count), F_);
        auto& pv = post_vars_.emplace_back(static_cast<std::size_t>(T * m_ * count), F_);
        for (int tau = 1; tau <= T + 1; ++tau) {
            for (int p = 1; p <= m_; ++p) {
                for (int S = 0; S < count; ++S) {
                    int& v = av[static_cast<std::size_t>(((tau - 1) * m_ + (p - 1)) * count + S)];
                    if (tau == 1) {
                        v = S == 0 ? T_ : F_;
                    } else if (std::popcount(unsigned(S)) <= tau - 1) {
                        v = c_.new_var({VarKind::Acc, accs_[a].id, {}, std::uint32_t(S), OpKind::Nop, 0, tau, p});
                    }
                }
            }
        }
        for (int t = 1; t <= T; ++t) {
            for (int p = 1; p <= m_; ++p) {
                for (int S = 0; S < count; ++S) {
                    if (std::popcount(unsigned(S)) > t) continue;
                    pv[static_cast<std::size_t>(((t - 1) * m_ + (p - 1)) * count + S)] =
                        c_.new_var({VarKind::Post, accs_[a].id, {}, std::uint32_t(S), OpKind::Nop, 0, t, p});
                }
            }
        }
    }
    for (const auto& id : pres_ids_) {
        auto& pv = pres_vars_.emplace_back(static_cast<std::size_t>((T + 1) * m_), F_);
        for (int tau = 2; tau <= T + 1; ++tau) {
            for (int p = 1; p <= m_; ++p) {
                pv[static_cast<std::size_t>((tau - 1) * m_ + (p - 1))] =
                    c_.new_var({VarKind::Present, id, {}, 0, OpKind::Nop, 0, tau, p});
            }
        }
    }
    for (int t = 1; t <= T; ++t) {
        b12_.push_back(c_.new_var({VarKind::Barrier, {}, {}, 0, OpKind::Nop, 0, t, 12}));
        b23_.push_back(c_.new_var({VarKind::Barrier, {}, {}, 0, OpKind::Nop, 0, t, 23}));
    }
    for (int t = 1; t < T; ++t) {
        c_.add_clause({-b12_[static_cast<std::size_t>(t - 1)], b12_[static_cast<std::size_t>(t)]});
        c_.add_clause({-b23_[static_cast<std::size_t>(t - 1)], b23_[static_cast<std::size_t>(t)]});
    }
    for (int t = 1; t <= T; ++t) c_.add_clause({-b23_[static_cast<std::size_t>(t - 1)], b12_[static_cast<std::size_t>(t - 1)]});
}

void Encoder::cycle(int t) {
    const std::size_t A = accs_.size(), X = pres_ids_.size();
    const bool shared = c_.spec.scheme == Scheme::SharedQKV;
    const int b12 = b12_[static_cast<std::size_t>(t - 1)], b23 = b23_[static_cast<std::size_t>(t - 1)];

    // Per PE: term-adding computes per accumulator, producers per presence item,
    // outgoing transfers.
    std::vector<std::vector<std::vector<std::pair<int, int>>>> adds(static_cast<std::size_t>(m_),
                                                                    std::vector<std::vector<std::pair<int, int>>>(A));
    std::vector<std::vector<std::vector<int>>> prods(static_cast<std::size_t>(m_), std::vector<std::vector<int>>(X));
    std::vector<std::vector<int>> tr_acc(static_cast<std::size_t>(m_), std::vector<int>(A, F_));
    std::vector<std::vector<int>> tr_ren(static_cast<std::size_t>(m_), std::vector<int>(A, F_));
    std::vector<std::vector<int>> tr_pres(static_cast<std::size_t>(m_), std::vector<int>(X, F_));

    for (int p = 1; p <= m_; ++p) {
        const auto P = static_cast<std::size_t>(p - 1);
        std::vector<int> computes, transfers;
        auto compute_var = [&](OpKind op, const DataId& dst, int term) {
            const int v = c_.new_var({VarKind::Compute, dst, {}, 0, op, term, t, p});
            computes.push_back(v);
            return v;
        };

        for (int i = 1; i <= n_; ++i) {
            for (int j = 1; j <= n_; ++j) {
                if (!unmasked_pair(i, j)) continue;
                const int a = acc_of(DataId::raw(i, j));
                for (int l = 1; l <= d_; ++l) {
                    const int v = compute_var(OpKind::Mac, DataId::raw(i, j), l);
                    adds[P][static_cast<std::size_t>(a)].emplace_back(l, v);
                    if (!shared) term_slots_[a * 32 + l].push_back(v);
                    c_.add_clause({-v, elem(DataId::elem(roles_.query, i, l), p)});
                    c_.add_clause({-v, elem(DataId::elem(roles_.key, j, l), p)});
                    c_.add_clause({-v, -b12});
                }
                const int e = compute_var(OpKind::Eac, DataId::row_sum(i), j);
                adds[P][static_cast<std::size_t>(acc_of(DataId::row_sum(i)))].emplace_back(j, e);
                prods[P][static_cast<std::size_t>(pres_of(DataId::exp(i, j)))].push_back(e);
                term_slots_[acc_of(DataId::row_sum(i)) * 32 + j].push_back(e);
                c_.add_clause({-e, acc(a, t, p, full(a))});
                c_.add_clause({-e, b12});
                c_.add_clause({-e, -b23});

                const int s = acc_of(DataId::row_sum(i));
                const int dv = compute_var(OpKind::Div, DataId::norm(i, j), 0);
                prods[P][static_cast<std::size_t>(pres_of(DataId::norm(i, j)))].push_back(dv);
                producer_slots_[static_cast<std::size_t>(pres_of(DataId::norm(i, j)))].push_back(dv);
                c_.add_clause({-dv, pres(pres_of(DataId::exp(i, j)), t, p)});
                c_.add_clause({-dv, acc(s, t, p, full(s))});
                c_.add_clause({-dv, b12});
                c_.add_clause({-dv, -b23});

                for (int l = 1; l <= d_; ++l) {
                    const int v = compute_var(OpKind::Mac, DataId::out(i, l), j);
                    adds[P][static_cast<std::size_t>(acc_of(DataId::out(i, l)))].emplace_back(j, v);
                    term_slots_[acc_of(DataId::out(i, l)) * 32 + j].push_back(v);
                    c_.add_clause({-v, pres(pres_of(DataId::norm(i, j)), t, p)});
                    c_.add_clause({-v, elem(DataId::elem(roles_.value, j, l), p)});
                    c_.add_clause({-v, b23});
                }
            }
        }

        for (std::size_t a = 0; a < A; ++a) {
            const DataId id = accs_[a].id;
            const int v = c_.new_var({VarKind::Trans, id, id, 0, OpKind::Nop, 0, t, p});
            tr_acc[P][a] = v;
            transfers.push_back(v);
            c_.add_clause({-v, -post(static_cast<int>(a), t, p, 0)});
            if (shared && id.kind == DataKind::RawW && id.i != id.j) {
                const DataId to = DataId::raw(id.j, id.i);
                const int r = c_.new_var({VarKind::Trans, id, to, 0, OpKind::Nop, 0, t, p});
                tr_ren[P][a] = r;
                transfers.push_back(r);
                c_.add_clause({-r, -post(static_cast<int>(a), t, p, 0)});
            }
        }
        for (std::size_t x = 0; x < X; ++x) {
            const int v = c_.new_var({VarKind::Trans, pres_ids_[x], pres_ids_[x], 0, OpKind::Nop, 0, t, p});
            tr_pres[P][x] = v;
            transfers.push_back(v);
            std::vector<int> cl{-v, pres(static_cast<int>(x), t, p)};
            for (int pr : prods[P][x]) cl.push_back(pr);
            c_.add_clause(std::move(cl));
        }
        at_most_one(computes);
        at_most_one(transfers);

        // Compute stage of every accumulator on this PE.
        for (std::size_t a = 0; a < A; ++a) {
            const int ai = static_cast<int>(a);
            const auto& add = adds[P][a];
            std::vector<int> posts;
            for (int S = 0; S < subsets(ai); ++S) {
                posts.push_back(post(ai, t, p, S));
                const int x = acc(ai, t, p, S);
                if (x == F_) continue;
                std::vector<int> stay{-x, post(ai, t, p, S)};
                for (const auto& [u, cv] : add) {
                    const int bit = 1 << (u - 1);
                    if (S & bit) {
                        c_.add_clause({-cv, -x});
                    } else {
                        c_.add_clause({-cv, -x, post(ai, t, p, S | bit)});
                    }
                    stay.push_back(cv);
                }
                c_.add_clause(std::move(stay));
            }
            at_most_one(posts);
        }
    }

    // State before t + 1.
    for (int p = 1; p <= m_; ++p) {
        const int q = pred(p);
        const auto Q = static_cast<std::size_t>(q - 1);
        for (std::size_t a = 0; a < A; ++a) {
            const int ai = static_cast<int>(a);
            const DataId id = accs_[a].id;
            std::vector<std::pair<int, int>> arrivals{{tr_acc[Q][a], ai}};
            if (shared && id.kind == DataKind::RawW && id.i != id.j) {
                const int b = acc_of(DataId::raw(id.j, id.i));
                arrivals.emplace_back(tr_ren[Q][static_cast<std::size_t>(b)], b);
            }
            for (int S = 0; S < subsets(ai); ++S) {
                const int next = acc(ai, t + 1, p, S);
                const int own = post(ai, t, p, S);
                std::vector<int> keep_pos{-own, next}, keep_neg{own, -next};
                for (const auto& [r, b] : arrivals) {
                    const int in = post(b, t, q, S);
                    c_.add_clause({-r, -in, next});
                    c_.add_clause({-r, in, -next});
                    keep_pos.push_back(r);
                    keep_neg.push_back(r);
                }
                c_.add_clause(std::move(keep_pos));
                c_.add_clause(std::move(keep_neg));
            }
        }
        for (std::size_t x = 0; x < X; ++x) {
            const int xi = static_cast<int>(x);
            const int now = pres(xi, t, p), next = pres(xi, t + 1, p), in = tr_pres[Q][x];
            c_.add_clause({-now, next});
            c_.add_clause({-in, next});
            std::vector<int> frame{-next, now, in};
            for (int pr : prods[static_cast<std::size_t>(p - 1)][x]) {
                c_.add_clause({-pr, next});
                frame.push_back(pr);
            }
            c_.add_clause(std::move(frame));
        }
    }
}

// Each phase spans at least ceil(ops / m) cycles, which pins the barriers
// near both ends of the schedule.
void Encoder::barrier_bounds() {
    int pairs = 0;
    for (int i = 1; i <= n_; ++i) {
        for (int j = 1; j <= n_; ++j) pairs += unmasked_pair(i, j) ? 1 : 0;
    }
    // Under the shared scheme only one of w'_ij and w'_ji has to be computed.
    const int computed = c_.spec.scheme == Scheme::SharedQKV ? n_ * (n_ + 1) / 2 : pairs;
    const int p1 = (computed * d_ + m_ - 1) / m_, p3 = (pairs * d_ + m_ - 1) / m_, p2 = (2 * pairs + m_ - 1) / m_;
    for (int t = 1; t <= T_steps; ++t) {
        const auto k = static_cast<std::size_t>(t - 1);
        if (t <= p1) c_.add_clause({-b12_[k]});
        if (t <= p1 + p2) c_.add_clause({-b23_[k]});
        if (t > T_steps - p3) c_.add_clause({b23_[k]});
        if (t > T_steps - p3 - p2) c_.add_clause({b12_[k]});
    }
}

CnfInstance Encoder::run() {
    declare();
    barrier_bounds();
    producer_slots_.resize(pres_ids_.size());
    for (int t = 1; t <= T_steps; ++t) cycle(t);
    // Redundant: every term and every normalized weight is computed somewhere.
    for (auto& [key, slots] : term_slots_) c_.add_clause(slots);
    for (const auto& slots : producer_slots_) {
        if (!slots.empty()) c_.add_clause(slots);
    }
    for (int i = 1; i <= n_; ++i) {
        for (int l = 1; l <= d_; ++l) {
            const int a = acc_of(DataId::out(i, l));
            std::vector<int> goal;
            for (int p = 1; p <= m_; ++p) goal.push_back(acc(a, T_steps + 1, p, full(a)));
            c_.add_clause(std::move(goal));
        }
    }
    return std::move(c_);
}

// The compute a Compute variable stands for.
Compute compute_of(const VarDescriptor& d, const ProblemSpec& spec) {
    const auto roles = input_roles(spec.scheme);
    switch (d.op) {
        case OpKind::Mac:
            if (d.datum.kind == DataKind::RawW) {
                return Compute::mac(d.datum, DataId::elem(roles.query, d.datum.i, d.term),
                                    DataId::elem(roles.key, d.datum.j, d.term));
            }
            return Compute::mac(d.datum, DataId::norm(d.datum.i, d.term), DataId::elem(roles.value, d.term, d.datum.j));
        case OpKind::Eac: return Compute::eac(d.datum, DataId::raw(d.datum.i, d.term));
        case OpKind::Div: return Compute::div(d.datum, DataId::exp(d.datum.i, d.datum.j), DataId::row_sum(d.datum.i));
        case OpKind::Nop: break;
    }
    return {};
}

PhaseTag phase_of(const Compute& c) {
    switch (c.op) {
        case OpKind::Mac: return c.dst.kind == DataKind::RawW ? PhaseTag::P1 : PhaseTag::P3;
        case OpKind::Eac: return PhaseTag::P2a;
        case OpKind::Div: return PhaseTag::P2b;
        case OpKind::Nop: break;
    }
    return PhaseTag::None;
}

}  // namespace

CnfInstance encode(const ProblemSpec& spec, const ArchConfig& arch, int deadline) {
    if (spec.m < 1 || spec.n % spec.m != 0) throw SatError(SatError::Kind::Indivisible, "m must divide n");
    if (arch.m != spec.m) throw SatError(SatError::Kind::Indivisible, "arch and spec disagree on m");
    if (spec.n > kMaxSatN || spec.d > kMaxSatN) {
        throw SatError(SatError::Kind::TooLarge,
                       "n=" + std::to_string(spec.n) + " exceeds the encodable size " + std::to_string(kMaxSatN));
    }
    if (deadline < 0) throw SatError(SatError::Kind::ScheduleOutOfBounds, "deadline must be non-negative");
    Encoder enc(spec, arch, deadline);
    return enc.run();
}

CnfInstance assume_schedule(const CnfInstance& c, const Schedule& s) {
    if (!(s.spec == c.spec) || s.arch.m != c.arch.m) {
        throw SatError(SatError::Kind::ScheduleOutOfBounds, "schedule is for a different instance");
    }
    if (s.num_cycles() > c.deadline) {
        throw SatError(SatError::Kind::ScheduleOutOfBounds, "schedule has " + std::to_string(s.num_cycles()) +
                                                                " cycles, deadline is " + std::to_string(c.deadline));
    }
    CnfInstance out = c;
    const int m = c.arch.m;
    auto action = [&](int t, int p) -> const PEAction* { return t <= s.num_cycles() ? &s.at(t, p) : nullptr; };
    // matched[t][p]: {compute matched, transfer matched}
    std::vector<std::pair<bool, bool>> matched(static_cast<std::size_t>(c.deadline * m), {false, false});

    for (int v = 1; v <= c.num_vars(); ++v) {
        const auto& d = c.var(v);
        bool value = false;
        switch (d.kind) {
            case VarKind::Elem: {
                const auto& init = s.initial[static_cast<std::size_t>(d.p - 1)];
                value = std::find(init.begin(), init.end(), d.datum) != init.end();
                break;
            }
            case VarKind::Compute: {
                const PEAction* act = action(d.t, d.p);
                value = act && act->compute == compute_of(d, c.spec);
                if (value) matched[static_cast<std::size_t>((d.t - 1) * m + d.p - 1)].first = true;
                break;
            }
            case VarKind::Trans: {
                const PEAction* act = action(d.t, d.p);
                value = act && act->transfer && act->transfer->datum == d.datum && act->transfer->store_as == d.store_as;
                if (value) matched[static_cast<std::size_t>((d.t - 1) * m + d.p - 1)].second = true;
                break;
            }
            default: continue;
        }
        out.add_clause({value ? v : -v});
    }
    for (int t = 1; t <= s.num_cycles(); ++t) {
        for (int p = 1; p <= m; ++p) {
            const auto& act = s.at(t, p);
            const auto& [comp, tr] = matched[static_cast<std::size_t>((t - 1) * m + p - 1)];
            if ((!act.compute.is_nop() && !comp) || (act.transfer && !tr)) out.add_clause(std::vector<int>{});
        }
    }
    return out;
}

Schedule decode(const CnfInstance& c, const Model& model) {
    if (model.size() < static_cast<std::size_t>(c.num_vars()) + 1) {
        throw SatError(SatError::Kind::ModelInconsistent, "model shorter than the variable count");
    }
    Schedule s = empty_schedule(c.spec, c.arch);
    for (int t = 0; t < c.deadline; ++t) append_cycle(s);
    std::vector<std::vector<DataId>> placed(static_cast<std::size_t>(c.arch.m));

    auto where = [](const VarDescriptor& d) { return "cycle " + std::to_string(d.t) + ", PE " + std::to_string(d.p); };
    for (int v = 1; v <= c.num_vars(); ++v) {
        if (!model[static_cast<std::size_t>(v)]) continue;
        const auto& d = c.var(v);
        switch (d.kind) {
            case VarKind::Elem: placed[static_cast<std::size_t>(d.p - 1)].push_back(d.datum); break;
            case VarKind::Compute: {
                auto& act = s.at(d.t, d.p);
                if (!act.compute.is_nop()) throw SatError(SatError::Kind::ModelInconsistent, "two computes at " + where(d));
                act.compute = compute_of(d, c.spec);
                act.phase = phase_of(act.compute);
                break;
            }
            case VarKind::Trans: {
                auto& act = s.at(d.t, d.p);
                if (act.transfer) throw SatError(SatError::Kind::ModelInconsistent, "two transfers at " + where(d));
                act.transfer = Transfer{d.datum, d.store_as};
                break;
            }
            default: break;
        }
    }
    // Keep only the placed inputs that some compute on the PE reads.
    place_consumed_inputs(s);
    for (std::size_t p = 0; p < s.initial.size(); ++p) {
        for (const auto& e : s.initial[p]) {
            if (std::find(placed[p].begin(), placed[p].end(), e) == placed[p].end()) {
                throw SatError(SatError::Kind::ModelInconsistent, to_string(e) + " used on PE " + std::to_string(p + 1) +
                                                                      " but not placed there");
            }
        }
    }
    return s;
}

std::string emit_cnf_text(const CnfInstance& c) {
    std::string out = "p cnf " + std::to_string(c.num_vars()) + " " + std::to_string(c.num_clauses()) + "\n";
    out.reserve(out.size() + c.literals().size() * 7);
    char buf[16];
    bool line_start = true;
    for (int lit : c.literals()) {
        if (!line_start) out.push_back(' ');
        auto [end, ec] = std::to_chars(buf, buf + sizeof buf, lit);
        out.append(buf, end);
        line_start = lit == 0;
        if (line_start) out.push_back('\n');
    }
    return out;
}

SolverOutput parse_solver_output(std::string_view text, int num_vars) {
    SolverOutput out;
    out.model.assign(static_cast<std::size_t>(num_vars) + 1, false);
    bool seen_verdict = false, bare = false, any_literal = false;
    std::istringstream in{std::string(text)};
    std::string line;
    int line_no = 0;
    auto read_literals = [&](std::istringstream& ls) {
        std::string tok;
        while (ls >> tok) {
            int lit = 0;
            auto [ptr, ec] = std::from_chars(tok.data(), tok.data() + tok.size(), lit);
            if (ec != std::errc{} || ptr != tok.data() + tok.size()) {
                throw SatError(SatError::Kind::ParseError, "line " + std::to_string(line_no) + ": bad literal '" + tok + "'");
            }
            if (lit == 0) continue;
            const int v = std::abs(lit);
            if (v > num_vars) {
                throw SatError(SatError::Kind::ParseError, "line " + std::to_string(line_no) + ": variable " +
                                                               std::to_string(v) + " out of range");
            }
            out.model[static_cast<std::size_t>(v)] = lit > 0;
            any_literal = true;
        }
    };
    while (std::getline(in, line)) {
        ++line_no;
        std::istringstream ls(line);
        std::string head;
        if (!(ls >> head) || head == "c") continue;
        if (head == "s") {
            std::string verdict;
            ls >> verdict;
            seen_verdict = true;
            if (verdict == "SATISFIABLE") out.verdict = Verdict::Sat;
            else if (verdict == "UNSATISFIABLE") out.verdict = Verdict::Unsat;
            else out.verdict = Verdict::Unknown;
        } else if (head == "v") {
            read_literals(ls);
        } else if (head == "SAT" || head == "SATISFIABLE") {
            seen_verdict = bare = true;
            out.verdict = Verdict::Sat;
        } else if (head == "UNSAT" || head == "UNSATISFIABLE") {
            seen_verdict = true;
            out.verdict = Verdict::Unsat;
        } else if (head == "INDET" || head == "UNKNOWN") {
            seen_verdict = true;
            out.verdict = Verdict::Unknown;
        } else if (bare) {
            std::istringstream again(line);
            read_literals(again);
        } else {
            throw SatError(SatError::Kind::ParseError, "line " + std::to_string(line_no) + ": unexpected '" + head + "'");
        }
    }
    if (!seen_verdict) throw SatError(SatError::Kind::ParseError, "no verdict in solver output");
    if (out.verdict == Verdict::Sat && !any_literal && num_vars > 0) {
        throw SatError(SatError::Kind::ParseError, "satisfiable verdict without a model");
    }
    return out;
}

nlohmann::json varmap_to_json(const CnfInstance& c) {
    using nlohmann::json;
    json vars = json::array();
    for (int v = 1; v <= c.num_vars(); ++v) {
        const auto& d = c.var(v);
        if (d.kind == VarKind::Aux) continue;
        json row = {v, std::string(to_string(d.kind)), d.t, d.p};
        switch (d.kind) {
            case VarKind::Elem:
            case VarKind::Present: row.push_back(to_string(d.datum)); break;
            case VarKind::Acc:
            case VarKind::Post:
                row.push_back(to_string(d.datum));
                row.push_back(d.termset);
                break;
            case VarKind::Trans:
                row.push_back(to_string(d.datum));
                row.push_back(to_string(d.store_as));
                break;
            case VarKind::Compute:
                row.push_back(to_string(d.datum));
                row.push_back(std::string(to_string(d.op)));
                row.push_back(d.term);
                break;
            default: break;
        }
        vars.push_back(std::move(row));
    }
    json spec = {{"n", c.spec.n}, {"d", c.spec.d}, {"m", c.spec.m}, {"scheme", std::string(to_string(c.spec.scheme))}};
    return {{"format", "ringattn-varmap"}, {"spec", spec}, {"deadline", c.deadline}, {"num_vars", c.num_vars()},
            {"vars", vars}};
}

CnfInstance varmap_from_json(const nlohmann::json& j) {
    CnfInstance c;
    try {
        const auto& sp = j.at("spec");
        c.spec = validate_spec(sp.at("n").get<int>(), sp.at("d").get<int>(), sp.at("m").get<int>(),
                               sp.at("scheme").get<std::string>());
        c.arch = make_arch(c.spec);
        c.deadline = j.at("deadline").get<int>();
        const int total = j.at("num_vars").get<int>();
        auto op_of = [](const std::string& s) {
            if (s == "mac") return OpKind::Mac;
            if (s == "eac") return OpKind::Eac;
            if (s == "div") return OpKind::Div;
            return OpKind::Nop;
        };
        for (const auto& row : j.at("vars")) {
            const int v = row.at(0).get<int>();
            while (c.num_vars() < v - 1) c.new_var({});
            VarDescriptor d;
            const auto kind = row.at(1).get<std::string>();
            d.t = row.at(2).get<int>();
            d.p = row.at(3).get<int>();
            if (kind == "elem" || kind == "present") {
                d.kind = kind == "elem" ? VarKind::Elem : VarKind::Present;
                d.datum = parse_data_id(row.at(4).get<std::string>());
            } else if (kind == "acc" || kind == "post") {
                d.kind = kind == "acc" ? VarKind::Acc : VarKind::Post;
                d.datum = parse_data_id(row.at(4).get<std::string>());
                d.termset = row.at(5).get<std::uint32_t>();
            } else if (kind == "trans") {
                d.kind = VarKind::Trans;
                d.datum = parse_data_id(row.at(4).get<std::string>());
                d.store_as = parse_data_id(row.at(5).get<std::string>());
            } else if (kind == "compute") {
                d.kind = VarKind::Compute;
                d.datum = parse_data_id(row.at(4).get<std::string>());
                d.op = op_of(row.at(5).get<std::string>());
                d.term = row.at(6).get<int>();
            } else if (kind == "barrier") {
                d.kind = VarKind::Barrier;
            } else {
                throw SatError(SatError::Kind::ParseError, "unknown variable kind '" + kind + "'");
            }
            c.new_var(d);
        }
        while (c.num_vars() < total) c.new_var({});
    } catch (const nlohmann::json::exception& e) {
        throw SatError(SatError::Kind::ParseError, std::string("bad varmap: ") + e.what());
    } catch (const DataIdError& e) {
        throw SatError(SatError::Kind::ParseError, std::string("bad varmap: ") + e.what());
    }
    return c;
}

}  // namespace ringattn
