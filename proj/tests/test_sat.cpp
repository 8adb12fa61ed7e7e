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

#include "doctest.h"
#include "ringattn/gen/generators.hpp"
#include "ringattn/sat/solver.hpp"
#include "ringattn/sim/simulator.hpp"

using namespace ringattn;

namespace {

ProblemSpec spec_of(int n, int m, Scheme scheme) { return validate_spec(n, n, m, scheme); }

SolverConfig solver() { return {solver_from_env(), std::chrono::milliseconds(120000)}; }

Verdict solve(const CnfInstance& c, Model* model = nullptr) {
    const auto out = run_solver(solver(), c);
    if (model) *model = out.model;
    return out.verdict;
}

bool have_solver() {
    if (solver_from_env().empty()) {
        MESSAGE("SAT_SOLVER not set, skipping");
        return false;
    }
    return true;
}

}  // namespace

TEST_CASE("dimacs text for a two-variable instance") {
    CnfInstance c;
    c.new_var({});
    c.new_var({});
    c.add_clause({1, -2});
    CHECK(emit_cnf_text(c) == "p cnf 2 1\n1 -2 0\n");
}

TEST_CASE("constant literals are folded") {
    CnfInstance c;
    c.new_var({});
    c.add_clause({1, CnfInstance::kFalse});
    c.add_clause({1, CnfInstance::kTrue});
    c.add_clause({1, -1});
    c.add_clause({1, 1});
    REQUIRE(c.num_clauses() == 2);
    CHECK(c.clause(0) == std::vector<int>{1});
    CHECK(c.clause(1) == std::vector<int>{1});
}

TEST_CASE("solver output parsing") {
    auto sat = parse_solver_output("c hello\ns SATISFIABLE\nv 1 -2\nv 3 0\n", 3);
    CHECK(sat.verdict == Verdict::Sat);
    CHECK(sat.model == Model{false, true, false, true});

    CHECK(parse_solver_output("s UNSATISFIABLE\n", 3).verdict == Verdict::Unsat);
    CHECK(parse_solver_output("UNSAT\n", 3).verdict == Verdict::Unsat);

    auto bare = parse_solver_output("SAT\n-1 2 3 0\n", 3);
    CHECK(bare.verdict == Verdict::Sat);
    CHECK(bare.model == Model{false, false, true, true});

    CHECK(parse_solver_output("s UNKNOWN\n", 3).verdict == Verdict::Unknown);

    auto kind = [](std::string_view text) {
        try {
            parse_solver_output(text, 3);
        } catch (const SatError& e) {
            return e.kind();
        }
        return SatError::Kind::SolverFailed;
    };
    CHECK(kind("") == SatError::Kind::ParseError);
    CHECK(kind("s SATISFIABLE\n") == SatError::Kind::ParseError);
    CHECK(kind("s SATISFIABLE\nv 1 x 0\n") == SatError::Kind::ParseError);
    CHECK(kind("s SATISFIABLE\nv 4 0\n") == SatError::Kind::ParseError);
    CHECK(kind("garbage\n") == SatError::Kind::ParseError);
}

TEST_CASE("encode preconditions") {
    auto kind = [](const ProblemSpec& spec, int deadline) {
        try {
            encode(spec, make_arch(spec), deadline);
        } catch (const SatError& e) {
            return e.kind();
        }
        return SatError::Kind::SolverFailed;
    };
    CHECK(kind(spec_of(7, 7, Scheme::Distinct), 10) == SatError::Kind::TooLarge);
    CHECK(kind(ProblemSpec{4, 4, 3, Scheme::Distinct}, 10) == SatError::Kind::Indivisible);
    CHECK(kind(spec_of(3, 3, Scheme::Distinct), -1) == SatError::Kind::ScheduleOutOfBounds);
}

TEST_CASE("variable map is injective and round-trips") {
    const auto spec = spec_of(3, 3, Scheme::SharedQKV);
    const auto c = encode(spec, make_arch(spec), 6);
    for (std::size_t k = 0; k < c.num_clauses(); ++k) {
        for (int lit : c.clause(k)) {
            REQUIRE(lit != 0);
            REQUIRE(std::abs(lit) <= c.num_vars());
        }
    }
    int named = 0;
    for (int v = 1; v <= c.num_vars(); ++v) {
        if (c.var(v).kind == VarKind::Aux) continue;
        ++named;
        REQUIRE(c.find(c.var(v)) == v);
    }
    CHECK(named > 0);

    const auto back = varmap_from_json(nlohmann::json::parse(varmap_to_json(c).dump()));
    CHECK(back.spec == c.spec);
    CHECK(back.deadline == 6);
    REQUIRE(back.num_vars() == c.num_vars());
    for (int v = 1; v <= c.num_vars(); ++v) REQUIRE(back.var(v) == c.var(v));
}

TEST_CASE("variable count at n=4 is in the expected range") {
    const auto spec = spec_of(4, 4, Scheme::Distinct);
    const auto c = encode(spec, make_arch(spec), 40);
    CHECK(c.num_vars() >= 33000);
    CHECK(c.num_vars() <= 3300000);
}

TEST_CASE("assume_schedule rejects schedules that do not fit") {
    const auto spec = spec_of(3, 3, Scheme::Distinct);
    const auto arch = make_arch(spec);
    const auto c = encode(spec, arch, 20);
    CHECK_THROWS_AS(assume_schedule(c, gen_algo1(spec, arch)), SatError);
    const auto other = spec_of(3, 3, Scheme::SharedQKV);
    CHECK_THROWS_AS(assume_schedule(encode(spec, arch, 30), gen_algo1(other, make_arch(other))), SatError);
}

TEST_CASE("decode rejects inconsistent models") {
    const auto spec = spec_of(3, 3, Scheme::Distinct);
    const auto c = encode(spec, make_arch(spec), 2);
    Model model(static_cast<std::size_t>(c.num_vars()) + 1, false);
    int set = 0;
    for (int v = 1; v <= c.num_vars() && set < 2; ++v) {
        const auto& d = c.var(v);
        if (d.kind == VarKind::Compute && d.t == 1 && d.p == 1) {
            model[static_cast<std::size_t>(v)] = true;
            ++set;
        }
    }
    REQUIRE(set == 2);
    CHECK_THROWS_AS(decode(c, model), SatError);
    CHECK_THROWS_AS(decode(c, Model(3, false)), SatError);
}

TEST_CASE("generated schedules are certified by the encoding") {
    if (!have_solver()) return;
    struct Case {
        int algo, n;
        Scheme scheme;
    };
    for (const auto& [algo, n, scheme] : {Case{1, 3, Scheme::Distinct}, Case{1, 3, Scheme::SharedQKV},
                                          Case{2, 3, Scheme::SharedQKV}, Case{3, 3, Scheme::Masked},
                                          Case{1, 4, Scheme::Distinct}, Case{2, 4, Scheme::SharedQKV},
                                          Case{3, 4, Scheme::Masked}}) {
        CAPTURE(algo);
        CAPTURE(n);
        const auto spec = spec_of(n, n, scheme);
        const auto arch = make_arch(spec);
        const auto s = generate(algo, spec, arch);
        CHECK(solve(assume_schedule(encode(spec, arch, s.num_cycles()), s)) == Verdict::Sat);
    }
}

TEST_CASE("masked baseline is rejected like the strict simulator") {
    if (!have_solver()) return;
    const auto spec = spec_of(3, 3, Scheme::Masked);
    const auto arch = make_arch(spec);
    const auto s = gen_algo1(spec, arch);
    CHECK_FALSE(check_validity(s, true).empty());
    CHECK(solve(assume_schedule(encode(spec, arch, 24), s)) == Verdict::Unsat);
}

TEST_CASE("transfer from a PE lacking the datum is unsatisfiable") {
    if (!have_solver()) return;
    const auto spec = spec_of(3, 3, Scheme::Distinct);
    const auto arch = make_arch(spec);
    auto s = gen_algo1(spec, arch);
    auto& act = s.cycles[2][0];
    REQUIRE_FALSE(act.transfer);
    act.transfer = Transfer{DataId::norm(1, 1), DataId::norm(1, 1)};
    const auto vs = execute(s).violations;
    CHECK(std::count_if(vs.begin(), vs.end(),
                        [](const Violation& v) { return v.kind == ViolationKind::TransferSourceMissing; }) == 1);
    CHECK(solve(assume_schedule(encode(spec, arch, 24), s)) == Verdict::Unsat);
}

TEST_CASE("masked n=3 needs 17 cycles") {
    if (!have_solver()) return;
    const auto spec = spec_of(3, 3, Scheme::Masked);
    const auto arch = make_arch(spec);
    CHECK(solve(encode(spec, arch, 16)) == Verdict::Unsat);

    const auto c = encode(spec, arch, 17);
    Model model;
    REQUIRE(solve(c, &model) == Verdict::Sat);
    const auto s = decode(c, model);
    CHECK(s.num_cycles() == 17);
    const auto r = execute(s);
    CHECK(r.violations.empty());
    CHECK(r.provenance_ok);
    CHECK(solve(assume_schedule(c, s)) == Verdict::Sat);
    // padding with an idle cycle keeps it satisfiable
    CHECK(solve(assume_schedule(encode(spec, arch, 18), s)) == Verdict::Sat);
}

TEST_CASE("minimum cycle search") {
    if (!have_solver()) return;
    const auto spec = spec_of(3, 3, Scheme::Masked);
    const auto res = min_cycle_search(spec, make_arch(spec), 16, 18, solver(), std::chrono::minutes(5));
    REQUIRE(res.best);
    CHECK(*res.best == 17);
    CHECK(res.unsat == std::vector<int>{16});
    CHECK_FALSE(res.budget_exhausted);
    REQUIRE(res.schedule);
    CHECK(execute(*res.schedule).violations.empty());

    const auto none = min_cycle_search(spec, make_arch(spec), 16, 18, solver(), std::chrono::milliseconds(0));
    CHECK_FALSE(none.best);
    CHECK(none.budget_exhausted);
}

TEST_CASE("run_solver reports a missing solver binary") {
    const auto spec = spec_of(3, 3, Scheme::Masked);
    const auto c = encode(spec, make_arch(spec), 2);
    CHECK_THROWS_AS(run_solver({"/nonexistent/solver", std::chrono::milliseconds(5000)}, c), SatError);
    CHECK_THROWS_AS(run_solver({"", std::chrono::milliseconds(5000)}, c), SatError);
}
