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
 * @file solver.hpp
 * @brief Running an external DIMACS solver and searching for the shortest
 * deadline.
 */

#pragma once

#include <chrono>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "ringattn/sat/cnf.hpp"

namespace ringattn {

struct SolverConfig {
    /// Command line, split on whitespace; the CNF path is appended.
    std::string command;
    std::chrono::milliseconds timeout{60000};
};

/// Solver command from $SAT_SOLVER, or empty.
std::string solver_from_env();

/**
 * Writes @p c to a temporary file and runs the solver on it. A timeout yields
 * Verdict::Unknown. Throws SatError (SolverFailed) when the command cannot be
 * started or exits with a status other than 0, 10 or 20, and (ParseError)
 * on unreadable output.
 */
SolverOutput run_solver(const SolverConfig& cfg, const CnfInstance& c);

/// Same for a DIMACS file already on disk.
SolverOutput run_solver_file(const SolverConfig& cfg, const std::filesystem::path& cnf, int num_vars);

/// Variable count from the "p cnf" header of DIMACS text. Throws SatError (ParseError).
int dimacs_num_vars(std::string_view text);

struct SearchResult {
    /// Smallest deadline found satisfiable, if any.
    std::optional<int> best;
    std::optional<Schedule> schedule;
    /// Deadlines proven unsatisfiable.
    std::vector<int> unsat;
    /// Deadlines where the solver gave up.
    std::vector<int> unknown;
    bool budget_exhausted = false;
};

/**
 * Sweeps deadlines upward from @p lower to @p upper and stops at the first
 * satisfiable one. Each call gets the smaller of cfg.timeout and the remaining
 * budget.
 */
SearchResult min_cycle_search(const ProblemSpec& spec, const ArchConfig& arch, int lower, int upper,
                              const SolverConfig& cfg, std::chrono::milliseconds budget);

}  // namespace ringattn
