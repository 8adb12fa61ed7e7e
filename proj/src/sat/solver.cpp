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


#include "ringattn/sat/solver.hpp"

#include <fcntl.h>
#include <signal.h>
#include <sys/wait.h>
#include <unistd.h>

#include <cerrno>
#include <cstdlib>
#include <cstring>
#include <fstream>
#include <sstream>
#include <thread>

#include "ringattn/core/schedule_io.hpp"

namespace ringattn {

namespace {

class TempFile {
public:
    TempFile() {
        const char* dir = std::getenv("TMPDIR");
        path_ = std::string(dir && *dir ? dir : "/tmp") + "/ringattn-XXXXXX";
        const int fd = mkstemp(path_.data());
        if (fd < 0) throw SatError(SatError::Kind::SolverFailed, "mkstemp: " + std::string(std::strerror(errno)));
        close(fd);
    }
    ~TempFile() { unlink(path_.c_str()); }
    TempFile(const TempFile&) = delete;
    TempFile& operator=(const TempFile&) = delete;
    const std::string& path() const { return path_; }

private:
    std::string path_;
};

std::vector<std::string> split_words(const std::string& s) {
    std::istringstream in(s);
    std::vector<std::string> out;
    for (std::string w; in >> w;) out.push_back(w);
    return out;
}

}  // namespace

std::string solver_from_env() {
    const char* v = std::getenv("SAT_SOLVER");
    return v ? v : "";
}

SolverOutput run_solver(const SolverConfig& cfg, const CnfInstance& c) {
    TempFile cnf;
    write_text_file(cnf.path(), emit_cnf_text(c));
    return run_solver_file(cfg, cnf.path(), c.num_vars());
}

int dimacs_num_vars(std::string_view text) {
    std::istringstream in{std::string(text)};
    for (std::string line; std::getline(in, line);) {
        std::istringstream ls(line);
        std::string p, fmt;
        int vars = -1;
        if (!(ls >> p) || p == "c") continue;
        if (p == "p" && ls >> fmt >> vars && fmt == "cnf" && vars >= 0) return vars;
        break;
    }
    throw SatError(SatError::Kind::ParseError, "missing 'p cnf' header");
}

SolverOutput run_solver_file(const SolverConfig& cfg, const std::filesystem::path& cnf, int num_vars) {
    auto argv_s = split_words(cfg.command);
    if (argv_s.empty()) throw SatError(SatError::Kind::SolverFailed, "no solver command (set --solver or SAT_SOLVER)");

    TempFile out;
    argv_s.push_back(cnf.string());
    std::vector<char*> argv;
    for (auto& a : argv_s) argv.push_back(a.data());
    argv.push_back(nullptr);

    const pid_t pid = fork();
    if (pid < 0) throw SatError(SatError::Kind::SolverFailed, "fork: " + std::string(std::strerror(errno)));
    if (pid == 0) {
        const int fd = open(out.path().c_str(), O_WRONLY | O_TRUNC);
        if (fd >= 0) {
            dup2(fd, STDOUT_FILENO);
            close(fd);
        }
        execvp(argv[0], argv.data());
        _exit(127);
    }

    const auto deadline = std::chrono::steady_clock::now() + cfg.timeout;
    int status = 0;
    for (;;) {
        const pid_t r = waitpid(pid, &status, WNOHANG);
        if (r == pid) break;
        if (r < 0 && errno != EINTR) throw SatError(SatError::Kind::SolverFailed, "waitpid failed");
        if (std::chrono::steady_clock::now() >= deadline) {
            kill(pid, SIGKILL);
            waitpid(pid, &status, 0);
            return {};
        }
        std::this_thread::sleep_for(std::chrono::milliseconds(5));
    }

    if (!WIFEXITED(status)) throw SatError(SatError::Kind::SolverFailed, argv_s[0] + " terminated by a signal");
    const int code = WEXITSTATUS(status);
    if (code == 127) throw SatError(SatError::Kind::SolverFailed, "cannot run " + argv_s[0]);
    if (code != 0 && code != 10 && code != 20) {
        throw SatError(SatError::Kind::SolverFailed, argv_s[0] + " exited with status " + std::to_string(code));
    }
    return parse_solver_output(read_text_file(out.path()), num_vars);
}

SearchResult min_cycle_search(const ProblemSpec& spec, const ArchConfig& arch, int lower, int upper,
                              const SolverConfig& cfg, std::chrono::milliseconds budget) {
    SearchResult res;
    const auto start = std::chrono::steady_clock::now();
    for (int t = lower; t <= upper; ++t) {
        const auto used = std::chrono::duration_cast<std::chrono::milliseconds>(std::chrono::steady_clock::now() - start);
        if (used >= budget) {
            res.budget_exhausted = true;
            break;
        }
        SolverConfig call = cfg;
        call.timeout = std::min(cfg.timeout, budget - used);
        const CnfInstance inst = encode(spec, arch, t);
        const SolverOutput out = run_solver(call, inst);
        if (out.verdict == Verdict::Sat) {
            res.best = t;
            res.schedule = decode(inst, out.model);
            break;
        }
        (out.verdict == Verdict::Unsat ? res.unsat : res.unknown).push_back(t);
    }
    return res;
}

}  // namespace ringattn
