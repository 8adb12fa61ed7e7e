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
 * @file schedule_io.hpp
 * @brief Schedule file format.
 *
 * A schedule file is a UTF-8 JSON document:
 *
 * @code
 * {
 *   "format": "ringattn-schedule", "version": 1,
 *   "spec": {"n": 4, "d": 4, "m": 4, "scheme": "distinct"},
 *   "arch": {"m": 4, "register_capacity": null},
 *   "initial": [["k[1][1]", "q[1][1]"], ...],          // one list per PE
 *   "cycles": [
 *     [ {"op": "mac", "dst": "w'[1][4]", "a": "q[1][1]", "b": "k[4][1]",
 *        "transfer": {"datum": "w'[1][4]", "store_as": "w'[1][4]"}, "phase": "1"},
 *       {"op": "nop"}, ... ],                          // one object per PE
 *     ...
 *   ]
 * }
 * @endcode
 *
 * "op" is one of nop|mac|eac|div. eac uses "dst" and "a" (the w' read);
 * div uses "dst", "a" (the e) and "b" (the s). "transfer" and "phase" are
 * optional. The writer emits one cycle per line.
 */

#pragma once

#include <filesystem>
#include <stdexcept>
#include <string>
#include <string_view>

#include "json.hpp"
#include "ringattn/core/model.hpp"

namespace ringattn {

class ParseError : public std::runtime_error {
public:
    ParseError(const std::string& what, int line, int column)
        : std::runtime_error(what + " (line " + std::to_string(line) + ", column " +
                             std::to_string(column) + ")"),
          line_(line),
          column_(column) {}

    int line() const noexcept { return line_; }
    int column() const noexcept { return column_; }

private:
    int line_;
    int column_;
};

std::string serialize_schedule(const Schedule& s);
Schedule parse_schedule(std::string_view text);

Schedule load_schedule(const std::filesystem::path& path);
void save_schedule(const std::filesystem::path& path, const Schedule& s);

nlohmann::json spec_to_json(const ProblemSpec& spec);
ProblemSpec spec_from_json(const nlohmann::json& j);
nlohmann::json arch_to_json(const ArchConfig& arch);
ArchConfig arch_from_json(const nlohmann::json& j);

/// Whole-file helpers shared by the tools. Throw std::runtime_error on I/O failure.
std::string read_text_file(const std::filesystem::path& path);
void write_text_file(const std::filesystem::path& path, std::string_view text);

}  // namespace ringattn
