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

#include "ringattn/core/schedule_io.hpp"

#include <fstream>
#include <sstream>

namespace ringattn {

using nlohmann::json;

namespace {

constexpr const char* kFormat = "ringattn-schedule";

// Line/column of a byte offset, both 1-based.
std::pair<int, int> line_col(std::string_view text, std::size_t offset) {
    int line = 1, col = 1;
    for (std::size_t k = 0; k < offset && k < text.size(); ++k) {
        if (text[k] == '\n') {
            ++line;
            col = 1;
        } else {
            ++col;
        }
    }
    return {line, col};
}

// Semantic errors carry no JSON position, so point at the first occurrence of
// the offending token instead.
[[noreturn]] void fail_at(std::string_view text, const std::string& token, const std::string& what) {
    std::size_t at = token.empty() ? std::string_view::npos : text.find("\"" + token + "\"");
    auto [line, col] = at == std::string_view::npos ? std::pair{1, 1} : line_col(text, at + 1);
    throw ParseError(what, line, col);
}

json action_to_json(const PEAction& act) {
    json j = json::object();
    const auto& c = act.compute;
    j["op"] = std::string(to_string(c.op));
    switch (c.op) {
        case OpKind::Nop: break;
        case OpKind::Eac:
            j["dst"] = to_string(c.dst);
            j["a"] = to_string(c.a);
            break;
        case OpKind::Mac:
        case OpKind::Div:
            j["dst"] = to_string(c.dst);
            j["a"] = to_string(c.a);
            j["b"] = to_string(c.b);
            break;
    }
    if (act.transfer) {
        j["transfer"] = {{"datum", to_string(act.transfer->datum)},
                         {"store_as", to_string(act.transfer->store_as)}};
    }
    if (act.phase != PhaseTag::None) j["phase"] = std::string(to_string(act.phase));
    return j;
}

}  // namespace

json spec_to_json(const ProblemSpec& spec) {
    json j = json::object();
    j["n"] = spec.n;
    j["d"] = spec.d;
    j["m"] = spec.m;
    j["scheme"] = std::string(to_string(spec.scheme));
    return j;
}

ProblemSpec spec_from_json(const json& j) {
    return validate_spec(j.at("n").get<int>(), j.at("d").get<int>(), j.at("m").get<int>(),
                         j.at("scheme").get<std::string>());
}

json arch_to_json(const ArchConfig& arch) {
    json j = json::object();
    j["m"] = arch.m;
    j["register_capacity"] = arch.register_capacity ? json(*arch.register_capacity) : json(nullptr);
    return j;
}

ArchConfig arch_from_json(const json& j) {
    ArchConfig a;
    a.m = j.at("m").get<int>();
    if (j.contains("register_capacity") && !j.at("register_capacity").is_null()) {
        a.register_capacity = j.at("register_capacity").get<int>();
    }
    return a;
}

std::string serialize_schedule(const Schedule& s) {
    std::ostringstream out;
    out << "{\n";
    out << "  \"format\": \"" << kFormat << "\",\n";
    out << "  \"version\": 1,\n";
    out << "  \"spec\": " << spec_to_json(s.spec).dump() << ",\n";
    out << "  \"arch\": " << arch_to_json(s.arch).dump() << ",\n";
    out << "  \"initial\": [";
    for (std::size_t p = 0; p < s.initial.size(); ++p) {
        json ids = json::array();
        for (const auto& id : s.initial[p]) ids.push_back(to_string(id));
        out << (p ? ",\n    " : "\n    ") << ids.dump();
    }
    out << (s.initial.empty() ? "],\n" : "\n  ],\n");
    out << "  \"cycles\": [";
    for (std::size_t t = 0; t < s.cycles.size(); ++t) {
        json row = json::array();
        for (const auto& act : s.cycles[t]) row.push_back(action_to_json(act));
        out << (t ? ",\n    " : "\n    ") << row.dump();
    }
    out << (s.cycles.empty() ? "]\n" : "\n  ]\n");
    out << "}\n";
    return out.str();
}

Schedule parse_schedule(std::string_view text) {
    json doc;
    try {
        doc = json::parse(text);
    } catch (const json::parse_error& e) {
        auto [line, col] = line_col(text, e.byte > 0 ? e.byte - 1 : 0);
        throw ParseError(std::string("malformed JSON: ") + e.what(), line, col);
    }

    auto id_of = [&](const json& node) -> DataId {
        if (!node.is_string()) fail_at(text, "", "data id must be a string");
        const auto token = node.get<std::string>();
        try {
            return parse_data_id(token);
        } catch (const DataIdError& e) {
            fail_at(text, token, e.what());
        }
    };

    Schedule s;
    try {
        if (!doc.is_object()) throw ParseError("schedule must be a JSON object", 1, 1);
        if (doc.contains("format") && doc.at("format") != kFormat) {
            fail_at(text, doc.at("format").dump(), "unexpected format tag");
        }
        s.spec = spec_from_json(doc.at("spec"));
        s.arch = arch_from_json(doc.at("arch"));

        for (const auto& pe : doc.at("initial")) {
            std::vector<DataId> ids;
            for (const auto& tok : pe) ids.push_back(id_of(tok));
            s.initial.push_back(std::move(ids));
        }
        for (const auto& row : doc.at("cycles")) {
            Cycle cyc;
            for (const auto& a : row) {
                PEAction act;
                const auto op = a.at("op").get<std::string>();
                if (op == "nop") {
                    act.compute = {};
                } else if (op == "mac") {
                    act.compute = Compute::mac(id_of(a.at("dst")), id_of(a.at("a")), id_of(a.at("b")));
                } else if (op == "eac") {
                    act.compute = Compute::eac(id_of(a.at("dst")), id_of(a.at("a")));
                } else if (op == "div") {
                    act.compute = Compute::div(id_of(a.at("dst")), id_of(a.at("a")), id_of(a.at("b")));
                } else {
                    fail_at(text, op, "unknown op '" + op + "'");
                }
                if (a.contains("transfer")) {
                    const auto& tr = a.at("transfer");
                    Transfer t;
                    t.datum = id_of(tr.at("datum"));
                    t.store_as = tr.contains("store_as") ? id_of(tr.at("store_as")) : t.datum;
                    act.transfer = t;
                }
                if (a.contains("phase")) {
                    const auto tag = a.at("phase").get<std::string>();
                    auto parsed = parse_phase_tag(tag);
                    if (!parsed) fail_at(text, tag, "unknown phase tag '" + tag + "'");
                    act.phase = *parsed;
                }
                cyc.push_back(act);
            }
            s.cycles.push_back(std::move(cyc));
        }
    } catch (const json::exception& e) {
        throw ParseError(std::string("schema error: ") + e.what(), 1, 1);
    } catch (const SpecError& e) {
        fail_at(text, "spec", std::string("invalid spec: ") + e.what());
    }

    try {
        validate_schedule(s);
    } catch (const ScheduleError& e) {
        // Report the position of the first out-of-range token when there is one.
        std::string msg = e.what();
        std::string token;
        for (const auto& pe : s.initial) {
            for (const auto& id : pe) {
                if (!check_data_id(id, s.spec).empty() && token.empty()) token = to_string(id);
            }
        }
        if (token.empty()) {
            auto q = msg.find(": ");
            auto r = q == std::string::npos ? q : msg.find(':', q + 2);
            if (q != std::string::npos && r != std::string::npos) token = msg.substr(q + 2, r - q - 2);
        }
        fail_at(text, token, msg);
    }
    return s;
}

std::string read_text_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot open " + path.string());
    std::ostringstream buf;
    buf << in.rdbuf();
    return buf.str();
}

void write_text_file(const std::filesystem::path& path, std::string_view text) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write " + path.string());
    out << text;
    if (!out) throw std::runtime_error("write failed for " + path.string());
}

Schedule load_schedule(const std::filesystem::path& path) { return parse_schedule(read_text_file(path)); }

void save_schedule(const std::filesystem::path& path, const Schedule& s) {
    write_text_file(path, serialize_schedule(s));
}

}  // namespace ringattn
