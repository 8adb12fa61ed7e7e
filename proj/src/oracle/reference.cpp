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

#include "ringattn/oracle/reference.hpp"

#include <cmath>
#include <random>

namespace ringattn {

using nlohmann::json;

OracleResult reference_attention(const ProblemSpec& spec, const Matrix& q, const Matrix& k, const Matrix& v) {
    const int n = spec.n, d = spec.d;
    for (const Matrix* mat : {&q, &k, &v}) {
        if (mat->rows != n || mat->cols != d) {
            throw OracleError(OracleError::Kind::ShapeMismatch,
                              "inputs must be " + std::to_string(n) + "x" + std::to_string(d));
        }
    }

    OracleResult r{Matrix(n, n), std::vector<double>(static_cast<std::size_t>(n), 0.0), Matrix(n, n),
                   Matrix(n, d)};

    // Term l of pair (i, j) is always q_i[l] * k_j[l], summed in l order, so a
    // shared input gives a bitwise symmetric w'.
    for (int i = 1; i <= n; ++i) {
        for (int j = 1; j <= n; ++j) {
            double acc = 0.0;
            for (int l = 1; l <= d; ++l) acc += q(i, l) * k(j, l);
            r.raw_w(i, j) = acc;
        }
    }
    for (int i = 1; i <= n; ++i) {
        double sum = 0.0;
        for (int j = 1; j <= n; ++j) {
            if (unmasked(spec.scheme, i, j)) sum += std::exp(r.raw_w(i, j));
        }
        r.exp_sums[static_cast<std::size_t>(i - 1)] = sum;
        for (int j = 1; j <= n; ++j) {
            r.norm_w(i, j) = unmasked(spec.scheme, i, j) ? std::exp(r.raw_w(i, j)) / sum : 0.0;
        }
    }
    for (int i = 1; i <= n; ++i) {
        for (int l = 1; l <= d; ++l) {
            double acc = 0.0;
            for (int j = 1; j <= n; ++j) {
                if (unmasked(spec.scheme, i, j)) acc += r.norm_w(i, j) * v(j, l);
            }
            r.outputs(i, l) = acc;
        }
    }
    return r;
}

double input_value(const AttentionInputs& in, const DataId& elem) {
    switch (elem.role) {
        case Role::Q:
        case Role::X: return in.q(elem.i, elem.j);
        case Role::K: return in.k(elem.i, elem.j);
        case Role::V: return in.v(elem.i, elem.j);
    }
    return 0.0;
}

AttentionInputs random_inputs(const ProblemSpec& spec, std::uint64_t seed) {
    std::mt19937_64 gen(seed);
    auto draw = [&](Matrix& mat) {
        for (auto& x : mat.data) {
            const double u = static_cast<double>(gen() >> 11) * 0x1.0p-53;
            x = 2.0 * u - 1.0;
        }
    };
    AttentionInputs in{Matrix(spec.n, spec.d), Matrix(spec.n, spec.d), Matrix(spec.n, spec.d)};
    draw(in.q);
    if (spec.scheme == Scheme::SharedQKV) {
        in.k = in.q;
        in.v = in.q;
    } else {
        draw(in.k);
        draw(in.v);
    }
    return in;
}

namespace {

json matrix_to_json(const Matrix& mat) {
    json rows = json::array();
    for (int i = 1; i <= mat.rows; ++i) {
        json row = json::array();
        for (int j = 1; j <= mat.cols; ++j) row.push_back(mat(i, j));
        rows.push_back(std::move(row));
    }
    return rows;
}

Matrix matrix_from_json(const json& j, int rows, int cols) {
    if (!j.is_array() || static_cast<int>(j.size()) != rows) {
        throw OracleError(OracleError::Kind::ShapeMismatch, "matrix must have " + std::to_string(rows) + " rows");
    }
    Matrix mat(rows, cols);
    for (int i = 1; i <= rows; ++i) {
        const auto& row = j[static_cast<std::size_t>(i - 1)];
        if (!row.is_array() || static_cast<int>(row.size()) != cols) {
            throw OracleError(OracleError::Kind::ShapeMismatch,
                              "matrix rows must have " + std::to_string(cols) + " entries");
        }
        for (int c = 1; c <= cols; ++c) mat(i, c) = row[static_cast<std::size_t>(c - 1)].get<double>();
    }
    return mat;
}

}  // namespace

json inputs_to_json(const AttentionInputs& in) {
    return json{{"q", matrix_to_json(in.q)}, {"k", matrix_to_json(in.k)}, {"v", matrix_to_json(in.v)}};
}

AttentionInputs inputs_from_json(const ProblemSpec& spec, const json& j) {
    AttentionInputs in;
    if (j.contains("x")) {
        in.q = matrix_from_json(j.at("x"), spec.n, spec.d);
        in.k = in.q;
        in.v = in.q;
        return in;
    }
    in.q = matrix_from_json(j.at("q"), spec.n, spec.d);
    in.k = matrix_from_json(j.at("k"), spec.n, spec.d);
    in.v = matrix_from_json(j.at("v"), spec.n, spec.d);
    if (spec.scheme == Scheme::SharedQKV && !(in.q == in.k && in.q == in.v)) {
        throw OracleError(OracleError::Kind::ShapeMismatch, "shared scheme needs identical q, k and v");
    }
    return in;
}

json oracle_to_json(const ProblemSpec& spec, const AttentionInputs& in, const OracleResult& r) {
    json j;
    j["spec"] = json{{"n", spec.n}, {"d", spec.d}, {"m", spec.m}, {"scheme", std::string(to_string(spec.scheme))}};
    j["inputs"] = inputs_to_json(in);
    j["rawW"] = matrix_to_json(r.raw_w);
    j["expSums"] = r.exp_sums;
    j["normW"] = matrix_to_json(r.norm_w);
    j["outputs"] = matrix_to_json(r.outputs);
    return j;
}

// ---------------------------------------------------------------------------

ComputationCounts computation_counts(const ProblemSpec& spec, CountVariant variant) {
    const std::uint64_t n = static_cast<std::uint64_t>(spec.n);
    const std::uint64_t d = static_cast<std::uint64_t>(spec.d);
    ComputationCounts c;
    switch (variant) {
        case CountVariant::Baseline:
            c.macs_p1 = d * n * n;
            c.eacs = n * n;
            c.divs = n * n;
            c.macs_p3 = d * n * n;
            break;
        case CountVariant::Symmetry:
            if (spec.scheme != Scheme::SharedQKV) {
                throw OracleError(OracleError::Kind::VariantSchemeMismatch, "symmetry counts need the shared scheme");
            }
            // Even n also computes the self-transposed n/2 diagonal in full.
            c.macs_p1 = n % 2 ? d * n * (n + 1) / 2 : d * n * (n + 2) / 2;
            c.eacs = n * n;
            c.divs = n * n;
            c.macs_p3 = d * n * n;
            break;
        case CountVariant::Mask:
            if (spec.scheme != Scheme::Masked) {
                throw OracleError(OracleError::Kind::VariantSchemeMismatch, "mask counts need the masked scheme");
            }
            c.macs_p1 = d * n * (n + 1) / 2;
            c.eacs = n * (n + 1) / 2;
            c.divs = n * (n + 1) / 2;
            c.macs_p3 = d * n * (n + 1) / 2;
            break;
    }
    c.total = c.macs_p1 + c.eacs + c.divs + c.macs_p3;
    return c;
}

CyclePrediction predict_cycles(int algo, std::uint64_t n, std::uint64_t m) {
    if (m == 0 || n % m != 0) {
        throw OracleError(OracleError::Kind::Indivisible, "m must divide n");
    }
    const std::uint64_t sq = n * n / m;  // n^2 / m, exact since m | n
    const std::uint64_t groups = n % 2 ? (n + 1) / 2 : n / 2 + 1;
    switch (algo) {
        case 1: return {2 * n * sq + 2 * sq, false};
        case 2: return {groups * sq + 2 * sq + n * sq, true};
        case 3: return {2 * groups * sq + 2 * sq, false};
        default: throw std::invalid_argument("algo must be 1, 2 or 3");
    }
}

}  // namespace ringattn
