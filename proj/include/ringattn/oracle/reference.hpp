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
 * @file reference.hpp
 * @brief Golden model of the three attention phases and closed-form counts.
 *
 *   phase 1:  w'_ij = sum_l q_i[l] * k_j[l]
 *   phase 2:  w_ij  = exp(w'_ij) / sum_{j in J(i)} exp(w'_ij)
 *   phase 3:  y_i   = sum_{j in J(i)} w_ij * v_j
 *
 * J(i) is 1..n, or 1..i under the masked scheme. The softmax is evaluated
 * without max subtraction, as the machine does it.
 */

#pragma once

#include <cstdint>
#include <filesystem>
#include <stdexcept>
#include <vector>

#include "json.hpp"
#include "ringattn/core/model.hpp"

namespace ringattn {

/// Dense row-major matrix, 1-based accessors to match the data ids.
struct Matrix {
    int rows = 0;
    int cols = 0;
    std::vector<double> data;

    Matrix() = default;
    Matrix(int r, int c, double fill = 0.0)
        : rows(r), cols(c), data(static_cast<std::size_t>(r) * static_cast<std::size_t>(c), fill) {}

    double& operator()(int i, int j) { return data[index(i, j)]; }
    double operator()(int i, int j) const { return data[index(i, j)]; }

    bool operator==(const Matrix&) const = default;

private:
    std::size_t index(int i, int j) const {
        return static_cast<std::size_t>(i - 1) * static_cast<std::size_t>(cols) + static_cast<std::size_t>(j - 1);
    }
};

class OracleError : public std::invalid_argument {
public:
    enum class Kind { ShapeMismatch, VariantSchemeMismatch, Indivisible };
    OracleError(Kind kind, const std::string& what) : std::invalid_argument(what), kind_(kind) {}
    Kind kind() const noexcept { return kind_; }

private:
    Kind kind_;
};

struct OracleResult {
    Matrix raw_w;                 ///< n x n
    std::vector<double> exp_sums; ///< n softmax denominators
    Matrix norm_w;                ///< n x n, masked entries 0
    Matrix outputs;               ///< n x d
};

/// Inputs of one instance. Under the shared scheme q, k and v are the same matrix.
struct AttentionInputs {
    Matrix q, k, v;
};

/// True when (i, j) contributes under the scheme.
inline bool unmasked(Scheme scheme, int i, int j) { return scheme != Scheme::Masked || j <= i; }

OracleResult reference_attention(const ProblemSpec& spec, const Matrix& q, const Matrix& k, const Matrix& v);
inline OracleResult reference_attention(const ProblemSpec& spec, const AttentionInputs& in) {
    return reference_attention(spec, in.q, in.k, in.v);
}

/// Value of an input element as seen by the machine.
double input_value(const AttentionInputs& in, const DataId& elem);

/**
 * Uniform inputs in [-1, 1] from std::mt19937_64 seeded with @p seed.
 * Each draw is u = (next() >> 11) * 2^-53 and the value is 2u - 1. Matrices
 * are filled row-major in the order q, k, v; the shared scheme draws one
 * matrix and uses it for all three roles.
 */
AttentionInputs random_inputs(const ProblemSpec& spec, std::uint64_t seed);

nlohmann::json inputs_to_json(const AttentionInputs& in);
AttentionInputs inputs_from_json(const ProblemSpec& spec, const nlohmann::json& j);
nlohmann::json oracle_to_json(const ProblemSpec& spec, const AttentionInputs& in, const OracleResult& r);

// ---------------------------------------------------------------------------
// Closed forms
// ---------------------------------------------------------------------------

enum class CountVariant { Baseline, Symmetry, Mask };

struct ComputationCounts {
    std::uint64_t macs_p1 = 0;
    std::uint64_t eacs = 0;
    std::uint64_t divs = 0;
    std::uint64_t macs_p3 = 0;
    std::uint64_t total = 0;

    bool operator==(const ComputationCounts&) const = default;
};

/// Operation counts. Symmetry requires the shared scheme, Mask the masked one.
ComputationCounts computation_counts(const ProblemSpec& spec, CountVariant variant);

struct CyclePrediction {
    std::uint64_t cycles = 0;
    /// Set for algorithm 2: the value excludes the reuse-transfer overhead.
    bool lower_bound = false;
};

/**
 * Closed-form cycle counts.
 *   algo 1: 2n^3/m + 2n^2/m
 *   algo 2: g*n^2/m + 2n^2/m + n^3/m, g = (n+1)/2 (odd n) or n/2+1 (even n)
 *   algo 3: n^2(n+1)/m + 2n^2/m (odd n) or n^2(n+2)/m + 2n^2/m (even n)
 * Throws OracleError(Indivisible) unless m | n.
 */
CyclePrediction predict_cycles(int algo, std::uint64_t n, std::uint64_t m);

}  // namespace ringattn
