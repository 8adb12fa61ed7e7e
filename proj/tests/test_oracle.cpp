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

#include <cmath>
#include <limits>

#include "doctest.h"
#include "ringattn/oracle/reference.hpp"
#include "ringattn/sim/simulator.hpp"

using namespace ringattn;

namespace {

// Independent check: long double, -inf masking and max-shifted softmax.
Matrix brute_outputs(const ProblemSpec& spec, const AttentionInputs& in) {
    const int n = spec.n, d = spec.d;
    Matrix y(n, d);
    for (int i = 1; i <= n; ++i) {
        std::vector<long double> logits(static_cast<std::size_t>(n));
        long double peak = -std::numeric_limits<long double>::infinity();
        for (int j = 1; j <= n; ++j) {
            long double dot = 0;
            for (int l = 1; l <= d; ++l) dot += static_cast<long double>(in.q(i, l)) * in.k(j, l);
            if (spec.scheme == Scheme::Masked && j > i) dot = -std::numeric_limits<long double>::infinity();
            logits[static_cast<std::size_t>(j - 1)] = dot;
            peak = std::max(peak, dot);
        }
        long double total = 0;
        for (auto& z : logits) total += (z = std::exp(z - peak));
        for (int l = 1; l <= d; ++l) {
            long double acc = 0;
            for (int j = 1; j <= n; ++j) acc += logits[static_cast<std::size_t>(j - 1)] / total * in.v(j, l);
            y(i, l) = static_cast<double>(acc);
        }
    }
    return y;
}

AttentionInputs zeros(int n) { return {Matrix(n, n), Matrix(n, n), Matrix(n, n)}; }

}  // namespace

TEST_CASE("zero inputs give a uniform softmax") {
    const auto spec = validate_spec(3, 3, 3, Scheme::Distinct);
    const auto r = reference_attention(spec, zeros(3));
    for (int i = 1; i <= 3; ++i) {
        for (int j = 1; j <= 3; ++j) CHECK(r.norm_w(i, j) == doctest::Approx(1.0 / 3));
        for (int l = 1; l <= 3; ++l) CHECK(r.outputs(i, l) == 0.0);
    }
}

TEST_CASE("zero inputs under the mask average the prefix") {
    const auto spec = validate_spec(3, 3, 3, Scheme::Masked);
    const auto r = reference_attention(spec, zeros(3));
    for (int i = 1; i <= 3; ++i) {
        for (int j = 1; j <= 3; ++j) CHECK(r.norm_w(i, j) == doctest::Approx(j <= i ? 1.0 / i : 0.0));
        CHECK(r.exp_sums[static_cast<std::size_t>(i - 1)] == doctest::Approx(i));
    }
}

TEST_CASE("orthonormal shared inputs give the identity") {
    const auto spec = validate_spec(3, 3, 3, Scheme::SharedQKV);
    Matrix x(3, 3);
    for (int i = 1; i <= 3; ++i) x(i, i) = 1.0;
    const auto r = reference_attention(spec, x, x, x);
    for (int i = 1; i <= 3; ++i) {
        for (int j = 1; j <= 3; ++j) {
            CHECK(r.raw_w(i, j) == (i == j ? 1.0 : 0.0));
            CHECK(r.raw_w(i, j) == r.raw_w(j, i));
        }
    }
}

TEST_CASE("shape mismatch is rejected") {
    const auto spec = validate_spec(3, 3, 3, Scheme::Distinct);
    CHECK_THROWS_AS(reference_attention(spec, Matrix(3, 2), Matrix(3, 3), Matrix(3, 3)), OracleError);
}

TEST_CASE("random inputs match the independent implementation") {
    for (Scheme scheme : {Scheme::Distinct, Scheme::SharedQKV, Scheme::Masked}) {
        for (int n : {2, 3, 5, 8}) {
            const auto spec = validate_spec(n, n, 1, scheme);
            for (std::uint64_t seed = 1; seed <= 10; ++seed) {
                const auto in = random_inputs(spec, seed);
                const auto r = reference_attention(spec, in);
                const auto y = brute_outputs(spec, in);
                for (int i = 1; i <= n; ++i) {
                    for (int l = 1; l <= n; ++l) CHECK(relative_error(r.outputs(i, l), y(i, l)) <= 1e-12);
                }
            }
        }
    }
}

TEST_CASE("rows normalize and masked entries vanish") {
    for (Scheme scheme : {Scheme::Distinct, Scheme::SharedQKV, Scheme::Masked}) {
        const auto spec = validate_spec(7, 7, 7, scheme);
        const auto r = reference_attention(spec, random_inputs(spec, 42));
        for (int i = 1; i <= 7; ++i) {
            double row = 0.0;
            for (int j = 1; j <= 7; ++j) {
                row += r.norm_w(i, j);
                if (scheme == Scheme::Masked && j > i) CHECK(r.norm_w(i, j) == 0.0);
                if (scheme == Scheme::SharedQKV) CHECK(r.raw_w(i, j) == r.raw_w(j, i));
            }
            CHECK(std::fabs(row - 1.0) <= 1e-12);
        }
    }
}

TEST_CASE("random inputs are reproducible and in range") {
    const auto spec = validate_spec(4, 4, 2, Scheme::Distinct);
    const auto a = random_inputs(spec, 9);
    const auto b = random_inputs(spec, 9);
    CHECK(a.q == b.q);
    CHECK_FALSE(a.q == random_inputs(spec, 10).q);
    for (double x : a.v.data) {
        CHECK(x >= -1.0);
        CHECK(x < 1.0);
    }
    const auto shared = random_inputs(validate_spec(4, 4, 2, Scheme::SharedQKV), 9);
    CHECK(shared.q == shared.k);
    CHECK(shared.q == a.q);
}

TEST_CASE("inputs survive a JSON round trip") {
    const auto spec = validate_spec(3, 3, 3, Scheme::Distinct);
    const auto in = random_inputs(spec, 3);
    const auto back = inputs_from_json(spec, inputs_to_json(in));
    CHECK(back.q == in.q);
    CHECK(back.v == in.v);
}

TEST_CASE("operation counts") {
    const auto base = computation_counts(validate_spec(15, 15, 5, Scheme::Distinct), CountVariant::Baseline);
    CHECK(base.total == 7200);
    const auto sym = computation_counts(validate_spec(15, 15, 5, Scheme::SharedQKV), CountVariant::Symmetry);
    CHECK(sym.macs_p1 == 1800);
    CHECK(sym.total == 5625);
    const auto mask = computation_counts(validate_spec(15, 15, 5, Scheme::Masked), CountVariant::Mask);
    CHECK(mask.total == 3840);
    CHECK(mask.eacs == 120);
    const auto even = computation_counts(validate_spec(4, 4, 4, Scheme::SharedQKV), CountVariant::Symmetry);
    CHECK(even.macs_p1 == 48);
    CHECK_THROWS_AS(computation_counts(validate_spec(4, 4, 4, Scheme::Distinct), CountVariant::Mask), OracleError);
    CHECK_THROWS_AS(computation_counts(validate_spec(4, 4, 4, Scheme::Masked), CountVariant::Symmetry), OracleError);
}

TEST_CASE("closed-form cycle counts") {
    CHECK(predict_cycles(1, 15, 5).cycles == 1440);
    CHECK(predict_cycles(3, 10000, 5000).cycles == 200080000ULL);
    CHECK(predict_cycles(3, 6, 3).cycles == 120);
    const auto core = predict_cycles(2, 3, 3);
    CHECK(core.cycles == 21);
    CHECK(core.lower_bound);
    CHECK_THROWS_AS(predict_cycles(1, 6, 4), OracleError);
}
