// Copyright 2026 The fis Authors. All rights reserved.
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
// http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include <cmath>
#include <stdexcept>
#include <vector>

#include <catch2/catch_amalgamated.hpp>

#include "fis/embedding.hpp"

using namespace fis;

namespace {

EmbeddingTable small_table(uint64_t seed = 1, int d = 4) {
  FieldSchema s = FieldSchema::one_hot({3, 5});
  EmbeddingTable t;
  Rng rng(seed, "init-emb");
  t.init(s, d, rng);
  return t;
}

Instance inst(const std::vector<std::vector<int32_t>>& indices, int label = 0) {
  Instance x;
  x.label = label;
  x.indices = indices;
  return x;
}

}  // namespace

TEST_CASE("embedding init has approximately 1/d variance", "[embedding]") {
  FieldSchema s = FieldSchema::one_hot({2000});
  EmbeddingTable t;
  Rng rng(3, "init-emb");
  t.init(s, 16, rng);
  double sum = 0.0, sq = 0.0;
  const auto& vals = t.fields[0];
  for (double v : vals) {
    sum += v;
    sq += v * v;
  }
  const double n = static_cast<double>(vals.size());
  const double mean = sum / n;
  const double var = sq / n - mean * mean;
  REQUIRE(std::abs(mean) < 0.01);
  REQUIRE(var == Catch::Approx(1.0 / 16.0).margin(0.005));
}

TEST_CASE("embedding init is deterministic and seed-sensitive", "[embedding]") {
  EmbeddingTable a = small_table(7);
  EmbeddingTable b = small_table(7);
  EmbeddingTable c = small_table(8);
  REQUIRE(a.fields == b.fields);
  REQUIRE(a.fields != c.fields);
}

TEST_CASE("one-hot embed returns the row bitwise", "[embedding]") {
  EmbeddingTable t = small_table();
  EmbeddedInstance e = embed(inst({{2}, {4}}), t, Reduce::kSum);
  std::span<const double> r0 = t.row(0, 2);
  std::span<const double> r1 = t.row(1, 4);
  for (int k = 0; k < t.d; ++k) {
    REQUIRE(e.e[0][k] == r0[k]);
    REQUIRE(e.e[1][k] == r1[k]);
  }
}

TEST_CASE("multi-hot SUM adds rows, AVERAGE divides by the active count", "[embedding]") {
  EmbeddingTable t = small_table();
  Instance x = inst({{0}, {1, 3}});

  EmbeddedInstance sum = embed(x, t, Reduce::kSum);
  EmbeddedInstance avg = embed(x, t, Reduce::kAverage);
  std::span<const double> a = t.row(1, 1);
  std::span<const double> b = t.row(1, 3);
  for (int k = 0; k < t.d; ++k) {
    REQUIRE(sum.e[1][k] == Catch::Approx(a[k] + b[k]).epsilon(1e-15));
    REQUIRE(avg.e[1][k] == Catch::Approx((a[k] + b[k]) / 2.0).epsilon(1e-15));
  }
}

TEST_CASE("three active rows reduce like the loop oracle", "[embedding]") {
  EmbeddingTable t = small_table(5);
  Instance x = inst({{1}, {0, 2, 4}});
  EmbeddedInstance got = embed(x, t, Reduce::kSum);
  for (int k = 0; k < t.d; ++k) {
    double expect = 0.0;
    for (int32_t idx : {0, 2, 4}) expect += t.row(1, idx)[k];
    REQUIRE(got.e[1][k] == Catch::Approx(expect).epsilon(1e-15));
  }
}

TEST_CASE("embed rejects out-of-range and empty indices", "[embedding]") {
  EmbeddingTable t = small_table();
  REQUIRE_THROWS_AS(embed(inst({{3}, {0}}), t, Reduce::kSum), std::out_of_range);
  REQUIRE_THROWS_AS(embed(inst({{-1}, {0}}), t, Reduce::kSum), std::out_of_range);
  REQUIRE_THROWS_AS(embed(inst({{}, {0}}), t, Reduce::kSum), std::invalid_argument);
}

TEST_CASE("batched embedding equals per-instance embedding", "[embedding]") {
  EmbeddingTable t = small_table(9);
  Dataset d;
  d.schema = FieldSchema::one_hot({3, 5});
  d.schema.multi_hot = {0, 1};
  d.instances = {inst({{0}, {1, 2}}), inst({{2}, {4}}), inst({{1}, {0, 3, 4}})};
  MiniBatch mb = full_batch(d);
  BatchEmbed be = embed_batch(mb, t, Reduce::kAverage);
  REQUIRE(be.B == 3);
  for (int b = 0; b < 3; ++b) {
    EmbeddedInstance single = embed(d.instances[b], t, Reduce::kAverage);
    for (int f = 0; f < 2; ++f) {
      std::span<const double> got = be.at(b, f);
      for (int k = 0; k < t.d; ++k) REQUIRE(got[k] == single.e[f][k]);
    }
  }
}

TEST_CASE("sparse gradients only touch active rows", "[embedding]") {
  SparseRowGrad g(3);
  std::vector<double> up = {1.0, 2.0, 3.0};
  accumulate_embed_grad({2}, Reduce::kSum, up, g);
  REQUIRE(g.rows.size() == 1);
  REQUIRE(g.find(2) != nullptr);
  REQUIRE(g.find(0) == nullptr);
  REQUIRE(g.find(2)[1] == 2.0);
}

TEST_CASE("AVERAGE backward splits the gradient across active rows", "[embedding]") {
  SparseRowGrad g(2);
  std::vector<double> up = {1.0, -4.0};
  accumulate_embed_grad({1, 3}, Reduce::kAverage, up, g);
  REQUIRE(g.find(1)[0] == 0.5);
  REQUIRE(g.find(1)[1] == -2.0);
  REQUIRE(g.find(3)[0] == 0.5);
  // SUM keeps the full gradient per row.
  SparseRowGrad h(2);
  accumulate_embed_grad({1, 3}, Reduce::kSum, up, h);
  REQUIRE(h.find(1)[0] == 1.0);
  REQUIRE(h.find(3)[1] == -4.0);
}

TEST_CASE("repeated rows accumulate rather than overwrite", "[embedding]") {
  SparseRowGrad g(1);
  std::vector<double> one = {1.0};
  accumulate_embed_grad({0}, Reduce::kSum, one, g);
  accumulate_embed_grad({0}, Reduce::kSum, one, g);
  REQUIRE(g.rows.size() == 1);
  REQUIRE(g.find(0)[0] == 2.0);
}

TEST_CASE("embedding gradient matches finite differences", "[embedding]") {
  // Scalar objective: L = sum of squares of the reduced embedding.
  EmbeddingTable t = small_table(11, 3);
  Instance x = inst({{1}, {2, 4}});
  const Reduce reduce = Reduce::kAverage;

  auto loss = [&]() {
    EmbeddedInstance e = embed(x, t, reduce);
    double total = 0.0;
    for (const auto& vec : e.e)
      for (double v : vec) total += v * v;
    return 0.5 * total;
  };

  // Analytic: dL/de = e, pushed through accumulate_embed_grad.
  EmbeddedInstance e = embed(x, t, reduce);
  std::vector<SparseRowGrad> grads(2, SparseRowGrad(3));
  for (int f = 0; f < 2; ++f) {
    accumulate_embed_grad(x.indices[f], reduce, e.e[f], grads[f]);
  }

  const double h = 1e-6;
  for (int f = 0; f < 2; ++f) {
    for (int32_t idx = 0; idx < t.cardinalities[f]; ++idx) {
      for (int k = 0; k < t.d; ++k) {
        double& slot = t.fields[f][static_cast<size_t>(idx) * t.d + k];
        const double keep = slot;
        slot = keep + h;
        const double up = loss();
        slot = keep - h;
        const double down = loss();
        slot = keep;
        const double fd = (up - down) / (2.0 * h);
        const double* row = grads[f].find(idx);
        const double analytic = row == nullptr ? 0.0 : row[k];
        REQUIRE(analytic == Catch::Approx(fd).margin(1e-6));
      }
    }
  }
}

TEST_CASE("linear term is a straight sum over active weights", "[embedding]") {
  FieldSchema s = FieldSchema::one_hot({3, 4});
  s.multi_hot = {0, 1};
  LinearParams lin;
  lin.init(s);
  lin.bias = 0.25;
  lin.fields[0] = {1.0, 2.0, 3.0};
  lin.fields[1] = {10.0, 20.0, 30.0, 40.0};
  Instance x = inst({{2}, {0, 3}});
  // Multi-hot linear weights are summed even under AVERAGE embedding reduce.
  REQUIRE(linear_term(x, lin) == Catch::Approx(0.25 + 3.0 + 10.0 + 40.0).epsilon(1e-15));
}

TEST_CASE("linear backward accumulates per active index and bias", "[embedding]") {
  std::vector<SparseRowGrad> grads;
  grads.emplace_back(1);
  grads.emplace_back(1);
  double dbias = 0.0;
  Instance x = inst({{1}, {0, 2}});
  linear_backward(x, 0.5, grads, dbias);
  linear_backward(x, 0.25, grads, dbias);
  REQUIRE(dbias == 0.75);
  REQUIRE(grads[0].find(1)[0] == 0.75);
  REQUIRE(grads[1].find(0)[0] == 0.75);
  REQUIRE(grads[1].find(2)[0] == 0.75);
  REQUIRE(grads[1].find(1) == nullptr);
}
