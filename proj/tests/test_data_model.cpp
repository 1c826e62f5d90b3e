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

#include <set>
#include <stdexcept>
#include <string>
#include <vector>

#include <catch2/catch_amalgamated.hpp>

#include "fis/data_model.hpp"

using namespace fis;

namespace {

// Independent count: explicit nested loops instead of the closed form.
int64_t brute_pairs(int m) {
  int64_t n = 0;
  for (int i = 0; i < m; ++i)
    for (int j = i + 1; j < m; ++j) ++n;
  return n;
}

int64_t brute_triples(int m) {
  int64_t n = 0;
  for (int i = 0; i < m; ++i)
    for (int j = i + 1; j < m; ++j)
      for (int t = j + 1; t < m; ++t) ++n;
  return n;
}

}  // namespace

TEST_CASE("schema validation rejects malformed shapes", "[data_model]") {
  FieldSchema s;
  s.field_count = 1;
  s.cardinalities = {3};
  s.multi_hot = {0};
  REQUIRE_THROWS_AS(s.validate(), std::invalid_argument);

  s = FieldSchema::one_hot({3, 4});
  REQUIRE_NOTHROW(s.validate());
  s.cardinalities = {3};
  REQUIRE_THROWS_AS(s.validate(), std::invalid_argument);

  s = FieldSchema::one_hot({3, 0});
  REQUIRE_THROWS_AS(s.validate(), std::invalid_argument);
}

TEST_CASE("schema fingerprint is stable and component-sensitive", "[data_model]") {
  FieldSchema a = FieldSchema::one_hot({3, 4, 5});
  FieldSchema b = FieldSchema::one_hot({3, 4, 5});
  REQUIRE(a.fingerprint() == b.fingerprint());

  FieldSchema c = FieldSchema::one_hot({3, 4, 6});
  REQUIRE(a.fingerprint() != c.fingerprint());

  FieldSchema d = a;
  d.multi_hot = {0, 1, 0};
  REQUIRE(a.fingerprint() != d.fingerprint());

  FieldSchema e = a;
  e.multi_hot_reduce = Reduce::kAverage;
  REQUIRE(a.fingerprint() != e.fingerprint());
}

TEST_CASE("pair enumeration is lexicographic and complete", "[data_model]") {
  const auto pairs = enumerate_interactions(4, Order::kPair);
  REQUIRE(pairs.size() == 6);
  REQUIRE(pairs[0] == pair_id(0, 1));
  REQUIRE(pairs[1] == pair_id(0, 2));
  REQUIRE(pairs[2] == pair_id(0, 3));
  REQUIRE(pairs[3] == pair_id(1, 2));
  REQUIRE(pairs[4] == pair_id(1, 3));
  REQUIRE(pairs[5] == pair_id(2, 3));
}

TEST_CASE("triple enumeration for m=6 lists 20 increasing ids", "[data_model]") {
  const auto triples = enumerate_interactions(6, Order::kTriple);
  REQUIRE(triples.size() == 20);
  REQUIRE(triples.front() == triple_id(0, 1, 2));
  REQUIRE(triples.back() == triple_id(3, 4, 5));
  std::set<std::string> unique;
  for (const auto& id : triples) {
    REQUIRE(id.i < id.j);
    REQUIRE(id.j < id.t);
    REQUIRE(id.t < 6);
    unique.insert(id.str());
  }
  REQUIRE(unique.size() == triples.size());
}

TEST_CASE("enumeration counts match loop oracles for m <= 10", "[data_model]") {
  for (int m = 2; m <= 10; ++m) {
    REQUIRE(static_cast<int64_t>(enumerate_interactions(m, Order::kPair).size()) ==
            brute_pairs(m));
    REQUIRE(pair_count(m) == brute_pairs(m));
    if (m >= 3) {
      REQUIRE(static_cast<int64_t>(enumerate_interactions(m, Order::kTriple).size()) ==
              brute_triples(m));
    }
    REQUIRE(triple_count(m) == brute_triples(m));
  }
  REQUIRE_THROWS_AS(enumerate_interactions(1, Order::kPair), std::invalid_argument);
}

TEST_CASE("pair_index agrees with the enumeration order", "[data_model]") {
  for (int m = 2; m <= 10; ++m) {
    const auto pairs = enumerate_interactions(m, Order::kPair);
    for (size_t k = 0; k < pairs.size(); ++k) {
      REQUIRE(pair_index(m, pairs[k].i, pairs[k].j) == static_cast<int>(k));
    }
  }
}

TEST_CASE("interaction ids format as comma lists", "[data_model]") {
  REQUIRE(pair_id(0, 3).str() == "0,3");
  REQUIRE(triple_id(1, 2, 5).str() == "1,2,5");
}

TEST_CASE("instance validation enforces the schema", "[data_model]") {
  FieldSchema s = FieldSchema::one_hot({3, 4});

  Instance ok;
  ok.label = 1;
  ok.indices = {{2}, {0}};
  REQUIRE_NOTHROW(validate_instance(ok, s));

  Instance bad_label = ok;
  bad_label.label = 2;
  REQUIRE_THROWS_AS(validate_instance(bad_label, s), std::invalid_argument);

  Instance wrong_fields = ok;
  wrong_fields.indices = {{2}};
  REQUIRE_THROWS_AS(validate_instance(wrong_fields, s), std::invalid_argument);

  Instance out_of_range = ok;
  out_of_range.indices = {{3}, {0}};
  REQUIRE_THROWS_AS(validate_instance(out_of_range, s), std::out_of_range);

  Instance multi_on_one_hot = ok;
  multi_on_one_hot.indices = {{0, 1}, {0}};
  REQUIRE_THROWS_AS(validate_instance(multi_on_one_hot, s), std::invalid_argument);

  Instance empty_field = ok;
  empty_field.indices = {{}, {0}};
  REQUIRE_THROWS_AS(validate_instance(empty_field, s), std::invalid_argument);
}

TEST_CASE("multi-hot fields accept several indices", "[data_model]") {
  FieldSchema s = FieldSchema::one_hot({3, 4});
  s.multi_hot = {0, 1};
  Instance x;
  x.label = 0;
  x.indices = {{1}, {0, 2, 3}};
  REQUIRE_NOTHROW(validate_instance(x, s));
}

TEST_CASE("full_batch covers the dataset in order", "[data_model]") {
  Dataset d;
  d.schema = FieldSchema::one_hot({2, 2});
  for (int k = 0; k < 5; ++k) {
    Instance x;
    x.label = k % 2;
    x.indices = {{k % 2}, {(k + 1) % 2}};
    d.instances.push_back(x);
  }
  MiniBatch mb = full_batch(d);
  REQUIRE(mb.size() == 5);
  for (int b = 0; b < 5; ++b) {
    REQUIRE(mb.at(b).label == b % 2);
  }
}
