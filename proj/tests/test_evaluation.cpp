// Copyright 2026 The MCLRec Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <set>

#include "fixtures.hpp"
#include "mclrec/evaluation.hpp"
#include "oracles.hpp"
#include "test_util.hpp"

namespace mclrec {
namespace {

Matrix row(std::initializer_list<double> values) {
  Matrix m(1, static_cast<Eigen::Index>(values.size()));
  Eigen::Index j = 0;
  for (double v : values) m(0, j++) = v;
  return m;
}

std::size_t rank_of(const Matrix& logits, ItemId target) {
  const ItemId t[] = {target};
  return rank_target(logits, t).at(0);
}

TEST(Rank, TopScoreIsRankOne) { EXPECT_EQ(rank_of(row({0.1, 2.0, -1.0}), 2), 1u); }

TEST(Rank, WorkedExample) { EXPECT_EQ(rank_of(row({0.3, 0.9, 0.5}), 3), 2u); }

TEST(Rank, TiesPlaceTargetLast) {
  EXPECT_EQ(rank_of(Matrix::Constant(1, 100, 0.7), 1), 100u);
  EXPECT_EQ(rank_of(row({1.0, 2.0, 2.0, 0.0}), 3), 2u);
}

TEST(Metrics, WorkedExamples) {
  const std::size_t ks[] = {20};
  const std::size_t third[] = {3};
  const auto m = compute_metrics(third, ks);
  EXPECT_EQ(m.hr.at(20), 1.0);
  EXPECT_EQ(m.ndcg.at(20), 0.5);
  const std::size_t outside[] = {21};
  const auto o = compute_metrics(outside, ks);
  EXPECT_EQ(o.hr.at(20), 0.0);
  EXPECT_EQ(o.ndcg.at(20), 0.0);
  const std::size_t first[] = {1};
  EXPECT_EQ(compute_metrics(first, ks).ndcg.at(20), 1.0);
}

TEST(Metrics, EmptyInputIsRejected) {
  const std::size_t ks[] = {5};
  EXPECT_THROW(compute_metrics(std::span<const std::size_t>{}, ks), std::invalid_argument);
}

TEST(Metrics, MatchesSortingOracle) {
  Rng rng(2024);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  const std::size_t items = 50, users = 10;
  Matrix logits(users, items);
  std::vector<ItemId> targets(users);
  for (std::size_t b = 0; b < users; ++b) {
    for (std::size_t j = 0; j < items; ++j) logits(b, j) = std::round(u(rng) * 8.0) / 8.0;  // force ties
    targets[b] = static_cast<ItemId>(1 + uniform_index(rng, items));
  }
  const auto ranks = rank_target(logits, targets);
  std::vector<std::size_t> expected;
  for (std::size_t b = 0; b < users; ++b) {
    std::vector<double> r(items);
    for (std::size_t j = 0; j < items; ++j) r[j] = logits(b, j);
    expected.push_back(oracle::sorted_rank(r, targets[b]));
  }
  EXPECT_EQ(ranks, expected);
  const std::size_t ks[] = {5, 10, 20};
  const auto m = compute_metrics(ranks, ks);
  for (std::size_t k : ks) {
    const auto o = oracle::topk(expected, k);
    EXPECT_NEAR(m.hr.at(k), o.hr, 1e-9) << k;
    EXPECT_NEAR(m.ndcg.at(k), o.ndcg, 1e-9) << k;
  }
}

TEST(Metrics, MonotoneInKAndOrderInvariant) {
  std::vector<std::size_t> ranks{1, 4, 9, 30, 2, 11, 7};
  const std::size_t ks[] = {1, 5, 10, 20, 50};
  const auto m = compute_metrics(ranks, ks);
  for (std::size_t i = 1; i < std::size(ks); ++i) {
    EXPECT_GE(m.hr.at(ks[i]), m.hr.at(ks[i - 1]));
    EXPECT_GE(m.ndcg.at(ks[i]), m.ndcg.at(ks[i - 1]));
    EXPECT_LE(m.ndcg.at(ks[i]), m.hr.at(ks[i]));
  }
  std::reverse(ranks.begin(), ranks.end());
  const auto r = compute_metrics(ranks, ks);
  for (std::size_t k : ks) {
    EXPECT_NEAR(r.hr.at(k), m.hr.at(k), 1e-12);
    EXPECT_NEAR(r.ndcg.at(k), m.ndcg.at(k), 1e-12);  // summation order only
  }
}

TEST(Metrics, MergeIsCountWeighted) {
  const std::size_t ks[] = {10};
  std::vector<std::size_t> all{1, 3, 12, 5, 40, 2, 2, 9};
  const std::span<const std::size_t> s(all);
  const RankingMetrics parts[] = {compute_metrics(s.first(3), ks), compute_metrics(s.subspan(3), ks)};
  const auto merged = merge_metrics(parts);
  const auto whole = compute_metrics(s, ks);
  EXPECT_EQ(merged.n_users, 8u);
  EXPECT_NEAR(merged.hr.at(10), whole.hr.at(10), 1e-15);
  EXPECT_NEAR(merged.ndcg.at(10), whole.ndcg.at(10), 1e-15);
}

TEST(Metrics, JsonRoundTrip) {
  const std::size_t ks[] = {5, 20};
  const std::size_t ranks[] = {1, 6, 30};
  const auto m = compute_metrics(ranks, ks);
  const auto back = RankingMetrics::from_json(m.to_json());
  EXPECT_EQ(back.hr, m.hr);
  EXPECT_EQ(back.ndcg, m.ndcg);
  EXPECT_EQ(back.n_users, 3u);
}

TEST(Evaluate, UntrainedModelIsNearChance) {
  const auto corpus = testing::tiny_corpus(400, 200, 5);
  const auto split = split_leave_one_out(corpus.sequences);
  auto cfg = testing::tiny_config();
  const auto state = TrainState::initialize(cfg, corpus.vocab.size);
  const auto m = evaluate(state.encoder, split.test, {});
  const double chance = 20.0 / static_cast<double>(corpus.vocab.size);
  EXPECT_LT(m.hr.at(20), 3.0 * chance);
  EXPECT_GT(m.hr.at(20), chance / 3.0);
}

TEST(Evaluate, DeterministicAndBatchSizeIndependent) {
  const auto corpus = testing::tiny_corpus();
  const auto split = split_leave_one_out(corpus.sequences);
  const auto state = TrainState::initialize(testing::tiny_config(), corpus.vocab.size);
  const auto a = evaluate_ranks(state.encoder, split.test, 256);
  const auto b = evaluate_ranks(state.encoder, split.test, 7);
  EXPECT_EQ(a, b);
  EXPECT_EQ(a, evaluate_ranks(state.encoder, split.test, 256));
}

TEST(Evaluate, ValidAndTestTargetsDiffer) {
  const auto corpus = testing::tiny_corpus();
  const auto split = split_leave_one_out(corpus.sequences);
  ASSERT_EQ(split.valid.size(), split.test.size());
  for (std::size_t i = 0; i < split.valid.size(); ++i) {
    EXPECT_EQ(split.test[i].input.back(), split.valid[i].target);
    EXPECT_EQ(split.test[i].input.size(), split.valid[i].input.size() + 1);
  }
}

ItemVocab vocab_of(std::size_t n) {
  ItemVocab v;
  v.size = n;
  for (std::size_t i = 1; i <= n; ++i) v.tokens.push_back("i" + std::to_string(i));
  return v;
}

TEST(Noise, ZeroRatioIsIdentity) {
  const std::vector<ItemId> items{1, 2, 3, 4, 5};
  Rng rng(1);
  EXPECT_EQ(inject_noise(items, 0.0, vocab_of(20), rng), items);
}

TEST(Noise, InsertsNegativesAndKeepsOrder) {
  const std::vector<ItemId> items{1, 2, 3, 4, 5};
  const auto vocab = vocab_of(20);
  for (std::uint64_t seed = 0; seed < 200; ++seed) {
    Rng rng(seed);
    const ItemId exclude[] = {6};
    const auto out = inject_noise(items, 0.2, vocab, rng, exclude);
    ASSERT_EQ(out.size(), 6u);
    std::vector<ItemId> kept;
    for (ItemId id : out) {
      if (id <= 5) {
        kept.push_back(id);
      } else {
        EXPECT_NE(id, 6u);
        EXPECT_LE(id, 20u);
      }
    }
    EXPECT_EQ(kept, items);
  }
}

TEST(Noise, CountRoundsUpAndInsertionsAreDistinct) {
  const std::vector<ItemId> items{1, 2, 3, 4, 5, 6, 7};
  Rng rng(4);
  const auto out = inject_noise(items, 0.3, vocab_of(40), rng);  // ceil(2.1) = 3
  EXPECT_EQ(out.size(), 10u);
  EXPECT_EQ(std::set<ItemId>(out.begin(), out.end()).size(), 10u);
}

TEST(Noise, ExhaustedVocabularyIsAnError) {
  const std::vector<ItemId> items{1, 2, 3, 4};
  Rng rng(1);
  EXPECT_THROW(inject_noise(items, 0.5, vocab_of(5), rng), std::runtime_error);
  EXPECT_THROW(inject_noise(items, 1.5, vocab_of(50), rng), std::invalid_argument);
}

TEST(Noise, LargerRatiosExtendSmallerOnes) {
  const std::vector<ItemId> items{1, 2, 3, 4, 5, 6, 7, 8, 9, 10};
  const auto vocab = vocab_of(100);
  std::vector<ItemId> prev = items;
  for (double ratio : {0.1, 0.2, 0.3, 0.4, 0.5}) {
    Rng rng(99);
    const auto out = inject_noise(items, ratio, vocab, rng);
    // prev must be a subsequence of out
    std::size_t j = 0;
    for (ItemId id : out) j += (j < prev.size() && prev[j] == id);
    EXPECT_EQ(j, prev.size()) << ratio;
    prev = out;
  }
}

TEST(Noise, ExampleStreamsDependOnUserNotPosition) {
  const auto vocab = vocab_of(60);
  std::vector<Example> ex{{0, {1, 2, 3, 4, 5}, 7}, {1, {5, 4, 3, 2, 1}, 8}, {2, {9, 10, 11}, 12}};
  const NoiseSpec spec{0.4, 17};
  const auto a = inject_noise(ex, spec, vocab);
  std::vector<Example> reversed(ex.rbegin(), ex.rend());
  const auto b = inject_noise(reversed, spec, vocab);
  for (std::size_t i = 0; i < ex.size(); ++i) {
    EXPECT_EQ(a[i].input, b[ex.size() - 1 - i].input);
    EXPECT_EQ(a[i].target, ex[i].target);
    EXPECT_EQ(std::count(a[i].input.begin(), a[i].input.end(), ex[i].target), 0);
  }
}

TEST(Groups, PartsRecombineToWholeSet) {
  const auto corpus = testing::tiny_corpus(200, 40, 8);
  const auto split = split_leave_one_out(corpus.sequences);
  const auto state = TrainState::initialize(testing::tiny_config(), corpus.vocab.size);
  const LengthRange bounds[] = {{0, 6}, {7, 8}, {9, std::nullopt}};
  std::map<LengthRange, std::vector<Example>> groups;
  for (const auto& ex : split.test) {
    for (const auto& r : bounds) {
      if (r.contains(ex.input.size() + 1)) groups[r].push_back(ex);
    }
  }
  const auto per = evaluate_groups(state.encoder, groups, {});
  std::vector<RankingMetrics> parts;
  std::size_t users = 0;
  for (const auto& [_, m] : per) {
    parts.push_back(m);
    users += m.n_users;
  }
  EXPECT_EQ(users, split.test.size());
  const auto merged = merge_metrics(parts);
  const auto whole = evaluate(state.encoder, split.test, {});
  for (const auto& [k, v] : whole.ndcg) EXPECT_NEAR(merged.ndcg.at(k), v, 1e-12);
  for (const auto& [k, v] : whole.hr) EXPECT_NEAR(merged.hr.at(k), v, 1e-12);
}

TEST(Groups, TableHasHeaderAndOneRowPerLabel) {
  const std::size_t ks[] = {5, 20};
  const std::size_t ranks[] = {1, 2};
  const auto m = compute_metrics(ranks, ks);
  const auto text = format_metrics_table({{"=5", m}, {"6-8", m}});
  EXPECT_EQ(std::count(text.begin(), text.end(), '\n'), 3);
  EXPECT_NE(text.find("HR@5"), std::string::npos);
  EXPECT_NE(text.find("NDCG@20"), std::string::npos);
  EXPECT_NE(text.find("6-8"), std::string::npos);
  EXPECT_NE(text.find("1.0000"), std::string::npos);
}

}  // namespace
}  // namespace mclrec
