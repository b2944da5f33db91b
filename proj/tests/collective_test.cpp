/*
 * Copyright 2026 The xfersched Authors
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

#include <gtest/gtest.h>

#include "test_support.hpp"

namespace xfersched {
namespace {

constexpr double kMB = 1024.0 * 1024.0;

std::vector<std::pair<double, double>> stages_of(Pattern p, int workers, double d) {
  std::vector<std::pair<double, double>> out;
  for (const auto& s : stage_plan({p, workers, d, 1}).stages) out.emplace_back(s.transfer_bytes, s.reduce_bytes);
  return out;
}

TEST(StagePlan, RingFourWorkers) {
  const auto s = stages_of(Pattern::Ring, 4, 4 * kMB);
  using V = std::vector<std::pair<double, double>>;
  EXPECT_EQ(s, (V{{kMB, kMB}, {kMB, kMB}, {kMB, kMB}, {kMB, 0}, {kMB, 0}, {kMB, 0}}));
}

TEST(StagePlan, HalvingDoublingFourWorkers) {
  const auto s = stages_of(Pattern::HalvingDoubling, 4, 4 * kMB);
  using V = std::vector<std::pair<double, double>>;
  EXPECT_EQ(s, (V{{2 * kMB, 2 * kMB}, {kMB, kMB}, {kMB, 0}, {2 * kMB, 0}}));
}

TEST(StagePlan, ShuffleTwoWorkers) {
  const auto s = stages_of(Pattern::Shuffle, 2, 4 * kMB);
  using V = std::vector<std::pair<double, double>>;
  EXPECT_EQ(s, (V{{2 * kMB, 2 * kMB}, {2 * kMB, 0}}));
}

TEST(StagePlan, AllreduceByteAccounting) {
  // Each worker reduces its 1/p share against p-1 peers and then receives
  // the p-1 shares it does not own: reduce-side and gather-side volume are
  // both d(p-1)/p.
  const double d = 3 * kMB;
  for (auto pattern : {Pattern::Ring, Pattern::HalvingDoubling, Pattern::Shuffle}) {
    for (int p : {2, 4, 8, 16}) {
      double reduced = 0, gathered = 0;
      for (const auto& st : stage_plan({pattern, p, d, 1}).stages) {
        if (st.reduce_bytes > 0) {
          EXPECT_EQ(st.reduce_bytes, st.transfer_bytes);
          reduced += st.reduce_bytes;
        } else {
          gathered += st.transfer_bytes;
        }
      }
      EXPECT_NEAR(reduced, d * (p - 1) / p, 1e-6) << to_string(pattern) << " p=" << p;
      EXPECT_NEAR(gathered, d * (p - 1) / p, 1e-6) << to_string(pattern) << " p=" << p;
    }
  }
}

TEST(StagePlan, RejectsUnsupportedSpecs) {
  auto code_of = [](const CollectiveSpec& s) {
    try {
      stage_plan(s);
    } catch (const Error& e) {
      return e.code();
    }
    return ErrorCode::Io;
  };
  EXPECT_EQ(code_of({Pattern::HalvingDoubling, 6, 100, 1}), ErrorCode::UnsupportedWorkerCount);
  EXPECT_EQ(code_of({Pattern::Ring, 1, 100, 1}), ErrorCode::UnsupportedWorkerCount);
  EXPECT_EQ(code_of({Pattern::Ring, 4, 100, 0}), ErrorCode::InvalidArgument);
  EXPECT_EQ(code_of({Pattern::Ring, 4, 100, 9}), ErrorCode::InvalidArgument);
  EXPECT_NO_THROW(stage_plan({Pattern::Ring, 6, 100, 1}));
}

TEST(CollectiveTime, DepthOneIsASerialSum) {
  const NetworkModel net{1000, 0.001};
  const ReduceModel red{300, 500};
  const double d = 4 * kMB;
  const double half = d / 2;
  const double expected = (1000 + 0.001 * half) + (half / 300 + 500) + (1000 + 0.001 * half);
  EXPECT_NEAR(collective_time({Pattern::Shuffle, 2, d, 1}, net, red), expected, 1e-9);
}

TEST(CollectiveTime, TwoChunksPipelineReduceWithTransfer) {
  // a=0, b=0.001, no fixed reduce cost, d=1e6, p=2: per chunk transfer
  // t=250 and reduce r=2500/3. Hand schedule: net c0 [0,t], c1 [t,2t];
  // reduce c0 [t,t+r], c1 [t+r,t+2r]; gather c0 [t+r,2t+r], c1
  // [t+2r,2t+2r]. Depth 1 is 2*500 + 5000/3.
  const NetworkModel net{0, 0.001};
  const ReduceModel red{300, 0};
  const double t = 250, r = 2500.0 / 3;
  const double d1 = collective_time({Pattern::Shuffle, 2, 1e6, 1}, net, red);
  const double d2 = collective_time({Pattern::Shuffle, 2, 1e6, 2}, net, red);
  EXPECT_NEAR(d1, 1000 + 5000.0 / 3, 1e-9);
  EXPECT_NEAR(d2, 2 * t + 2 * r, 1e-9);
  EXPECT_LT(d2, d1);
}

TEST(CollectiveTime, SmallDataWithLatencyPrefersShallowPipelines) {
  const NetworkModel net{1000, 0.001};
  for (auto p : {Pattern::Ring, Pattern::HalvingDoubling, Pattern::Shuffle})
    EXPECT_GT(collective_time({p, 8, 4096, 8}, net, {}), collective_time({p, 8, 4096, 1}, net, {}));
}

// "No latency" covers both fixed costs: the network intercept and the
// per-reduce overhead, which is paid once per chunk just like latency.
TEST(CollectiveTime, NonIncreasingInDepthWithoutFixedCosts) {
  std::mt19937_64 rng(17);
  std::uniform_real_distribution<double> log_b(std::log(1e-5), std::log(1e-1)), log_d(std::log(1e3), std::log(1e9));
  std::uniform_real_distribution<double> rate(10, 5000);
  const Pattern patterns[] = {Pattern::Ring, Pattern::HalvingDoubling, Pattern::Shuffle};
  const int workers[] = {2, 4, 8, 16};
  for (int trial = 0; trial < 300; ++trial) {
    const NetworkModel net{0, std::exp(log_b(rng))};
    const ReduceModel red{rate(rng), 0.0};
    const Pattern pat = patterns[trial % 3];
    const int p = workers[(trial / 3) % 4];
    const double d = std::exp(log_d(rng));
    double prev = std::numeric_limits<double>::infinity();
    for (int k = 1; k <= kMaxDepth; ++k) {
      const double t = collective_time({pat, p, d, k}, net, red);
      ASSERT_LE(t, prev * (1 + 1e-12)) << to_string(pat) << " p=" << p << " d=" << d << " k=" << k;
      prev = t;
    }
  }
}

TEST(CollectiveTime, ReduceOverheadAloneCanMakeDeeperPipelinesSlower) {
  const NetworkModel net{0, 0.001};
  const ReduceModel red{300, 500};
  EXPECT_GT(collective_time({Pattern::Shuffle, 8, 65536, 8}, net, red),
            collective_time({Pattern::Shuffle, 8, 65536, 1}, net, red));
}

TEST(CollectiveTime, NonDecreasingInDepthWhenLatencyOnly) {
  std::mt19937_64 rng(18);
  std::uniform_real_distribution<double> a(1, 5000), log_d(std::log(1e3), std::log(1e9));
  for (int trial = 0; trial < 200; ++trial) {
    const NetworkModel net{a(rng), 0};
    const ReduceModel red{1e300, 0};
    const Pattern pat = trial % 2 ? Pattern::Ring : Pattern::Shuffle;
    const double d = std::exp(log_d(rng));
    double prev = 0;
    for (int k = 1; k <= kMaxDepth; ++k) {
      const double t = collective_time({pat, 4, d, k}, net, red);
      ASSERT_GE(t, prev * (1 - 1e-12));
      prev = t;
    }
  }
}

TEST(AdaptiveDepth, DecisionFunction) {
  EXPECT_EQ(adaptive_depth(0, 1000), 1);
  EXPECT_EQ(adaptive_depth(1000, 1000), 1);
  EXPECT_EQ(adaptive_depth(1001, 1000), 2);
  EXPECT_EQ(adaptive_depth(2500, 1000), 3);
  EXPECT_EQ(adaptive_depth(8000, 1000), 8);
  EXPECT_EQ(adaptive_depth(1'000'000, 1000), 8);
  EXPECT_THROW(adaptive_depth(10, 0), Error);
}

TEST(AdaptiveDepth, WithinTenPercentOfBestFixedDepthForDefaultModel) {
  const NetworkModel net{1000, 0.001};
  const auto th = batching_threshold(net);
  for (int i = 0; i <= 14; ++i) {
    const double d = 4096.0 * (1 << i);
    double best = std::numeric_limits<double>::infinity();
    for (int k : {1, 2, 4, 8}) best = std::min(best, collective_time({Pattern::Shuffle, 8, d, k}, net, {}));
    const double adaptive = collective_time({Pattern::Shuffle, 8, d, adaptive_depth(static_cast<std::int64_t>(d), th)},
                                            net, {});
    EXPECT_LE(adaptive, 1.10 * best) << d;
  }
}

TEST(AdaptiveDepth, KnownLimitationRuleIgnoresReduceOverhead) {
  // The size/threshold rule looks only at the network model. With low
  // latency the threshold is small, so mid-sized data gets deep pipelines
  // and pays the per-chunk reduce overhead many times.
  const NetworkModel net{22, 0.005};
  const double d = 65536;
  const int k = adaptive_depth(static_cast<std::int64_t>(d), batching_threshold(net));
  EXPECT_EQ(k, 8);
  const double adaptive = collective_time({Pattern::Shuffle, 8, d, k}, net, {});
  const double depth1 = collective_time({Pattern::Shuffle, 8, d, 1}, net, {});
  EXPECT_GT(adaptive, 1.10 * depth1);
}

TEST(DepthPolicy, Parsing) {
  EXPECT_EQ(parse_depth_policy("adaptive"), DepthPolicy::adaptive_policy());
  EXPECT_EQ(parse_depth_policy("fixed:4"), DepthPolicy::fixed(4));
  EXPECT_EQ(parse_depth_policy("2"), DepthPolicy::fixed(2));
  for (const char* bad : {"fixed:0", "fixed:9", "fixed:", "deep", "3x"}) EXPECT_THROW(parse_depth_policy(bad), Error);
  EXPECT_EQ(DepthPolicy::fixed(4).to_string(), "fixed:4");
  EXPECT_EQ(parse_pattern("hd"), Pattern::HalvingDoubling);
  EXPECT_THROW(parse_pattern("tree"), Error);
}

}  // namespace
}  // namespace xfersched
