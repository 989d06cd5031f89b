// Copyright 2026 The vfbandit Authors. All Rights Reserved.
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

#include <cmath>

#include "vfbandit/envs.hpp"
#include "vfbandit/tolerances.hpp"

namespace vfbandit {
namespace {

TEST(SyntheticEnv, ContextsAndThetaHaveUnitNorm) {
  SyntheticEnv env({30, 7}, Rng(4));
  EXPECT_NEAR(norm2(env.theta_star()), 1.0, kTolerances.unit_norm);
  for (int t = 0; t < 50; ++t) {
    const EnvRound r = env.synth_round();
    ASSERT_EQ(r.contexts.rows(), 7u);
    ASSERT_EQ(r.contexts.cols(), 30u);
    for (std::size_t a = 0; a < 7; ++a) ASSERT_NEAR(norm2(r.contexts.row_vector(a)), 1.0, kTolerances.unit_norm);
  }
}

TEST(SyntheticEnv, ExpectedRewardIsInnerProduct) {
  SyntheticEnv env({5, 3}, Rng(8));
  const EnvRound r = env.synth_round();
  for (std::size_t a = 0; a < 3; ++a) {
    EXPECT_DOUBLE_EQ(r.expected[a], dot(r.contexts.row_vector(a), env.theta_star()));
    EXPECT_DOUBLE_EQ(r.reward(a), r.expected[a] + r.noise);
  }
}

TEST(SyntheticEnv, NoiselessRewardIsExact) {
  SyntheticConfig cfg{6, 4};
  cfg.noise_sigma2 = 0.0;
  SyntheticEnv env(cfg, Rng(1));
  for (int t = 0; t < 10; ++t) {
    const EnvRound r = env.synth_round();
    for (std::size_t a = 0; a < 4; ++a) ASSERT_EQ(r.reward(a), dot(r.contexts.row_vector(a), env.theta_star()));
  }
}

TEST(SyntheticEnv, SingleArmHasNoRegret) {
  SyntheticEnv env({8, 1}, Rng(2));
  for (int t = 0; t < 20; ++t) ASSERT_EQ(env.synth_round().regret(0), 0.0);
}

TEST(SyntheticEnv, RegretIsGapToBest) {
  SyntheticEnv env({8, 5}, Rng(3));
  const EnvRound r = env.synth_round();
  const double best = *std::max_element(r.expected.begin(), r.expected.end());
  for (std::size_t a = 0; a < 5; ++a) EXPECT_DOUBLE_EQ(r.regret(a), best - r.expected[a]);
  EXPECT_DOUBLE_EQ(r.best(), best);
}

TEST(SyntheticEnv, SameSeedSameStream) {
  SyntheticEnv a({10, 4}, Rng(99)), b({10, 4}, Rng(99));
  EXPECT_EQ(a.theta_star(), b.theta_star());
  for (int t = 0; t < 30; ++t) {
    const EnvRound ra = a.synth_round(), rb = b.synth_round();
    ASSERT_EQ(ra.contexts, rb.contexts);
    ASSERT_EQ(ra.noise, rb.noise);
    ASSERT_EQ(ra.t, rb.t);
  }
}

TEST(SyntheticEnv, NoiseVarianceMatchesConfig) {
  SyntheticEnv env({3, 2}, Rng(5));
  double sq = 0.0;
  const int n = 20000;
  for (int t = 0; t < n; ++t) {
    const double e = env.synth_round().noise;
    sq += e * e;
  }
  EXPECT_NEAR(sq / n, 0.05, 0.003);
}

TEST(StaticEnv, RepeatsContextsAndHonoursHorizon) {
  const Matrix ctx{{1, 0}, {0, 1}, {0.6, 0.8}};
  StaticEnv env(ctx, Vector{0.3, 0.4}, 0.0, Rng(0), 3);
  for (int t = 0; t < 3; ++t) {
    auto r = env.next();
    ASSERT_TRUE(r);
    EXPECT_EQ(r->contexts, ctx);
    EXPECT_DOUBLE_EQ(r->expected[2], 0.18 + 0.32);
    EXPECT_EQ(r->noise, 0.0);
  }
  EXPECT_FALSE(env.next());
}

TEST(BuildContext, OuterAdditionByHand) {
  EXPECT_EQ(build_context(Vector{1, 2}, Vector{10, 20}), (Vector{11, 21, 12, 22}));
  EXPECT_EQ(build_context(Vector{1, 2}, Vector{0, 0, 0}), (Vector{1, 1, 1, 2, 2, 2}));
  EXPECT_EQ(build_context(Vector{3}, Vector{4}), (Vector{7}));
}

TEST(BuildContext, InfinityNormBound) {
  Rng rng(6);
  for (int i = 0; i < 100; ++i) {
    const Vector u = standard_normals(1 + rng.below(13), rng);
    const Vector v = standard_normals(1 + rng.below(5), rng);
    ASSERT_LE(max_abs(build_context(u, v)), max_abs(u) + max_abs(v));
  }
}

}  // namespace
}  // namespace vfbandit
