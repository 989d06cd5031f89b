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

#ifndef VFBANDIT_ENVS_HPP_
#define VFBANDIT_ENVS_HPP_

#include <cstddef>
#include <optional>
#include <vector>

#include "vfbandit/bandit.hpp"
#include "vfbandit/numerics.hpp"

namespace vfbandit {

/// One round of a linear environment. The noise term is drawn when the round
/// is generated, so the reward stream does not depend on which arm is pulled.
struct EnvRound {
  std::size_t t = 0;
  ContextSet contexts;
  /// Noiseless expected reward xᵀθ* per arm.
  std::vector<double> expected;
  double noise = 0.0;

  double reward(std::size_t arm) const { return expected.at(arm) + noise; }
  double best() const;
  /// max_a xᵀθ* − x_armᵀθ*.
  double regret(std::size_t arm) const { return best() - expected.at(arm); }
};

class Environment {
 public:
  virtual ~Environment() = default;
  virtual std::size_t dim() const = 0;
  virtual std::size_t arms() const = 0;
  /// Next round, or std::nullopt once the environment is exhausted.
  virtual std::optional<EnvRound> next() = 0;
};

struct SyntheticConfig {
  std::size_t d = 100;
  std::size_t k = 10;
  double context_sigma2 = 0.05;
  double theta_sigma2 = 0.05;
  double noise_sigma2 = 0.05;
};

/// Gaussian contexts and θ*, each l2-normalized; reward xᵀθ* + ε with
/// ε ~ N(0, noise_sigma2). Never exhausts.
class SyntheticEnv : public Environment {
 public:
  SyntheticEnv(const SyntheticConfig& cfg, Rng rng);

  std::size_t dim() const override { return cfg_.d; }
  std::size_t arms() const override { return cfg_.k; }
  const Vector& theta_star() const { return theta_star_; }
  const SyntheticConfig& config() const { return cfg_; }

  std::optional<EnvRound> next() override { return synth_round(); }
  EnvRound synth_round();

 private:
  SyntheticConfig cfg_;
  Rng rng_;
  Vector theta_star_;
  std::size_t t_ = 0;
};

/// The same context set every round with Gaussian reward noise; optionally
/// limited to `horizon` rounds.
class StaticEnv : public Environment {
 public:
  StaticEnv(ContextSet contexts, Vector theta_star, double noise_sigma2, Rng rng,
            std::optional<std::size_t> horizon = std::nullopt);

  std::size_t dim() const override { return contexts_.cols(); }
  std::size_t arms() const override { return contexts_.rows(); }
  std::optional<EnvRound> next() override;

 private:
  ContextSet contexts_;
  Vector theta_star_;
  double noise_sd_;
  Rng rng_;
  std::optional<std::size_t> horizon_;
  std::size_t t_ = 0;
};

/// Outer addition: entry (i, j) = user[i] + item[j], flattened row-major.
Vector build_context(const Vector& user, const Vector& item);

}  // namespace vfbandit

#endif  // VFBANDIT_ENVS_HPP_
