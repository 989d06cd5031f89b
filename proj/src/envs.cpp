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

#include "vfbandit/envs.hpp"

#include <algorithm>
#include <cmath>

namespace vfbandit {

namespace {

Vector normalized_gaussian(std::size_t d, double sigma, Rng& rng) {
  Vector v(d);
  for (std::size_t i = 0; i < d; ++i) v[i] = sigma * rng.normal();
  const double n = norm2(v);
  if (n == 0.0) {
    v[0] = 1.0;
    return v;
  }
  for (std::size_t i = 0; i < d; ++i) v[i] /= n;
  return v;
}

}  // namespace

double EnvRound::best() const {
  return *std::max_element(expected.begin(), expected.end());
}

SyntheticEnv::SyntheticEnv(const SyntheticConfig& cfg, Rng rng)
    : cfg_(cfg), rng_(std::move(rng)) {
  if (cfg_.d == 0 || cfg_.k == 0) throw DimensionError("SyntheticEnv: d and K must be positive");
  if (cfg_.noise_sigma2 < 0.0 || cfg_.context_sigma2 <= 0.0 || cfg_.theta_sigma2 <= 0.0) {
    throw std::invalid_argument("SyntheticEnv: variances must be positive (noise may be zero)");
  }
  theta_star_ = normalized_gaussian(cfg_.d, std::sqrt(cfg_.theta_sigma2), rng_);
}

EnvRound SyntheticEnv::synth_round() {
  EnvRound round;
  round.t = t_++;
  round.contexts = ContextSet(cfg_.k, cfg_.d);
  round.expected.resize(cfg_.k);
  const double sigma = std::sqrt(cfg_.context_sigma2);
  for (std::size_t a = 0; a < cfg_.k; ++a) {
    const Vector x = normalized_gaussian(cfg_.d, sigma, rng_);
    round.contexts.set_row(a, x);
    round.expected[a] = dot(x, theta_star_);
  }
  round.noise = std::sqrt(cfg_.noise_sigma2) * rng_.normal();
  return round;
}

StaticEnv::StaticEnv(ContextSet contexts, Vector theta_star, double noise_sigma2, Rng rng,
                     std::optional<std::size_t> horizon)
    : contexts_(std::move(contexts)),
      theta_star_(std::move(theta_star)),
      noise_sd_(std::sqrt(noise_sigma2)),
      rng_(std::move(rng)),
      horizon_(horizon) {
  if (contexts_.rows() == 0 || contexts_.cols() != theta_star_.dim()) {
    throw DimensionError("StaticEnv: contexts and theta dimension mismatch");
  }
}

std::optional<EnvRound> StaticEnv::next() {
  if (horizon_ && t_ >= *horizon_) return std::nullopt;
  EnvRound round;
  round.t = t_++;
  round.contexts = contexts_;
  round.expected = matvec(contexts_, theta_star_).raw();
  round.noise = noise_sd_ * rng_.normal();
  return round;
}

Vector build_context(const Vector& user, const Vector& item) {
  if (user.dim() == 0 || item.dim() == 0) throw DimensionError("build_context: empty features");
  Vector out(user.dim() * item.dim());
  std::size_t k = 0;
  for (std::size_t i = 0; i < user.dim(); ++i) {
    for (std::size_t j = 0; j < item.dim(); ++j) out[k++] = user[i] + item[j];
  }
  return out;
}

}  // namespace vfbandit
