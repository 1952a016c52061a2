// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "mogen/conditioning.hpp"
#include "mogen/optim.hpp"
#include "mogen/tensor.hpp"

namespace mogen {

// Network hyperparameters. Frame count is not part of the config: the model
// is convolution-like along time (windowed attention with relative positions)
// and runs on any sequence length.
struct ModelConfig {
  int joints = 12;
  int shape_dim = 2;
  int64_t d_model = 128;
  int64_t d_mlp = 256;
  int64_t layers = 4;
  int64_t heads = 4;
  // Self-attention window: token i attends to j iff |i - j| <= window / 2.
  int64_t window = 32;
  int64_t d_text = 64;
  int64_t max_text_tokens = 16;
  int64_t d_video = 32;
  int64_t d_music = 8;
  int64_t timesteps = 1000;
  double rope_base = 10000.0;

  int64_t pose_dim() const {
    return 6 + 3 + static_cast<int64_t>(joints) * 6 + shape_dim + 3 + 6 + 3 + 4;
  }
  int64_t head_dim() const { return d_model / heads; }
};

// One named parameter with its shape and initializer.
struct ParamSpec {
  std::string name;
  Shape shape;
  enum class Init { linear, zeros, ones, embedding, small } init;
};

// The full parameter census, in deterministic order. Single source of truth
// for init_params / param_count / checkpoint validation.
std::vector<ParamSpec> param_specs(const ModelConfig& cfg);

// Seeded initialization; every parameter gets its own named RNG stream, so
// values do not depend on initialization order.
ParamMap init_params(const ModelConfig& cfg, uint64_t seed);

int64_t param_count(const ModelConfig& cfg);

// Sinusoidal features of an integer timestep, length d (even).
Tensor timestep_features(int64_t t, int64_t d);

// 0/1 mask of shape (n, n): 1 where |i - j| > window / 2 (entries to block).
Tensor attention_window_mask(int64_t n, int64_t window);

struct DenoiseOptions {
  // Logical index of the first frame; attention uses relative rotary
  // positions, so outputs are invariant to this. Exposed for tests.
  int64_t pos0 = 0;
  // Bypass per-prompt window gating (reference path for tests).
  bool ungated_text = false;
};

// x0-prediction denoiser: maps a noisy motion tensor x_t at timestep t plus
// conditions to a prediction of the clean motion.
// x_t is (N, D); returns (N, D).
Tensor denoise(const Tensor& x_t, int64_t t, const ConditionSet& cond, const ModelConfig& cfg,
               const ParamMap& params, const DenoiseOptions& opt = {});

}  // namespace mogen
