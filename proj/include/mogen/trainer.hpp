// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <string>
#include <vector>

#include "mogen/datagen.hpp"
#include "mogen/diffusion.hpp"
#include "mogen/io.hpp"

namespace mogen {

struct TrainConfig {
  ModelConfig model;
  int64_t epochs = 40;
  int64_t batch_size = 16;
  // Training crop length; sequences shorter than this train at full length.
  int64_t crop_frames = 32;
  double lr = 1e-4;
  double weight_decay = 0.01;
  double grad_clip = 1.0;
  // Condition dropout rates (whole modalities / individual prompts).
  double p_drop_modality = 0.1;
  double p_drop_prompt = 0.1;
  // dual: generation + estimation objectives per sample where applicable.
  // generation: denoising objectives only.
  // estimation: terminal-timestep objectives only; samples without
  //             observation conditions are skipped (and counted).
  std::string mode = "dual";
  uint64_t seed = 42;
  int64_t eval_every = 5;
  LossWeights weights;
};

struct EpochStats {
  int64_t epoch = 0;
  double mean_loss = 0.0;
  double mean_grad_norm = 0.0;
  int64_t batches = 0;
  int64_t samples_used = 0;
  int64_t skipped_nonfinite = 0;
  int64_t skipped_inapplicable = 0;
  double eval_mpjpe = -1.0;  // millimeters; -1 when no eval ran this epoch
};

struct TrainResult {
  Checkpoint best;  // lowest eval MPJPE (parameters + normalizer, no optimizer)
  Checkpoint last;  // final state including optimizer moments
  std::vector<EpochStats> history;
};

// Rows [start, start + len) of the motion and all framewise conditions;
// prompt windows are intersected with the crop and rebased (prompts that
// fall outside are dropped). Beats are rebased the same way.
DataSample crop_sample(const DataSample& s, int64_t start, int64_t len);

// Mean estimation MPJPE (mm) of estimate() against ground truth over the
// given samples; only entries with 3D ground truth and observation
// conditions participate. Returns -1 when none qualify.
double eval_estimation_mpjpe(const std::vector<DataSample>& samples, const ModelConfig& cfg,
                             const ParamMap& params, const NoiseSchedule& ns,
                             const Normalizer& nrm);

// Config-file round-trip; key names mirror the TrainConfig fields exactly.
ojson train_config_to_json(const TrainConfig& cfg);
TrainConfig train_config_from_json(const ojson& j);

// Runs the full training loop over the train split of `dataset`. Every
// random choice is drawn from streams named by (seed, epoch, batch, sample),
// so reruns are bitwise identical. When `out_dir` is non-empty, writes
// best.ckpt, last.ckpt and history.jsonl there. When `resume` is non-null,
// continues from its epoch with its parameters, optimizer and normalizer —
// the remaining epochs and the final state match the uninterrupted run
// bitwise.
TrainResult train(const TrainConfig& cfg, const std::vector<DataSample>& dataset,
                  const std::string& out_dir = "", const Checkpoint* resume = nullptr);

}  // namespace mogen
