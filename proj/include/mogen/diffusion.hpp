// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <vector>

#include "mogen/denoiser.hpp"
#include "mogen/motion.hpp"
#include "mogen/rng.hpp"
#include "mogen/tensor.hpp"

namespace mogen {

// Cosine cumulative-alpha schedule. alpha_bar[0] = 1 exactly; per-step betas
// are clipped to 0.999, which keeps alpha_bar strictly positive and strictly
// decreasing all the way to t = T.
struct NoiseSchedule {
  int64_t T = 1000;
  std::vector<double> alpha_bar;  // size T + 1

  static NoiseSchedule cosine(int64_t T = 1000, double s = 0.008);
  double ab(int64_t t) const;
};

// Forward-process sample x_t = sqrt(ab_t) x0 + sqrt(1 - ab_t) eps, with
// eps ~ N(0, I) drawn from rng. Optionally returns the drawn eps.
Tensor q_sample(const Tensor& x0, int64_t t, const NoiseSchedule& ns, RngStream& rng,
                Tensor* eps_out = nullptr);

// Per-channel standardization of motion tensors. Fitted on the training
// split; stored in checkpoints so inference uses the same statistics.
struct Normalizer {
  std::vector<double> mean;
  std::vector<double> stdev;  // floored at fit time

  int64_t dim() const { return static_cast<int64_t>(mean.size()); }
  // Differentiable affine maps (broadcast over rows).
  Tensor normalize(const Tensor& x) const;
  Tensor denormalize(const Tensor& x) const;

  static Normalizer fit(const std::vector<Tensor>& clips, double std_floor = 1e-3);
  static Normalizer identity(int64_t d);
};

struct LossWeights {
  double simple = 1.0;
  double geo = 0.5;
  double contact = 0.1;
  double reproj2d = 0.01;
};

// Plain (non-differentiable) supervision targets decoded once per sample.
struct GeoTargets {
  Tensor world_pos;    // (N, 3J)
  Tensor cam_pos;      // (N, 3J)
  Tensor world_verts;  // (N, 3V)
  Tensor cam_verts;    // (N, 3V)
  Tensor contacts;     // (N, 4) in {0, 1}
  Tensor kp2d;         // (N, 3J) optional 2D reprojection target
  CameraIntrinsics K;
};

GeoTargets make_geo_targets(const Tensor& x0_raw, const Skeleton& sk, const Tensor& kp2d,
                            const CameraIntrinsics& K);

// Mean squared reprojection error of raw-space camera joints against
// normalized 2D keypoints, averaged over valid joints (zero tensor if none).
Tensor reprojection_error(const Tensor& cam_pos, const Tensor& kp2d, const CameraIntrinsics& K);

// Geometric losses of a raw-space prediction: world/camera joints and
// pseudo-vertices (w.geo), contact BCE on the sigmoid of the contact channel
// (w.contact) and, when targets carry keypoints, 2D reprojection (w.reproj2d).
Tensor loss_geo(const Tensor& x0_hat_raw, const GeoTargets& tgt, const Skeleton& sk,
                const LossWeights& w);

// One training sample, prepared by the trainer.
struct DiffusionSample {
  Skeleton skeleton;
  Tensor x0_norm;  // (N, D) normalized clean motion (3D samples)
  Tensor x0_raw;   // (N, D) raw clean motion (3D samples)
  ConditionSet cond;
  GeoTargets targets;  // decoded from x0_raw; for 2D-only samples just kp2d/K
  bool has_3d = true;
};

// Denoising loss at a drawn timestep: w.simple * MSE in normalized space
// plus loss_geo of the denormalized prediction.
Tensor loss_generation(const DiffusionSample& s, int64_t t, const ModelConfig& cfg,
                       const ParamMap& params, const NoiseSchedule& ns, const Normalizer& nrm,
                       const LossWeights& w, RngStream& rng);

// Estimation loss: the generation loss forced to the terminal timestep, so
// the network input carries (almost) no signal and the conditions must
// explain the motion.
Tensor loss_estimation(const DiffusionSample& s, const ModelConfig& cfg, const ParamMap& params,
                       const NoiseSchedule& ns, const Normalizer& nrm, const LossWeights& w,
                       RngStream& rng);

// Losses for samples with 2D keypoints but no 3D ground truth.
// Estimation: reprojection error of the terminal-timestep prediction.
Tensor loss_estimation_2d(const DiffusionSample& s, const ModelConfig& cfg,
                          const ParamMap& params, const NoiseSchedule& ns, const Normalizer& nrm,
                          RngStream& rng);
// Generation: a detached pseudo-label is estimated from the conditions,
// re-noised to timestep t, denoised, and supervised by reprojection only.
Tensor loss_generation_2d(const DiffusionSample& s, int64_t t, const ModelConfig& cfg,
                          const ParamMap& params, const NoiseSchedule& ns, const Normalizer& nrm,
                          RngStream& rng);

// True when a sample supports the estimation objective (video or 2D
// keypoint evidence); text/music-only samples train generation only.
bool supports_estimation(const ConditionSet& cond);

// Channels locked during in-betweening: keyframe rows in raw space.
struct KeyframeLock {
  std::vector<int64_t> frames;  // ascending frame indices
  Tensor rows_raw;              // (K, D) raw-space rows to lock
  std::vector<int64_t> channels;  // locked channel indices
};

// Locked channel set for in-betweening: body pose + global orientation.
std::vector<int64_t> pose_lock_channels(const Skeleton& sk);

struct SampleOptions {
  int64_t steps = 50;
  Tensor init;  // optional (N, D) normalized-space start; else N(0, I) from rng
  const KeyframeLock* lock = nullptr;
};

// Deterministic DDIM sampler (eta = 0) in normalized space; returns the raw
// (denormalized) motion tensor. rng is used for the initial noise (when opt
// .init is undefined) and for re-noising locked keyframes between steps.
Tensor ddim_sample(const ConditionSet& cond, int64_t n_frames, const ModelConfig& cfg,
                   const ParamMap& params, const NoiseSchedule& ns, const Normalizer& nrm,
                   const SampleOptions& opt, RngStream& rng);

// Single-pass motion estimation from conditions: the denoiser applied to a
// zero tensor at the terminal timestep. Deterministic.
Tensor estimate(const ConditionSet& cond, int64_t n_frames, const ModelConfig& cfg,
                const ParamMap& params, const NoiseSchedule& ns, const Normalizer& nrm);

// Generation with exact keyframe constraints: DDIM with per-step keyframe
// re-noising, then a hard overwrite of the locked channels in raw space.
Tensor inbetween_sample(const ConditionSet& cond, int64_t n_frames, const ModelConfig& cfg,
                        const ParamMap& params, const NoiseSchedule& ns, const Normalizer& nrm,
                        const KeyframeLock& lock, int64_t steps, RngStream& rng);

}  // namespace mogen
