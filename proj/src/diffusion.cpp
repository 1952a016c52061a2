// SPDX-License-Identifier: Apache-2.0
#include "mogen/diffusion.hpp"

#include <algorithm>
#include <cmath>

#include "mogen/kernels.hpp"

namespace mogen {

NoiseSchedule NoiseSchedule::cosine(int64_t T, double s) {
  if (T < 1) fail_value("noise schedule: T must be positive, got ", T);
  NoiseSchedule ns;
  ns.T = T;
  ns.alpha_bar.resize(static_cast<size_t>(T) + 1);
  ns.alpha_bar[0] = 1.0;
  auto f = [&](double t) {
    const double u = (t / static_cast<double>(T) + s) / (1.0 + s) * (M_PI / 2.0);
    const double c = std::cos(u);
    return c * c;
  };
  const double f0 = f(0.0);
  for (int64_t t = 1; t <= T; ++t) {
    const double raw = f(static_cast<double>(t)) / f0;
    double beta = 1.0 - raw / ns.alpha_bar[static_cast<size_t>(t - 1)];
    beta = std::min(beta, 0.999);
    ns.alpha_bar[static_cast<size_t>(t)] = ns.alpha_bar[static_cast<size_t>(t - 1)] * (1.0 - beta);
  }
  return ns;
}

double NoiseSchedule::ab(int64_t t) const {
  if (t < 0 || t > T) fail_value("noise schedule: timestep ", t, " outside [0, ", T, "]");
  return alpha_bar[static_cast<size_t>(t)];
}

Tensor q_sample(const Tensor& x0, int64_t t, const NoiseSchedule& ns, RngStream& rng,
                Tensor* eps_out) {
  const double ab = ns.ab(t);
  Tensor eps = Tensor::zeros(x0.shape());
  for (int64_t i = 0; i < eps.numel(); ++i) eps.data()[i] = rng.normal();
  if (eps_out) *eps_out = eps;
  return add(scale(x0, std::sqrt(ab)), scale(eps, std::sqrt(1.0 - ab)));
}

// ---------------------------------------------------------------------------
// Normalizer

Tensor Normalizer::normalize(const Tensor& x) const {
  if (x.rank() != 2 || x.dim(1) != dim()) {
    fail_shape("normalize: ", shape_str(x.shape()), " vs ", dim(), " channels");
  }
  Tensor m = Tensor::from({dim()}, mean);
  std::vector<double> inv(stdev.size());
  for (size_t i = 0; i < stdev.size(); ++i) inv[i] = 1.0 / stdev[i];
  return mul(sub(x, m), Tensor::from({dim()}, inv));
}

Tensor Normalizer::denormalize(const Tensor& x) const {
  if (x.rank() != 2 || x.dim(1) != dim()) {
    fail_shape("denormalize: ", shape_str(x.shape()), " vs ", dim(), " channels");
  }
  return add(mul(x, Tensor::from({dim()}, stdev)), Tensor::from({dim()}, mean));
}

Normalizer Normalizer::fit(const std::vector<Tensor>& clips, double std_floor) {
  if (clips.empty()) fail_value("normalizer fit: no clips");
  const int64_t d = clips[0].dim(1);
  Normalizer n;
  n.mean.assign(static_cast<size_t>(d), 0.0);
  n.stdev.assign(static_cast<size_t>(d), 0.0);
  int64_t rows = 0;
  for (const Tensor& c : clips) {
    if (c.rank() != 2 || c.dim(1) != d) {
      fail_shape("normalizer fit: clip ", shape_str(c.shape()), " vs ", d, " channels");
    }
    for (int64_t r = 0; r < c.dim(0); ++r) {
      for (int64_t k = 0; k < d; ++k) n.mean[static_cast<size_t>(k)] += c.data()[r * d + k];
    }
    rows += c.dim(0);
  }
  for (int64_t k = 0; k < d; ++k) n.mean[static_cast<size_t>(k)] /= static_cast<double>(rows);
  for (const Tensor& c : clips) {
    for (int64_t r = 0; r < c.dim(0); ++r) {
      for (int64_t k = 0; k < d; ++k) {
        const double dv = c.data()[r * d + k] - n.mean[static_cast<size_t>(k)];
        n.stdev[static_cast<size_t>(k)] += dv * dv;
      }
    }
  }
  for (int64_t k = 0; k < d; ++k) {
    n.stdev[static_cast<size_t>(k)] =
        std::max(std_floor, std::sqrt(n.stdev[static_cast<size_t>(k)] / static_cast<double>(rows)));
  }
  return n;
}

Normalizer Normalizer::identity(int64_t d) {
  Normalizer n;
  n.mean.assign(static_cast<size_t>(d), 0.0);
  n.stdev.assign(static_cast<size_t>(d), 1.0);
  return n;
}

// ---------------------------------------------------------------------------
// Losses

namespace {

Tensor mse(const Tensor& a, const Tensor& b) {
  Tensor d = sub(a, b);
  return mean_all(mul(d, d));
}

}  // namespace

GeoTargets make_geo_targets(const Tensor& x0_raw, const Skeleton& sk, const Tensor& kp2d,
                            const CameraIntrinsics& K) {
  NoGradScope ng;
  GeoTargets t;
  const MotionDecode d = motion_decode(x0_raw, sk);
  t.world_pos = d.world_pos;
  t.cam_pos = d.cam_pos;
  t.world_verts = d.world_verts;
  t.cam_verts = d.cam_verts;
  t.contacts = d.contacts;
  t.kp2d = kp2d;
  t.K = K;
  return t;
}

Tensor reprojection_error(const Tensor& cam_pos, const Tensor& kp2d, const CameraIntrinsics& K) {
  const int64_t N = cam_pos.dim(0);
  const int64_t J = cam_pos.dim(1) / 3;
  if (kp2d.rank() != 2 || kp2d.dim(0) != N || kp2d.dim(1) != J * 3) {
    fail_shape("reprojection_error: kp2d ", shape_str(kp2d.shape()), " vs cam joints ",
               shape_str(cam_pos.shape()));
  }
  Tensor pts = reshape(cam_pos, {N * J, 3});
  Tensor uv = project_pinhole(pts, K.f, K.cx, K.cy, K.z_near);
  Tensor uv_norm = scale(sub(uv, Tensor::from({2}, {K.cx, K.cy})), 1.0 / K.f);
  Tensor target = reshape(kp2d, {N * J, 3});
  Tensor txy = slice(target, 1, 0, 2);
  Tensor valid = reshape(slice(target, 1, 2, 3), {N * J});
  double n_valid = 0.0;
  for (int64_t i = 0; i < valid.numel(); ++i) n_valid += valid.data()[i];
  if (n_valid == 0.0) return Tensor::scalar(0.0);
  Tensor sq = row_scale(mul(sub(uv_norm, txy), sub(uv_norm, txy)), valid);
  return scale(sum_all(sq), 1.0 / (2.0 * n_valid));
}

Tensor loss_geo(const Tensor& x0_hat_raw, const GeoTargets& tgt, const Skeleton& sk,
                const LossWeights& w) {
  const MotionDecode d = motion_decode(x0_hat_raw, sk);
  Tensor geo = scale(add(add(mse(d.world_pos, tgt.world_pos), mse(d.cam_pos, tgt.cam_pos)),
                         add(mse(d.world_verts, tgt.world_verts), mse(d.cam_verts, tgt.cam_verts))),
                     0.25);
  Tensor contact = mean_all(bce(sigmoid(d.contacts), tgt.contacts));
  Tensor total = add(scale(geo, w.geo), scale(contact, w.contact));
  if (tgt.kp2d.defined()) {
    total = add(total, scale(reprojection_error(d.cam_pos, tgt.kp2d, tgt.K), w.reproj2d));
  }
  return total;
}

Tensor loss_generation(const DiffusionSample& s, int64_t t, const ModelConfig& cfg,
                       const ParamMap& params, const NoiseSchedule& ns, const Normalizer& nrm,
                       const LossWeights& w, RngStream& rng) {
  if (!s.has_3d) fail_value("loss_generation: sample has no 3D ground truth");
  Tensor x_t = q_sample(s.x0_norm, t, ns, rng);
  Tensor x0_hat = denoise(x_t, t, s.cond, cfg, params);
  Tensor total = scale(mse(x0_hat, s.x0_norm), w.simple);
  return add(total, loss_geo(nrm.denormalize(x0_hat), s.targets, s.skeleton, w));
}

Tensor loss_estimation(const DiffusionSample& s, const ModelConfig& cfg, const ParamMap& params,
                       const NoiseSchedule& ns, const Normalizer& nrm, const LossWeights& w,
                       RngStream& rng) {
  return loss_generation(s, ns.T, cfg, params, ns, nrm, w, rng);
}

Tensor loss_estimation_2d(const DiffusionSample& s, const ModelConfig& cfg,
                          const ParamMap& params, const NoiseSchedule& ns, const Normalizer& nrm,
                          RngStream& rng) {
  if (!s.targets.kp2d.defined()) fail_value("loss_estimation_2d: sample has no 2D keypoints");
  const int64_t N = s.targets.kp2d.dim(0);
  Tensor z = Tensor::zeros({N, cfg.pose_dim()});
  for (int64_t i = 0; i < z.numel(); ++i) z.data()[i] = rng.normal();
  Tensor x0_hat = denoise(z, ns.T, s.cond, cfg, params);
  const MotionDecode d = motion_decode(nrm.denormalize(x0_hat), s.skeleton);
  return reprojection_error(d.cam_pos, s.targets.kp2d, s.targets.K);
}

Tensor loss_generation_2d(const DiffusionSample& s, int64_t t, const ModelConfig& cfg,
                          const ParamMap& params, const NoiseSchedule& ns, const Normalizer& nrm,
                          RngStream& rng) {
  if (!s.targets.kp2d.defined()) fail_value("loss_generation_2d: sample has no 2D keypoints");
  const int64_t N = s.targets.kp2d.dim(0);
  Tensor pseudo;
  {
    NoGradScope ng;  // detached pseudo-label
    Tensor z = Tensor::zeros({N, cfg.pose_dim()});
    for (int64_t i = 0; i < z.numel(); ++i) z.data()[i] = rng.normal();
    pseudo = denoise(z, ns.T, s.cond, cfg, params);
  }
  Tensor x_t = q_sample(pseudo, t, ns, rng);
  Tensor x0_hat = denoise(x_t, t, s.cond, cfg, params);
  const MotionDecode d = motion_decode(nrm.denormalize(x0_hat), s.skeleton);
  return reprojection_error(d.cam_pos, s.targets.kp2d, s.targets.K);
}

bool supports_estimation(const ConditionSet& cond) {
  return cond.video.defined() || cond.kp2d.defined();
}

// ---------------------------------------------------------------------------
// Sampling

std::vector<int64_t> pose_lock_channels(const Skeleton& sk) {
  const ChannelLayout L(sk);
  std::vector<int64_t> ch;
  for (int64_t c = L.gv_orient; c < L.gv_orient + 6; ++c) ch.push_back(c);
  for (int64_t c = L.joint_angles; c < L.joint_angles + sk.joints * 6; ++c) ch.push_back(c);
  return ch;
}

namespace {

// Descending DDIM timestep ladder T = t_0 > t_1 > ... > t_S = 0.
std::vector<int64_t> ddim_timesteps(int64_t T, int64_t steps) {
  if (steps < 1 || steps > T) fail_value("ddim: steps ", steps, " outside [1, ", T, "]");
  std::vector<int64_t> ts;
  for (int64_t i = 0; i <= steps; ++i) {
    const int64_t t = llround(static_cast<double>(T) * static_cast<double>(steps - i) /
                              static_cast<double>(steps));
    if (ts.empty() || t < ts.back()) ts.push_back(t);
  }
  if (ts.front() != T || ts.back() != 0) fail_internal("ddim: bad timestep ladder");
  return ts;
}

// Overwrite locked keyframe channels with a q-sampled version of the
// keyframe rows at timestep t (exact rows at t = 0).
void renoise_lock(Tensor& x, const KeyframeLock& lock, const Tensor& rows_norm, int64_t t,
                  const NoiseSchedule& ns, RngStream& rng) {
  Tensor noised = t == 0 ? rows_norm : q_sample(rows_norm, t, ns, rng);
  const int64_t D = x.dim(1);
  for (size_t k = 0; k < lock.frames.size(); ++k) {
    const int64_t f = lock.frames[k];
    for (int64_t c : lock.channels) {
      x.data()[f * D + c] = noised.data()[static_cast<int64_t>(k) * D + c];
    }
  }
}

}  // namespace

Tensor ddim_sample(const ConditionSet& cond, int64_t n_frames, const ModelConfig& cfg,
                   const ParamMap& params, const NoiseSchedule& ns, const Normalizer& nrm,
                   const SampleOptions& opt, RngStream& rng) {
  NoGradScope ng;
  const int64_t D = cfg.pose_dim();
  Tensor x;
  if (opt.init.defined()) {
    if (opt.init.rank() != 2 || opt.init.dim(0) != n_frames || opt.init.dim(1) != D) {
      fail_shape("ddim: init ", shape_str(opt.init.shape()), ", expected (", n_frames, ",", D, ")");
    }
    x = opt.init.clone();
  } else {
    x = Tensor::zeros({n_frames, D});
    for (int64_t i = 0; i < x.numel(); ++i) x.data()[i] = rng.normal();
  }
  Tensor lock_rows_norm;
  if (opt.lock) {
    if (opt.lock->rows_raw.dim(0) != static_cast<int64_t>(opt.lock->frames.size())) {
      fail_shape("ddim: keyframe rows ", shape_str(opt.lock->rows_raw.shape()), " vs ",
                 opt.lock->frames.size(), " locked frames");
    }
    for (int64_t f : opt.lock->frames) {
      if (f < 0 || f >= n_frames) fail_value("ddim: locked frame ", f, " out of range");
    }
    lock_rows_norm = nrm.normalize(opt.lock->rows_raw);
  }
  const std::vector<int64_t> ts = ddim_timesteps(ns.T, opt.steps);
  if (opt.lock) renoise_lock(x, *opt.lock, lock_rows_norm, ts.front(), ns, rng);
  for (size_t i = 0; i + 1 < ts.size(); ++i) {
    const int64_t t_cur = ts[i], t_next = ts[i + 1];
    Tensor x0_hat = denoise(x, t_cur, cond, cfg, params);
    const double ab_cur = ns.ab(t_cur), ab_next = ns.ab(t_next);
    // eta = 0: deterministic update through the implied noise direction.
    Tensor eps_hat = scale(sub(x, scale(x0_hat, std::sqrt(ab_cur))),
                           1.0 / std::sqrt(1.0 - ab_cur));
    x = add(scale(x0_hat, std::sqrt(ab_next)), scale(eps_hat, std::sqrt(1.0 - ab_next)));
    if (opt.lock) renoise_lock(x, *opt.lock, lock_rows_norm, t_next, ns, rng);
  }
  return nrm.denormalize(x);
}

Tensor estimate(const ConditionSet& cond, int64_t n_frames, const ModelConfig& cfg,
                const ParamMap& params, const NoiseSchedule& ns, const Normalizer& nrm) {
  NoGradScope ng;
  Tensor z = Tensor::zeros({n_frames, cfg.pose_dim()});
  return nrm.denormalize(denoise(z, ns.T, cond, cfg, params));
}

Tensor inbetween_sample(const ConditionSet& cond, int64_t n_frames, const ModelConfig& cfg,
                        const ParamMap& params, const NoiseSchedule& ns, const Normalizer& nrm,
                        const KeyframeLock& lock, int64_t steps, RngStream& rng) {
  SampleOptions opt;
  opt.steps = steps;
  opt.lock = &lock;
  Tensor out = ddim_sample(cond, n_frames, cfg, params, ns, nrm, opt, rng);
  // Hard overwrite in raw space: locked channels match the keyframes exactly.
  const int64_t D = out.dim(1);
  for (size_t k = 0; k < lock.frames.size(); ++k) {
    for (int64_t c : lock.channels) {
      out.data()[lock.frames[k] * D + c] =
          lock.rows_raw.data()[static_cast<int64_t>(k) * D + c];
    }
  }
  return out;
}

}  // namespace mogen
