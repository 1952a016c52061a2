// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <vector>

#include "mogen/motion.hpp"

namespace mogen {

// Evaluation metrics over joint-position arrays, row-major (N, J, 3) in
// meters (the layout produced by world_joints / camera_joints). Position
// errors are reported in millimeters.

// Rigid / similarity alignment mapping P onto Q (n points each):
// q ~ scale * R * p + t, least squares via SVD with a determinant-sign fix.
struct RigidTransform {
  Mat3 R = mat3_identity();
  Vec3 t{};
  double scale = 1.0;
};
RigidTransform fit_rigid(const double* P, const double* Q, int64_t n, bool with_scale);
void apply_rigid(const RigidTransform& a, const double* p, double* out, int64_t n);

// Mean per-joint position error after root-centering each frame (joint 0).
double mpjpe(const std::vector<double>& pred, const std::vector<double>& gt, int64_t n,
             int joints);

// Mean per-joint error after a per-frame similarity Procrustes alignment.
double pa_mpjpe(const std::vector<double>& pred, const std::vector<double>& gt, int64_t n,
                int joints);

// World-frame errors over segments of at most `segment` frames (default 100;
// a tail shorter than 25 frames is folded into the previous segment).
//   w_mpjpe:  each segment rigidly aligned on its first two frames only,
//             so within-segment drift counts against the prediction.
//   wa_mpjpe: each segment rigidly aligned on all of its frames (the most
//             favorable single rigid transform).
double w_mpjpe(const std::vector<double>& pred, const std::vector<double>& gt, int64_t n,
               int joints, int64_t segment = 100);
double wa_mpjpe(const std::vector<double>& pred, const std::vector<double>& gt, int64_t n,
                int joints, int64_t segment = 100);

// Root trajectory drift: both root tracks are pinned to the origin at frame
// 0, and the final-frame gap is reported as a percentage of the ground-truth
// path length. A constant 1 mm/frame drift against a steady walk gives
// exactly (0.001 / step) * 100 percent.
double rte_percent(const std::vector<double>& pred, const std::vector<double>& gt, int64_t n,
                   int joints);

// Mean acceleration-difference magnitude (second finite difference),
// millimeters per frame^2.
double accel_error(const std::vector<double>& pred, const std::vector<double>& gt, int64_t n,
                   int joints);

// Mean jerk magnitude (third finite difference scaled by fps^3), m/s^3.
double jitter(const std::vector<double>& pos, int64_t n, int joints, double fps);

// Mean horizontal displacement (mm) of the foot joints on frames where the
// given contact mask is active (mask rows are {L foot, R foot, ...}).
double foot_sliding(const std::vector<double>& pos,
                    const std::vector<std::array<double, 4>>& contacts, int64_t n,
                    const Skeleton& sk);

// Beat alignment: for each joint-speed local minimum, the distance in
// frames to the nearest beat is scored as exp(-d^2 / (2 sigma^2)) and
// averaged. 1.0 means every speed minimum lands exactly on a beat.
double beat_alignment_from_speed(const std::vector<double>& speed,
                                 const std::vector<int64_t>& beats, double sigma = 3.0);
// Speed profile used above: mean over joints of per-frame displacement.
std::vector<double> joint_speed_profile(const std::vector<double>& pos, int64_t n, int joints);
double beat_alignment(const std::vector<double>& pos, int64_t n, int joints,
                      const std::vector<int64_t>& beats, double sigma = 3.0);

// Per-sequence kinetic feature: mean squared velocity per joint (J values).
std::vector<double> kinetic_features(const std::vector<double>& pos, int64_t n, int joints);

// Frechet distance between Gaussians fitted to two feature collections
// (each row is one feature vector of length dim):
//   |mu_a - mu_b|^2 + tr(Ca + Cb - 2 (Ca^1/2 Cb Ca^1/2)^1/2).
double frechet_distance(const std::vector<std::vector<double>>& a,
                        const std::vector<std::vector<double>>& b);

// Mean pairwise Euclidean distance between feature vectors.
double diversity(const std::vector<std::vector<double>>& feats);

}  // namespace mogen
