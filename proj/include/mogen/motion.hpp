// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <array>
#include <vector>

#include "mogen/rotation.hpp"
#include "mogen/tensor.hpp"

namespace mogen {

// Kinematic tree. Joint 0 is the root (pelvis); offsets are rest-pose
// displacements from the parent in meters, world up is +y.
struct Skeleton {
  int joints = 0;
  int shape_dim = 0;
  std::vector<int> parents;
  std::vector<Vec3> offsets;
  // 1 = this joint's offset is additionally scaled by the limb-length
  // shape factor (arms and legs); everything is scaled by the global one.
  std::vector<int> limb_mask;
  // End effectors in contact-channel order: L foot, R foot, L hand, R hand.
  std::array<int, 4> end_effectors{};
  // Pseudo-vertex samples per bone (uniform interior points).
  int bone_samples = 4;

  static Skeleton toy12();

  int64_t pose_dim() const;
  std::vector<Vec3> rest_positions() const;
  // Height of the ground plane: the lowest rest-pose joint.
  double ground_height() const;
  int64_t vertex_count() const { return static_cast<int64_t>(joints - 1) * bone_samples; }
};

// Flat per-frame channel offsets. Order is fixed:
// gv_orient(6) root_vel(3) joint_angles(6J) shape(S) root_transl(3)
// cam_orient(6) cam_transl(3) contacts(4).
struct ChannelLayout {
  int64_t gv_orient = 0;
  int64_t root_vel;
  int64_t joint_angles;
  int64_t shape;
  int64_t root_transl;
  int64_t cam_orient;
  int64_t cam_transl;
  int64_t contacts;
  int64_t D;
  explicit ChannelLayout(const Skeleton& sk);
};

struct PoseFrame {
  std::array<double, 6> gv_orient{1, 0, 0, 0, 1, 0};
  std::array<double, 3> root_vel{};
  std::vector<std::array<double, 6>> joint_angles;  // J entries
  std::vector<double> shape;                        // S entries
  std::array<double, 3> root_transl{};              // camera-space root position
  std::array<double, 6> cam_orient{1, 0, 0, 0, 1, 0};
  std::array<double, 3> cam_transl{};
  std::array<double, 4> contacts{};
};

PoseFrame make_rest_frame(const Skeleton& sk);

struct MotionSequence {
  Skeleton skeleton;
  double fps = 30.0;
  std::vector<PoseFrame> frames;
  int64_t length() const { return static_cast<int64_t>(frames.size()); }
};

// (N, D) flattening in channel-layout order.
Tensor flatten(const MotionSequence& seq);
MotionSequence unflatten(const Tensor& x, const Skeleton& sk, double fps);

// --- Differentiable kinematics (operate on the flattened (N, D) tensor) ---

// Root-local joint positions (N, 3J): rotation chain through joint angles,
// offsets scaled by the shape factors, root at the origin. The root's own
// angle rotates the whole body inside the gravity-view frame.
Tensor fk_local_positions(const Tensor& theta, const Tensor& shape, const Skeleton& sk);

// Full kinematic decode of a flattened motion tensor. Built under whatever
// tape is active, so the same graph serves losses and plain evaluation.
struct MotionDecode {
  Tensor gv_R;        // (N, 9) world orientation
  Tensor root_vel;    // (N, 3)
  Tensor world_T;     // (N, 3) rollout of the velocities
  Tensor local_pos;   // (N, 3J)
  Tensor world_pos;   // (N, 3J)
  Tensor cam_R;       // (N, 9) camera-frame body orientation
  Tensor cam_pos;     // (N, 3J) camera-space joints (via root_transl)
  Tensor world_verts; // (N, 3V) pseudo-vertices on bones
  Tensor cam_verts;   // (N, 3V)
  Tensor contacts;    // (N, 4)
};
MotionDecode motion_decode(const Tensor& x, const Skeleton& sk);

// Pseudo-vertices: bone_samples uniform interior points per bone, from
// joint positions (N, 3J) -> (N, 3V).
Tensor pseudo_vertices(const Tensor& pos, const Skeleton& sk);

// --- Plain helpers -----------------------------------------------------

// World-space joint positions, row-major (N, J, 3).
std::vector<double> world_joints(const MotionSequence& seq);
// Camera-space joint positions via the per-frame camera channels.
std::vector<double> camera_joints(const MotionSequence& seq);

// World trajectory (orientation + translation per frame).
struct WorldTrajectory {
  std::vector<Mat3> R;
  std::vector<Vec3> T;
};
WorldTrajectory world_trajectory(const MotionSequence& seq);

// Writes gv_orient and root_vel channels from a world trajectory. Requires
// T[0] = 0 (the rollout convention pins the first frame at the origin).
// The last frame's velocity extrapolates the previous world step expressed
// in the last frame's orientation, so rollout/canonicalize round-trip.
void set_world_trajectory(MotionSequence& seq, const WorldTrajectory& traj);

// Per-frame camera pose (camera-to-world rotation + position).
struct CameraPose {
  Mat3 R = mat3_identity();
  Vec3 t{};
};
struct CameraIntrinsics {
  double f = 500.0;
  double cx = 320.0;
  double cy = 240.0;
  int width = 640;
  int height = 480;
  double z_near = 0.05;
};

// Fills cam_orient / cam_transl / root_transl channels from camera poses
// (root_transl = camera-space root position).
void attach_camera(MotionSequence& seq, const std::vector<CameraPose>& cams);

// Camera looking from `eye` toward `target`, world up +y, image y down.
Mat3 look_at(const Vec3& eye, const Vec3& target);

// Contact thresholds: an end effector is in contact when its world speed
// is below v_thresh meters/frame (scaled to 30 fps) and its height above
// the ground plane is below h_thresh meters.
struct ContactParams {
  double v_thresh = 0.002;
  double h_thresh = 0.08;
};
std::vector<std::array<double, 4>> detect_contacts(const MotionSequence& seq,
                                                   const ContactParams& cp = {});

}  // namespace mogen
