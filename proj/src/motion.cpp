// SPDX-License-Identifier: Apache-2.0
#include "mogen/motion.hpp"

#include <algorithm>
#include <cmath>

#include "mogen/kernels.hpp"

namespace mogen {

Skeleton Skeleton::toy12() {
  Skeleton sk;
  sk.joints = 12;
  sk.shape_dim = 2;  // (global scale, limb-length scale)
  sk.parents = {-1, 0, 0, 2, 0, 4, 0, 6, 7, 0, 9, 10};
  sk.offsets = {
      {0.00, 0.00, 0.00},    // 0 pelvis
      {0.00, 0.60, 0.00},    // 1 head
      {0.20, 0.45, 0.00},    // 2 L shoulder
      {0.00, -0.55, 0.00},   // 3 L hand
      {-0.20, 0.45, 0.00},   // 4 R shoulder
      {0.00, -0.55, 0.00},   // 5 R hand
      {0.10, -0.05, 0.00},   // 6 L hip
      {0.00, -0.42, 0.00},   // 7 L knee
      {0.00, -0.42, 0.00},   // 8 L foot
      {-0.10, -0.05, 0.00},  // 9 R hip
      {0.00, -0.42, 0.00},   // 10 R knee
      {0.00, -0.42, 0.00},   // 11 R foot
  };
  sk.limb_mask = {0, 0, 0, 1, 0, 1, 0, 1, 1, 0, 1, 1};
  sk.end_effectors = {8, 11, 3, 5};
  return sk;
}

int64_t Skeleton::pose_dim() const {
  return 6 + 3 + static_cast<int64_t>(joints) * 6 + shape_dim + 3 + 6 + 3 + 4;
}

std::vector<Vec3> Skeleton::rest_positions() const {
  std::vector<Vec3> pos(static_cast<size_t>(joints));
  for (int j = 0; j < joints; ++j) {
    const int p = parents[static_cast<size_t>(j)];
    pos[static_cast<size_t>(j)] =
        p < 0 ? offsets[static_cast<size_t>(j)]
              : vec3_add(pos[static_cast<size_t>(p)], offsets[static_cast<size_t>(j)]);
  }
  return pos;
}

double Skeleton::ground_height() const {
  double y = 0.0;
  for (const auto& p : rest_positions()) y = std::min(y, p[1]);
  return y;
}

ChannelLayout::ChannelLayout(const Skeleton& sk) {
  gv_orient = 0;
  root_vel = gv_orient + 6;
  joint_angles = root_vel + 3;
  shape = joint_angles + static_cast<int64_t>(sk.joints) * 6;
  root_transl = shape + sk.shape_dim;
  cam_orient = root_transl + 3;
  cam_transl = cam_orient + 6;
  contacts = cam_transl + 3;
  D = contacts + 4;
}

PoseFrame make_rest_frame(const Skeleton& sk) {
  PoseFrame f;
  f.joint_angles.assign(static_cast<size_t>(sk.joints), {1, 0, 0, 0, 1, 0});
  f.shape.assign(static_cast<size_t>(sk.shape_dim), 1.0);
  return f;
}

Tensor flatten(const MotionSequence& seq) {
  const Skeleton& sk = seq.skeleton;
  const ChannelLayout L(sk);
  const int64_t N = seq.length();
  if (N == 0) fail_value("flatten: empty motion sequence");
  Tensor x = Tensor::zeros({N, L.D});
  for (int64_t i = 0; i < N; ++i) {
    const PoseFrame& f = seq.frames[static_cast<size_t>(i)];
    if (static_cast<int>(f.joint_angles.size()) != sk.joints ||
        static_cast<int>(f.shape.size()) != sk.shape_dim) {
      fail_shape("flatten: frame ", i, " has ", f.joint_angles.size(), " joints / ",
                 f.shape.size(), " shape dims, skeleton expects ", sk.joints, "/", sk.shape_dim);
    }
    double* row = x.data() + i * L.D;
    for (int k = 0; k < 6; ++k) row[L.gv_orient + k] = f.gv_orient[static_cast<size_t>(k)];
    for (int k = 0; k < 3; ++k) row[L.root_vel + k] = f.root_vel[static_cast<size_t>(k)];
    for (int j = 0; j < sk.joints; ++j) {
      for (int k = 0; k < 6; ++k) {
        row[L.joint_angles + j * 6 + k] = f.joint_angles[static_cast<size_t>(j)][static_cast<size_t>(k)];
      }
    }
    for (int k = 0; k < sk.shape_dim; ++k) row[L.shape + k] = f.shape[static_cast<size_t>(k)];
    for (int k = 0; k < 3; ++k) row[L.root_transl + k] = f.root_transl[static_cast<size_t>(k)];
    for (int k = 0; k < 6; ++k) row[L.cam_orient + k] = f.cam_orient[static_cast<size_t>(k)];
    for (int k = 0; k < 3; ++k) row[L.cam_transl + k] = f.cam_transl[static_cast<size_t>(k)];
    for (int k = 0; k < 4; ++k) row[L.contacts + k] = f.contacts[static_cast<size_t>(k)];
  }
  return x;
}

MotionSequence unflatten(const Tensor& x, const Skeleton& sk, double fps) {
  const ChannelLayout L(sk);
  if (x.rank() != 2 || x.dim(1) != L.D) {
    fail_shape("unflatten: expected (N,", L.D, ") motion tensor, got ", shape_str(x.shape()));
  }
  MotionSequence seq;
  seq.skeleton = sk;
  seq.fps = fps;
  const int64_t N = x.dim(0);
  seq.frames.resize(static_cast<size_t>(N));
  for (int64_t i = 0; i < N; ++i) {
    PoseFrame& f = seq.frames[static_cast<size_t>(i)];
    const double* row = x.data() + i * L.D;
    for (int k = 0; k < 6; ++k) f.gv_orient[static_cast<size_t>(k)] = row[L.gv_orient + k];
    for (int k = 0; k < 3; ++k) f.root_vel[static_cast<size_t>(k)] = row[L.root_vel + k];
    f.joint_angles.resize(static_cast<size_t>(sk.joints));
    for (int j = 0; j < sk.joints; ++j) {
      for (int k = 0; k < 6; ++k) {
        f.joint_angles[static_cast<size_t>(j)][static_cast<size_t>(k)] = row[L.joint_angles + j * 6 + k];
      }
    }
    f.shape.resize(static_cast<size_t>(sk.shape_dim));
    for (int k = 0; k < sk.shape_dim; ++k) f.shape[static_cast<size_t>(k)] = row[L.shape + k];
    for (int k = 0; k < 3; ++k) f.root_transl[static_cast<size_t>(k)] = row[L.root_transl + k];
    for (int k = 0; k < 6; ++k) f.cam_orient[static_cast<size_t>(k)] = row[L.cam_orient + k];
    for (int k = 0; k < 3; ++k) f.cam_transl[static_cast<size_t>(k)] = row[L.cam_transl + k];
    for (int k = 0; k < 4; ++k) f.contacts[static_cast<size_t>(k)] = row[L.contacts + k];
  }
  return seq;
}

// ---------------------------------------------------------------------------
// Differentiable kinematics

Tensor fk_local_positions(const Tensor& theta, const Tensor& shape, const Skeleton& sk) {
  const int64_t N = theta.dim(0);
  if (theta.rank() != 2 || theta.dim(1) != static_cast<int64_t>(sk.joints) * 6) {
    fail_shape("fk_local_positions: theta ", shape_str(theta.shape()), " for ", sk.joints,
               " joints");
  }
  if (shape.rank() != 2 || shape.dim(0) != N || shape.dim(1) != sk.shape_dim) {
    fail_shape("fk_local_positions: shape factors ", shape_str(shape.shape()));
  }
  Tensor s_global = reshape(slice(shape, 1, 0, 1), {N});
  Tensor s_limb = s_global;
  if (sk.shape_dim >= 2) {
    s_limb = mul(s_global, reshape(slice(shape, 1, 1, 2), {N}));
  }
  std::vector<Tensor> pos(static_cast<size_t>(sk.joints));
  std::vector<Tensor> chain(static_cast<size_t>(sk.joints));
  for (int j = 0; j < sk.joints; ++j) {
    Tensor Rj = rot6d_decode(slice(theta, 1, j * 6, (j + 1) * 6));
    const int p = sk.parents[static_cast<size_t>(j)];
    if (p < 0) {
      pos[static_cast<size_t>(j)] = Tensor::zeros({N, 3});
      chain[static_cast<size_t>(j)] = Rj;
    } else {
      const Vec3& off = sk.offsets[static_cast<size_t>(j)];
      Tensor off_rows = add(Tensor::zeros({N, 3}), Tensor::from({3}, {off[0], off[1], off[2]}));
      Tensor scaled = row_scale(off_rows, sk.limb_mask[static_cast<size_t>(j)] ? s_limb : s_global);
      pos[static_cast<size_t>(j)] =
          add(pos[static_cast<size_t>(p)], mat3_apply(chain[static_cast<size_t>(p)], scaled));
      chain[static_cast<size_t>(j)] = mat3_mul(chain[static_cast<size_t>(p)], Rj);
    }
  }
  return concat(pos, 1);
}

Tensor pseudo_vertices(const Tensor& pos, const Skeleton& sk) {
  const int64_t N = pos.dim(0);
  if (pos.rank() != 2 || pos.dim(1) != static_cast<int64_t>(sk.joints) * 3) {
    fail_shape("pseudo_vertices: positions ", shape_str(pos.shape()));
  }
  std::vector<Tensor> verts;
  verts.reserve(static_cast<size_t>(sk.vertex_count()));
  for (int j = 1; j < sk.joints; ++j) {
    const int p = sk.parents[static_cast<size_t>(j)];
    Tensor pj = slice(pos, 1, j * 3, j * 3 + 3);
    Tensor pp = slice(pos, 1, p * 3, p * 3 + 3);
    Tensor diff = sub(pj, pp);
    for (int k = 1; k <= sk.bone_samples; ++k) {
      const double t = static_cast<double>(k) / static_cast<double>(sk.bone_samples + 1);
      verts.push_back(add(pp, scale(diff, t)));
    }
  }
  (void)N;
  return concat(verts, 1);
}

MotionDecode motion_decode(const Tensor& x, const Skeleton& sk) {
  const ChannelLayout L(sk);
  if (x.rank() != 2 || x.dim(1) != L.D) {
    fail_shape("motion_decode: expected (N,", L.D, ") tensor, got ", shape_str(x.shape()));
  }
  MotionDecode d;
  d.gv_R = rot6d_decode(slice(x, 1, L.gv_orient, L.gv_orient + 6));
  d.root_vel = slice(x, 1, L.root_vel, L.root_vel + 3);
  d.world_T = rollout_scan(d.gv_R, d.root_vel);
  Tensor theta = slice(x, 1, L.joint_angles, L.joint_angles + sk.joints * 6);
  Tensor shape = slice(x, 1, L.shape, L.shape + sk.shape_dim);
  d.local_pos = fk_local_positions(theta, shape, sk);
  Tensor t_root = slice(x, 1, L.root_transl, L.root_transl + 3);
  Tensor R_cw = rot6d_decode(slice(x, 1, L.cam_orient, L.cam_orient + 6));
  d.cam_R = mat3_mul(R_cw, d.gv_R, /*ta=*/true, /*tb=*/false);
  std::vector<Tensor> wj, cj;
  for (int j = 0; j < sk.joints; ++j) {
    Tensor lp = slice(d.local_pos, 1, j * 3, j * 3 + 3);
    wj.push_back(add(mat3_apply(d.gv_R, lp), d.world_T));
    cj.push_back(add(mat3_apply(d.cam_R, lp), t_root));
  }
  d.world_pos = concat(wj, 1);
  d.cam_pos = concat(cj, 1);
  d.world_verts = pseudo_vertices(d.world_pos, sk);
  d.cam_verts = pseudo_vertices(d.cam_pos, sk);
  d.contacts = slice(x, 1, L.contacts, L.contacts + 4);
  return d;
}

// ---------------------------------------------------------------------------
// Plain helpers

std::vector<double> world_joints(const MotionSequence& seq) {
  NoGradScope ng;
  MotionDecode d = motion_decode(flatten(seq), seq.skeleton);
  return d.world_pos.values();
}

std::vector<double> camera_joints(const MotionSequence& seq) {
  NoGradScope ng;
  MotionDecode d = motion_decode(flatten(seq), seq.skeleton);
  return d.cam_pos.values();
}

WorldTrajectory world_trajectory(const MotionSequence& seq) {
  const int64_t N = seq.length();
  WorldTrajectory traj;
  traj.R.resize(static_cast<size_t>(N));
  traj.T.resize(static_cast<size_t>(N));
  std::vector<double> r6(static_cast<size_t>(N) * 6);
  for (int64_t i = 0; i < N; ++i) {
    for (int k = 0; k < 6; ++k) {
      r6[static_cast<size_t>(i * 6 + k)] = seq.frames[static_cast<size_t>(i)].gv_orient[static_cast<size_t>(k)];
    }
  }
  std::vector<double> R(static_cast<size_t>(N) * 9);
  const int64_t bad = kernels::rot6d_decode_rows(N, r6.data(), R.data(), 1e-8);
  if (bad >= 0) fail_numeric("world_trajectory: degenerate gv_orient at frame ", bad);
  std::vector<double> v(static_cast<size_t>(N) * 3);
  for (int64_t i = 0; i < N; ++i) {
    for (int k = 0; k < 3; ++k) {
      v[static_cast<size_t>(i * 3 + k)] = seq.frames[static_cast<size_t>(i)].root_vel[static_cast<size_t>(k)];
    }
  }
  std::vector<double> T(static_cast<size_t>(N) * 3);
  kernels::rollout_scan(N, R.data(), v.data(), T.data());
  for (int64_t i = 0; i < N; ++i) {
    for (int k = 0; k < 9; ++k) traj.R[static_cast<size_t>(i)][static_cast<size_t>(k)] = R[static_cast<size_t>(i * 9 + k)];
    for (int k = 0; k < 3; ++k) traj.T[static_cast<size_t>(i)][static_cast<size_t>(k)] = T[static_cast<size_t>(i * 3 + k)];
  }
  return traj;
}

void set_world_trajectory(MotionSequence& seq, const WorldTrajectory& traj) {
  const int64_t N = seq.length();
  if (static_cast<int64_t>(traj.R.size()) != N || static_cast<int64_t>(traj.T.size()) != N) {
    fail_shape("set_world_trajectory: trajectory length ", traj.R.size(), " vs ", N, " frames");
  }
  if (N == 0) return;
  if (vec3_norm(traj.T[0]) > 1e-12) {
    fail_value("set_world_trajectory: T[0] must be the origin (got norm ",
               vec3_norm(traj.T[0]), ")");
  }
  for (int64_t i = 0; i < N; ++i) {
    const Mat3& R = traj.R[static_cast<size_t>(i)];
    if (mat3_ortho_error(R) > 1e-6) {
      fail_value("set_world_trajectory: non-orthonormal rotation at frame ", i);
    }
    const auto r6 = rot_to_6d(R);
    for (int k = 0; k < 6; ++k) seq.frames[static_cast<size_t>(i)].gv_orient[static_cast<size_t>(k)] = r6[static_cast<size_t>(k)];
    Vec3 step;
    if (i + 1 < N) {
      step = vec3_sub(traj.T[static_cast<size_t>(i + 1)], traj.T[static_cast<size_t>(i)]);
    } else if (N >= 2) {
      // Constant-world-velocity extrapolation for the final frame.
      step = vec3_sub(traj.T[static_cast<size_t>(N - 1)], traj.T[static_cast<size_t>(N - 2)]);
    } else {
      step = {0, 0, 0};
    }
    const Vec3 v = mat3_apply(mat3_transpose(R), step);
    for (int k = 0; k < 3; ++k) seq.frames[static_cast<size_t>(i)].root_vel[static_cast<size_t>(k)] = v[static_cast<size_t>(k)];
  }
}

void attach_camera(MotionSequence& seq, const std::vector<CameraPose>& cams) {
  const int64_t N = seq.length();
  if (static_cast<int64_t>(cams.size()) != N) {
    fail_shape("attach_camera: ", cams.size(), " poses for ", N, " frames");
  }
  const WorldTrajectory traj = world_trajectory(seq);
  for (int64_t i = 0; i < N; ++i) {
    const CameraPose& c = cams[static_cast<size_t>(i)];
    if (mat3_ortho_error(c.R) > 1e-6) {
      fail_value("attach_camera: non-orthonormal camera rotation at frame ", i);
    }
    PoseFrame& f = seq.frames[static_cast<size_t>(i)];
    const auto r6 = rot_to_6d(c.R);
    for (int k = 0; k < 6; ++k) f.cam_orient[static_cast<size_t>(k)] = r6[static_cast<size_t>(k)];
    for (int k = 0; k < 3; ++k) f.cam_transl[static_cast<size_t>(k)] = c.t[static_cast<size_t>(k)];
    const Vec3 rel = mat3_apply(mat3_transpose(c.R), vec3_sub(traj.T[static_cast<size_t>(i)], c.t));
    for (int k = 0; k < 3; ++k) f.root_transl[static_cast<size_t>(k)] = rel[static_cast<size_t>(k)];
  }
}

Mat3 look_at(const Vec3& eye, const Vec3& target) {
  const Vec3 z = vec3_normalize(vec3_sub(target, eye));
  const Vec3 down = {0, -1, 0};
  const Vec3 xr = vec3_cross(down, z);
  if (vec3_norm(xr) < 1e-6) fail_value("look_at: view direction is vertical");
  const Vec3 x = vec3_normalize(xr);
  const Vec3 y = vec3_cross(z, x);
  Mat3 R;
  for (int r = 0; r < 3; ++r) {
    R[static_cast<size_t>(r * 3 + 0)] = x[static_cast<size_t>(r)];
    R[static_cast<size_t>(r * 3 + 1)] = y[static_cast<size_t>(r)];
    R[static_cast<size_t>(r * 3 + 2)] = z[static_cast<size_t>(r)];
  }
  return R;
}

std::vector<std::array<double, 4>> detect_contacts(const MotionSequence& seq,
                                                   const ContactParams& cp) {
  const Skeleton& sk = seq.skeleton;
  const int64_t N = seq.length();
  const int64_t J = sk.joints;
  const std::vector<double> pos = world_joints(seq);
  const double ground = sk.ground_height();
  const double v_thresh = cp.v_thresh * (30.0 / seq.fps);
  std::vector<std::array<double, 4>> out(static_cast<size_t>(N));
  for (int64_t i = 0; i < N; ++i) {
    for (int e = 0; e < 4; ++e) {
      const int j = sk.end_effectors[static_cast<size_t>(e)];
      auto at = [&](int64_t frame, int axis) {
        return pos[static_cast<size_t>(frame * J * 3 + j * 3 + axis)];
      };
      const int64_t a = i > 0 ? i - 1 : 0;
      const int64_t b = i > 0 ? i : std::min<int64_t>(1, N - 1);
      const double dx = at(b, 0) - at(a, 0);
      const double dy = at(b, 1) - at(a, 1);
      const double dz = at(b, 2) - at(a, 2);
      const double speed = std::sqrt(dx * dx + dy * dy + dz * dz);
      const double height = at(i, 1) - ground;
      out[static_cast<size_t>(i)][static_cast<size_t>(e)] =
          (speed < v_thresh && height < cp.h_thresh) ? 1.0 : 0.0;
    }
  }
  return out;
}

}  // namespace mogen
