// SPDX-License-Identifier: Apache-2.0
#include "mogen/metrics.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <limits>

#include "mogen/common.hpp"

namespace mogen {

namespace {

void check_pos(const std::vector<double>& pos, int64_t n, int joints, const char* who) {
  if (static_cast<int64_t>(pos.size()) != n * joints * 3) {
    fail_shape(who, ": positions hold ", pos.size(), " values, want ", n * joints * 3);
  }
  if (n < 1 || joints < 1) fail_value(who, ": empty input");
}

Eigen::Map<const Eigen::Matrix<double, Eigen::Dynamic, 3, Eigen::RowMajor>> as_points(
    const double* p, int64_t n) {
  return {p, n, 3};
}

}  // namespace

RigidTransform fit_rigid(const double* P, const double* Q, int64_t n, bool with_scale) {
  if (n < 1) fail_value("fit_rigid: no points");
  const auto p = as_points(P, n), q = as_points(Q, n);
  const Eigen::RowVector3d pm = p.colwise().mean(), qm = q.colwise().mean();
  const auto pc = (p.rowwise() - pm).eval(), qc = (q.rowwise() - qm).eval();
  const Eigen::Matrix3d H = pc.transpose() * qc;
  Eigen::JacobiSVD<Eigen::Matrix3d> svd(H, Eigen::ComputeFullU | Eigen::ComputeFullV);
  Eigen::Vector3d d(1, 1, 1);
  d(2) = (svd.matrixV() * svd.matrixU().transpose()).determinant() < 0 ? -1.0 : 1.0;
  const Eigen::Matrix3d R = svd.matrixV() * d.asDiagonal() * svd.matrixU().transpose();
  RigidTransform out;
  double s = 1.0;
  if (with_scale) {
    const double denom = pc.squaredNorm();
    s = denom > 1e-12 ? (svd.singularValues().dot(d)) / denom : 1.0;
  }
  out.scale = s;
  for (int r = 0; r < 3; ++r) {
    for (int c = 0; c < 3; ++c) out.R[static_cast<size_t>(r * 3 + c)] = R(r, c);
  }
  const Eigen::Vector3d t = qm.transpose() - s * R * pm.transpose();
  out.t = {t(0), t(1), t(2)};
  return out;
}

void apply_rigid(const RigidTransform& a, const double* p, double* out, int64_t n) {
  for (int64_t i = 0; i < n; ++i) {
    const Vec3 v{p[i * 3], p[i * 3 + 1], p[i * 3 + 2]};
    const Vec3 r = vec3_add(vec3_scale(mat3_apply(a.R, v), a.scale), a.t);
    out[i * 3] = r[0];
    out[i * 3 + 1] = r[1];
    out[i * 3 + 2] = r[2];
  }
}

double mpjpe(const std::vector<double>& pred, const std::vector<double>& gt, int64_t n,
             int joints) {
  check_pos(pred, n, joints, "mpjpe");
  check_pos(gt, n, joints, "mpjpe");
  double acc = 0.0;
  for (int64_t i = 0; i < n; ++i) {
    const double* pf = pred.data() + i * joints * 3;
    const double* gf = gt.data() + i * joints * 3;
    for (int j = 0; j < joints; ++j) {
      double d2 = 0.0;
      for (int c = 0; c < 3; ++c) {
        const double e = (pf[j * 3 + c] - pf[c]) - (gf[j * 3 + c] - gf[c]);
        d2 += e * e;
      }
      acc += std::sqrt(d2);
    }
  }
  return 1000.0 * acc / static_cast<double>(n * joints);
}

double pa_mpjpe(const std::vector<double>& pred, const std::vector<double>& gt, int64_t n,
                int joints) {
  check_pos(pred, n, joints, "pa_mpjpe");
  check_pos(gt, n, joints, "pa_mpjpe");
  std::vector<double> aligned(static_cast<size_t>(joints) * 3);
  double acc = 0.0;
  for (int64_t i = 0; i < n; ++i) {
    const double* pf = pred.data() + i * joints * 3;
    const double* gf = gt.data() + i * joints * 3;
    const RigidTransform a = fit_rigid(pf, gf, joints, /*with_scale=*/true);
    apply_rigid(a, pf, aligned.data(), joints);
    for (int j = 0; j < joints; ++j) {
      double d2 = 0.0;
      for (int c = 0; c < 3; ++c) {
        const double e = aligned[static_cast<size_t>(j * 3 + c)] - gf[j * 3 + c];
        d2 += e * e;
      }
      acc += std::sqrt(d2);
    }
  }
  return 1000.0 * acc / static_cast<double>(n * joints);
}

namespace {

// Segments of at most `segment` frames; a tail under 25 frames joins the
// previous segment rather than standing alone.
std::vector<std::pair<int64_t, int64_t>> make_segments(int64_t n, int64_t segment) {
  std::vector<std::pair<int64_t, int64_t>> segs;
  int64_t at = 0;
  while (at < n) {
    const int64_t len = std::min(segment, n - at);
    segs.emplace_back(at, len);
    at += len;
  }
  if (segs.size() > 1 && segs.back().second < 25) {
    segs[segs.size() - 2].second += segs.back().second;
    segs.pop_back();
  }
  return segs;
}

double segment_mpjpe(const std::vector<double>& pred, const std::vector<double>& gt, int64_t n,
                     int joints, int64_t segment, bool align_all, const char* who) {
  check_pos(pred, n, joints, who);
  check_pos(gt, n, joints, who);
  if (n < 2) fail_value(who, ": need at least 2 frames");
  double acc = 0.0;
  std::vector<double> aligned;
  for (const auto& [start, len] : make_segments(n, segment)) {
    const double* ps = pred.data() + start * joints * 3;
    const double* gs = gt.data() + start * joints * 3;
    const int64_t fit_frames = align_all ? len : std::min<int64_t>(2, len);
    const RigidTransform a = fit_rigid(ps, gs, fit_frames * joints, /*with_scale=*/false);
    aligned.resize(static_cast<size_t>(len * joints * 3));
    apply_rigid(a, ps, aligned.data(), len * joints);
    for (int64_t k = 0; k < len * joints; ++k) {
      double d2 = 0.0;
      for (int c = 0; c < 3; ++c) {
        const double e = aligned[static_cast<size_t>(k * 3 + c)] - gs[k * 3 + c];
        d2 += e * e;
      }
      acc += std::sqrt(d2);
    }
  }
  return 1000.0 * acc / static_cast<double>(n * joints);
}

}  // namespace

double w_mpjpe(const std::vector<double>& pred, const std::vector<double>& gt, int64_t n,
               int joints, int64_t segment) {
  return segment_mpjpe(pred, gt, n, joints, segment, /*align_all=*/false, "w_mpjpe");
}

double wa_mpjpe(const std::vector<double>& pred, const std::vector<double>& gt, int64_t n,
                int joints, int64_t segment) {
  return segment_mpjpe(pred, gt, n, joints, segment, /*align_all=*/true, "wa_mpjpe");
}

double rte_percent(const std::vector<double>& pred, const std::vector<double>& gt, int64_t n,
                   int joints) {
  check_pos(pred, n, joints, "rte");
  check_pos(gt, n, joints, "rte");
  if (n < 2) fail_value("rte: need at least 2 frames");
  const auto root = [joints](const std::vector<double>& p, int64_t i) {
    return Vec3{p[static_cast<size_t>(i * joints * 3)], p[static_cast<size_t>(i * joints * 3 + 1)],
                p[static_cast<size_t>(i * joints * 3 + 2)]};
  };
  double path = 0.0;
  for (int64_t i = 0; i + 1 < n; ++i) {
    path += vec3_norm(vec3_sub(root(gt, i + 1), root(gt, i)));
  }
  if (path < 1e-9) fail_value("rte: ground-truth root does not move");
  const Vec3 dp = vec3_sub(root(pred, n - 1), root(pred, 0));
  const Vec3 dg = vec3_sub(root(gt, n - 1), root(gt, 0));
  return 100.0 * vec3_norm(vec3_sub(dp, dg)) / path;
}

double accel_error(const std::vector<double>& pred, const std::vector<double>& gt, int64_t n,
                   int joints) {
  check_pos(pred, n, joints, "accel_error");
  check_pos(gt, n, joints, "accel_error");
  if (n < 3) fail_value("accel_error: need at least 3 frames");
  const int64_t stride = joints * 3;
  double acc = 0.0;
  for (int64_t i = 1; i + 1 < n; ++i) {
    for (int j = 0; j < joints; ++j) {
      double d2 = 0.0;
      for (int c = 0; c < 3; ++c) {
        const int64_t k = i * stride + j * 3 + c;
        const double ap = pred[static_cast<size_t>(k + stride)] - 2.0 * pred[static_cast<size_t>(k)] +
                          pred[static_cast<size_t>(k - stride)];
        const double ag = gt[static_cast<size_t>(k + stride)] - 2.0 * gt[static_cast<size_t>(k)] +
                          gt[static_cast<size_t>(k - stride)];
        d2 += (ap - ag) * (ap - ag);
      }
      acc += std::sqrt(d2);
    }
  }
  return 1000.0 * acc / static_cast<double>((n - 2) * joints);
}

double jitter(const std::vector<double>& pos, int64_t n, int joints, double fps) {
  check_pos(pos, n, joints, "jitter");
  if (n < 4) fail_value("jitter: need at least 4 frames");
  const int64_t stride = joints * 3;
  double acc = 0.0;
  for (int64_t i = 0; i + 3 < n; ++i) {
    for (int j = 0; j < joints; ++j) {
      double d2 = 0.0;
      for (int c = 0; c < 3; ++c) {
        const int64_t k = i * stride + j * 3 + c;
        const double jr = pos[static_cast<size_t>(k + 3 * stride)] -
                          3.0 * pos[static_cast<size_t>(k + 2 * stride)] +
                          3.0 * pos[static_cast<size_t>(k + stride)] - pos[static_cast<size_t>(k)];
        d2 += jr * jr;
      }
      acc += std::sqrt(d2);
    }
  }
  return fps * fps * fps * acc / static_cast<double>((n - 3) * joints);
}

double foot_sliding(const std::vector<double>& pos,
                    const std::vector<std::array<double, 4>>& contacts, int64_t n,
                    const Skeleton& sk) {
  check_pos(pos, n, sk.joints, "foot_sliding");
  if (static_cast<int64_t>(contacts.size()) != n) {
    fail_shape("foot_sliding: ", contacts.size(), " contact rows for ", n, " frames");
  }
  const int64_t stride = sk.joints * 3;
  double acc = 0.0;
  int64_t hits = 0;
  for (int64_t i = 0; i + 1 < n; ++i) {
    for (int side = 0; side < 2; ++side) {
      if (contacts[static_cast<size_t>(i)][static_cast<size_t>(side)] <= 0.5) continue;
      const int64_t k = i * stride + sk.end_effectors[static_cast<size_t>(side)] * 3;
      const double dx = pos[static_cast<size_t>(k + stride)] - pos[static_cast<size_t>(k)];
      const double dz = pos[static_cast<size_t>(k + stride + 2)] - pos[static_cast<size_t>(k + 2)];
      acc += std::sqrt(dx * dx + dz * dz);
      ++hits;
    }
  }
  return hits == 0 ? 0.0 : 1000.0 * acc / static_cast<double>(hits);
}

std::vector<double> joint_speed_profile(const std::vector<double>& pos, int64_t n, int joints) {
  check_pos(pos, n, joints, "joint_speed_profile");
  if (n < 2) fail_value("joint_speed_profile: need at least 2 frames");
  const int64_t stride = joints * 3;
  std::vector<double> v(static_cast<size_t>(n - 1), 0.0);
  for (int64_t i = 0; i + 1 < n; ++i) {
    double s = 0.0;
    for (int j = 0; j < joints; ++j) {
      double d2 = 0.0;
      for (int c = 0; c < 3; ++c) {
        const double d =
            pos[static_cast<size_t>((i + 1) * stride + j * 3 + c)] - pos[static_cast<size_t>(i * stride + j * 3 + c)];
        d2 += d * d;
      }
      s += std::sqrt(d2);
    }
    v[static_cast<size_t>(i)] = s / static_cast<double>(joints);
  }
  return v;
}

double beat_alignment_from_speed(const std::vector<double>& speed,
                                 const std::vector<int64_t>& beats, double sigma) {
  if (beats.empty()) fail_value("beat_alignment: no beats");
  if (speed.size() < 3) fail_value("beat_alignment: speed profile too short");
  std::vector<int64_t> minima;
  const int64_t m = static_cast<int64_t>(speed.size());
  for (int64_t i = 0; i < m; ++i) {
    // boundary samples need a strict drop toward their only neighbor, so a
    // flat profile yields no minima at all
    const bool left_ok = i > 0 ? speed[static_cast<size_t>(i)] < speed[static_cast<size_t>(i - 1)]
                               : speed[0] < speed[1];
    const bool right_ok = i < m - 1
                              ? speed[static_cast<size_t>(i)] <= speed[static_cast<size_t>(i + 1)]
                              : speed[static_cast<size_t>(i)] < speed[static_cast<size_t>(i - 1)];
    if (left_ok && right_ok) minima.push_back(i);
  }
  if (minima.empty()) return 0.0;
  double acc = 0.0;
  for (int64_t k : minima) {
    double best = std::numeric_limits<double>::infinity();
    for (int64_t b : beats) best = std::min(best, std::fabs(static_cast<double>(k - b)));
    acc += std::exp(-best * best / (2.0 * sigma * sigma));
  }
  return acc / static_cast<double>(minima.size());
}

double beat_alignment(const std::vector<double>& pos, int64_t n, int joints,
                      const std::vector<int64_t>& beats, double sigma) {
  return beat_alignment_from_speed(joint_speed_profile(pos, n, joints), beats, sigma);
}

std::vector<double> kinetic_features(const std::vector<double>& pos, int64_t n, int joints) {
  check_pos(pos, n, joints, "kinetic_features");
  if (n < 2) fail_value("kinetic_features: need at least 2 frames");
  const int64_t stride = joints * 3;
  std::vector<double> f(static_cast<size_t>(joints), 0.0);
  for (int64_t i = 0; i + 1 < n; ++i) {
    for (int j = 0; j < joints; ++j) {
      double d2 = 0.0;
      for (int c = 0; c < 3; ++c) {
        const double d =
            pos[static_cast<size_t>((i + 1) * stride + j * 3 + c)] - pos[static_cast<size_t>(i * stride + j * 3 + c)];
        d2 += d * d;
      }
      f[static_cast<size_t>(j)] += d2;
    }
  }
  for (auto& x : f) x /= static_cast<double>(n - 1);
  return f;
}

namespace {

Eigen::MatrixXd to_matrix(const std::vector<std::vector<double>>& rows, const char* who) {
  if (rows.size() < 2) fail_value(who, ": need at least 2 feature vectors");
  const int64_t dim = static_cast<int64_t>(rows[0].size());
  Eigen::MatrixXd m(static_cast<int64_t>(rows.size()), dim);
  for (size_t i = 0; i < rows.size(); ++i) {
    if (static_cast<int64_t>(rows[i].size()) != dim) {
      fail_shape(who, ": inconsistent feature dimension at row ", i);
    }
    for (int64_t j = 0; j < dim; ++j) m(static_cast<int64_t>(i), j) = rows[i][static_cast<size_t>(j)];
  }
  return m;
}

Eigen::MatrixXd psd_sqrt(const Eigen::MatrixXd& m) {
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(0.5 * (m + m.transpose()));
  Eigen::VectorXd lam = es.eigenvalues().cwiseMax(0.0).cwiseSqrt();
  return es.eigenvectors() * lam.asDiagonal() * es.eigenvectors().transpose();
}

}  // namespace

double frechet_distance(const std::vector<std::vector<double>>& a,
                        const std::vector<std::vector<double>>& b) {
  const Eigen::MatrixXd ma = to_matrix(a, "frechet_distance");
  const Eigen::MatrixXd mb = to_matrix(b, "frechet_distance");
  if (ma.cols() != mb.cols()) fail_shape("frechet_distance: dimension mismatch");
  const Eigen::RowVectorXd mua = ma.colwise().mean(), mub = mb.colwise().mean();
  const Eigen::MatrixXd ca =
      (ma.rowwise() - mua).transpose() * (ma.rowwise() - mua) / static_cast<double>(ma.rows() - 1);
  const Eigen::MatrixXd cb =
      (mb.rowwise() - mub).transpose() * (mb.rowwise() - mub) / static_cast<double>(mb.rows() - 1);
  const Eigen::MatrixXd sa = psd_sqrt(ca);
  const Eigen::MatrixXd cross = psd_sqrt(sa * cb * sa);
  const double trace_term = ca.trace() + cb.trace() - 2.0 * cross.trace();
  return (mua - mub).squaredNorm() + trace_term;
}

double diversity(const std::vector<std::vector<double>>& feats) {
  if (feats.size() < 2) return 0.0;
  double acc = 0.0;
  int64_t pairs = 0;
  for (size_t i = 0; i < feats.size(); ++i) {
    for (size_t j = i + 1; j < feats.size(); ++j) {
      if (feats[i].size() != feats[j].size()) fail_shape("diversity: dimension mismatch");
      double d2 = 0.0;
      for (size_t c = 0; c < feats[i].size(); ++c) {
        d2 += (feats[i][c] - feats[j][c]) * (feats[i][c] - feats[j][c]);
      }
      acc += std::sqrt(d2);
      ++pairs;
    }
  }
  return acc / static_cast<double>(pairs);
}

}  // namespace mogen
