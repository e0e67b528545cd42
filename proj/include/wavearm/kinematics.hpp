#pragma once

#include "wavearm/types.hpp"

namespace wavearm::kin {

/// Task-space sample of the arm: a world-frame point and the tangent angle.
struct PointPose {
  Vec2 position;
  double tangent = 0.0;
};

/// Chord of a constant-curvature arc together with its first and second
/// derivatives with respect to the segment bending angle. `frac` is the
/// arc-length fraction in [0,1]; the arc bends by `bend * frac` over length
/// `seg_length * frac`.
struct ArcTerms {
  Vec2 chord;
  Vec2 d_chord;  ///< d(chord)/d(bend)
  Vec2 d2_chord; ///< d^2(chord)/d(bend)^2
};

ArcTerms arc_terms(double heading, double bend, double seg_length, double frac);

/// World-frame position and tangent at arc-length fraction s of `segment`
/// (0-based). Smooth across zero curvature.
PointPose forward_kinematics(const Vec& q, int segment, double s,
                             const BasePose& base, const SegmentGeometry& geom);

/// 2 x n task Jacobian d(position)/dq at the same evaluation point. Columns
/// for segments distal to the point are zero.
Mat jacobian(const Vec& q, int segment, double s, const BasePose& base,
             const SegmentGeometry& geom);

/// Time derivative of the Jacobian along qdot, computed analytically.
Mat jacobian_rate(const Vec& q, const Vec& qdot, int segment, double s,
                  const BasePose& base, const SegmentGeometry& geom);

/// Batched kinematics at the lumped nodes (arc-length midpoints of
/// nodes_per_segment subintervals on every segment), laid out segment-major.
struct NodeSweep {
  int segments = 0;
  int nodes_per_segment = 0;

  std::vector<Vec2> position;
  std::vector<double> tangent;
  std::vector<Mat> jac;                    ///< per node, 2 x n
  std::vector<Vec2> rate_bias;             ///< per node, Jdot*qdot
  std::vector<std::vector<Mat>> jac_dirs;  ///< per node, per direction, 2 x n
  std::vector<Mat> jac_rate;               ///< per node, 2 x n (along qdot)

  int node_count() const { return segments * nodes_per_segment; }
};

struct SweepRequest {
  bool coordinate_dirs = false; ///< fill jac_dirs with dJ/dq_k for all k
  const Vec* qdot = nullptr;    ///< fill rate_bias along this rate if non-null
  bool rate_matrices = false;   ///< additionally fill the full jac_rate
};

void sweep_nodes(const Vec& q, const BasePose& base, const SegmentGeometry& geom,
                 int nodes_per_segment, const SweepRequest& req, NodeSweep& out);

} // namespace wavearm::kin
