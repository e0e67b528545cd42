#pragma once

#include "wavearm/kinematics.hpp"
#include "wavearm/types.hpp"

namespace wavearm::dyn {

/// Configuration-dependent generalized inertia of the lumped arm (symmetric
/// positive definite).
Mat mass_matrix(const Vec& q, const SegmentGeometry& geom, const DynamicParams& params);

/// Coriolis/centrifugal matrix built from the Christoffel symbols of the mass
/// matrix, using analytic configuration derivatives of the node Jacobians;
/// Mdot - 2C is skew-symmetric to machine precision. This full-matrix form
/// exists for property checks and analysis; the simulation hot path gets the
/// Coriolis *force* far cheaper through LumpedModel.
Mat coriolis_matrix(const Vec& q, const Vec& qdot, const SegmentGeometry& geom,
                    const DynamicParams& params);

/// Linear elastic restoring generalized force K(q) = diag(k) q.
Vec stiffness_vector(const Vec& q, const DynamicParams& params);

/// Net weight-minus-buoyancy generalized force (gradient of the hydrostatic
/// potential): positive entries resist configurations that raise a heavy
/// arm's nodes.
Vec gravity_buoyancy(const Vec& q, const SegmentGeometry& geom,
                     const DynamicParams& params, const BasePose& base);

/// Joint accelerations from the equation of motion
///   (M + added) qdd = tau + f_ext - C qd - D qd - K - G,
/// solved with a Cholesky factorization; throws std::runtime_error when the
/// effective inertia is not positive definite.
Vec forward_dynamics(const Vec& q, const Vec& qdot, const Vec& tau, const Vec& f_ext,
                     const Mat& added_inertia, const SegmentGeometry& geom,
                     const DynamicParams& params, const BasePose& base);

/// Workspace-reusing assembler for the equation-of-motion terms: one node
/// sweep per evaluation fills the mass matrix and the bias force, plus
/// (optionally) the generalized added-mass inertia. The Coriolis force is
/// accumulated directly as sum_j m_j J_j^T (Jdot_j qdot) -- the contraction
/// of the Christoffel form with qdot -- so no per-coordinate Jacobian
/// derivatives are needed. Built for the derivative callbacks of the plant
/// and the controller's prediction model, where these quantities are needed
/// thousands of times per second; eval() performs no heap allocation after
/// the first call.
class LumpedModel {
public:
  explicit LumpedModel(ArmModel model);

  struct Terms {
    Mat mass;          ///< M(q)
    Vec bias;          ///< C qd + D qd + K(q) + G(q)
    Mat added_inertia; ///< generalized added mass, zero unless requested
  };

  /// Runs the node sweep and assembles all terms. `with_added_inertia` folds
  /// in the hydrodynamic added mass (isotropic scaling of M for the scalar
  /// added-mass coefficient used here). The sweep retained in `nodes()`
  /// carries positions, tangents, Jacobians, and Jdot*qdot per node, ready
  /// for fluid-load assembly at the same state.
  const Terms& eval(const Vec& q, const Vec& qdot, bool with_added_inertia);

  /// Accelerations using the most recent eval()'s terms.
  Vec accel(const Vec& tau, const Vec& f_ext);

  /// Accelerations with a caller-supplied added inertia (overrides the
  /// eval-time choice; pass the hydro module's congruence here).
  Vec accel(const Vec& tau, const Vec& f_ext, const Mat& added_inertia);

  const ArmModel& model() const { return model_; }
  const kin::NodeSweep& nodes() const { return sweep_; }

  /// Lumped point mass of one node (kg).
  double node_mass() const { return node_mass_; }
  /// Net gravity-minus-buoyancy weight of one node (N, positive = sinking).
  double node_weight() const { return node_weight_; }

private:
  ArmModel model_;
  kin::NodeSweep sweep_;
  Terms terms_;
  Vec solve_rhs_;
  Mat solve_llt_;
  double node_mass_ = 0.0;
  double node_weight_ = 0.0;
  double added_scale_ = 0.0; // added inertia = added_scale * M for scalar Cm
};

} // namespace wavearm::dyn
