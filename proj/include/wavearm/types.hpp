#pragma once

#include <Eigen/Core>

#include <numbers>
#include <vector>

namespace wavearm {

using Vec = Eigen::VectorXd;
using Mat = Eigen::MatrixXd;
using Vec2 = Eigen::Vector2d;
using Mat2 = Eigen::Matrix2d;

/// Joint-space torques (or any generalized force), one entry per segment.
using GeneralizedForce = Eigen::VectorXd;

inline constexpr double kPi = std::numbers::pi;

/// Shared geometry of the identical bending segments.
struct SegmentGeometry {
  double length = 0.3;    ///< segment length L, m
  double diameter = 0.05; ///< cross-section diameter d_s, m
  int count = 3;          ///< number of segments n
};

/// Mount point of the arm. World frame: x surge, z up, z = 0 at the
/// still-water line, so a submerged mount has position.z() < 0.
struct BasePose {
  Vec2 position{0.0, -4.0};
  double heading = -kPi / 2.0; ///< tangent direction at the mount, rad
};

/// Robot state: per-segment bending angles and their rates.
struct ArmState {
  Vec q;
  Vec qdot;
};

struct DynamicParams {
  double rho_body = 1100.0;  ///< body density, kg/m^3
  double rho_fluid = 1025.0; ///< fluid density for buoyancy, kg/m^3
  double gravity = 9.81;     ///< m/s^2
  Vec stiffness;             ///< per-joint elastic stiffness, N*m/rad
  Vec damping;               ///< per-joint viscous damping, N*m*s/rad
  int nodes_per_segment = 10;
};

struct HydroCoeffs {
  double cd = 1.1;           ///< normal drag coefficient C_d
  double cf = 0.05;          ///< tangential friction coefficient C_f
  double ca = 1.0;           ///< added-mass coefficient C_a (C_m = 1 + C_a)
  double rho_fluid = 1025.0; ///< kg/m^3
  /// Adds the fluid-acceleration (Froude-Krylov) term to the element force.
  /// Off by default: the disturbance model uses body acceleration only.
  bool include_fluid_acceleration = false;

  double cm() const { return 1.0 + ca; }
};

/// Everything the plant and the prediction model share.
struct ArmModel {
  SegmentGeometry geom;
  BasePose base;
  DynamicParams dyn;
  HydroCoeffs hydro;
};

/// Default three-segment arm used across the experiments.
ArmModel default_arm_model(int segments = 3);

/// Throws std::invalid_argument unless q/qdot sizes match the geometry and
/// every entry is finite.
void validate_state(const Vec& q, const Vec& qdot, const SegmentGeometry& geom);

} // namespace wavearm
