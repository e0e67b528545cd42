#pragma once

#include <functional>

#include "wavearm/kinematics.hpp"
#include "wavearm/types.hpp"
#include "wavearm/waves.hpp"

namespace wavearm::hydro {

/// One slender-body element for drag evaluation.
struct ElementState {
  Vec2 position = Vec2::Zero();
  double theta = 0.0;          ///< tangent angle (rad, world frame)
  Vec2 velocity = Vec2::Zero(); ///< body velocity at the element (m/s, world)
  double area = 0.0;           ///< incident area d_s * dL (m^2)
};

/// Per-segment added-mass matrix (kg): (pi d^2/4) L rho_f diag(Cm, Cm).
Mat2 added_mass_matrix(const SegmentGeometry& geom, const HydroCoeffs& coeffs);

/// Quadratic drag on one element: relative velocity is split into normal and
/// tangential parts in the element frame, loaded with C_d and C_f
/// respectively, and rotated back to the world frame. Opposes relative motion.
Vec2 drag_force(const ElementState& elem, const Vec2& fluid_velocity,
                const HydroCoeffs& coeffs);

/// Generalized fluid loading on the arm.
struct Disturbance {
  Vec force;         ///< joint-space drag (+ convective added-mass) torque
  Mat added_inertia; ///< configuration-dependent generalized added mass
};

/// Local flow sample; acceleration is only consumed when
/// HydroCoeffs::include_fluid_acceleration is set.
struct FlowSample {
  Vec2 velocity = Vec2::Zero();
  Vec2 acceleration = Vec2::Zero();
};

using FlowField = std::function<FlowSample(double x, double z)>;

/// Assembles the generalized disturbance from an already-computed node sweep
/// (must carry Jacobian rates). This is the hot-path entry: the plant
/// derivative shares one sweep between inertia assembly and fluid loading.
void disturbance_from_nodes(const kin::NodeSweep& nodes, const Vec& qdot,
                            const FlowField& flow, const SegmentGeometry& geom,
                            const HydroCoeffs& coeffs, Disturbance& out);

/// Fluid loading under an arbitrary steady/unsteady flow field (evaluated at
/// one instant). Runs its own sweep.
Disturbance generalized_disturbance_field(const Vec& q, const Vec& qdot,
                                          const FlowField& flow, const BasePose& base,
                                          const SegmentGeometry& geom,
                                          const HydroCoeffs& coeffs,
                                          const DynamicParams& params);

/// Fluid loading under a synthesized sea state at time t.
Disturbance generalized_disturbance(const Vec& q, const Vec& qdot, const SeaState& sea,
                                    double t, const BasePose& base,
                                    const SegmentGeometry& geom,
                                    const HydroCoeffs& coeffs,
                                    const DynamicParams& params);

} // namespace wavearm::hydro
