#include "wavearm/hydro.hpp"

#include <cmath>
#include <stdexcept>

namespace wavearm::hydro {

Mat2 added_mass_matrix(const SegmentGeometry& geom, const HydroCoeffs& coeffs) {
  const double entry = 0.25 * kPi * geom.diameter * geom.diameter * geom.length *
                       coeffs.rho_fluid * coeffs.cm();
  return entry * Mat2::Identity();
}

Vec2 drag_force(const ElementState& elem, const Vec2& fluid_velocity,
                const HydroCoeffs& coeffs) {
  const Vec2 tangent(std::cos(elem.theta), std::sin(elem.theta));
  const Vec2 normal(-tangent.y(), tangent.x());
  const Vec2 rel = elem.velocity - fluid_velocity;
  const double vn = normal.dot(rel);
  const double vt = tangent.dot(rel);
  const double scale = -0.5 * coeffs.rho_fluid * elem.area;
  const double fn = scale * coeffs.cd * std::abs(vn) * vn;
  const double ft = scale * coeffs.cf * std::abs(vt) * vt;
  return fn * normal + ft * tangent;
}

void disturbance_from_nodes(const kin::NodeSweep& nodes, const Vec& qdot,
                            const FlowField& flow, const SegmentGeometry& geom,
                            const HydroCoeffs& coeffs, Disturbance& out) {
  const int n = nodes.segments;
  const int total = nodes.node_count();
  if (static_cast<int>(nodes.rate_bias.size()) != total)
    throw std::invalid_argument("node sweep is missing Jacobian rate biases");
  if (qdot.size() != n) throw std::invalid_argument("qdot size does not match sweep");

  const double dl = geom.length / nodes.nodes_per_segment;
  const double v_el = 0.25 * kPi * geom.diameter * geom.diameter * dl;
  const double ma_el = coeffs.rho_fluid * v_el * coeffs.cm();

  if (out.force.size() != n) out.force.resize(n);
  if (out.added_inertia.rows() != n) out.added_inertia.resize(n, n);
  out.force.setZero();
  out.added_inertia.setZero();

  ElementState elem;
  elem.area = geom.diameter * dl;
  for (int j = 0; j < total; ++j) {
    const Mat& jac = nodes.jac[j];
    elem.position = nodes.position[j];
    elem.theta = nodes.tangent[j];
    elem.velocity.noalias() = jac * qdot;
    const FlowSample sample = flow(elem.position.x(), elem.position.y());
    Vec2 f = drag_force(elem, sample.velocity, coeffs);
    if (coeffs.include_fluid_acceleration) f += ma_el * sample.acceleration;
    // convective part of the added-mass reaction, from the Jacobian rate
    f -= ma_el * nodes.rate_bias[j];
    out.force.noalias() += jac.transpose() * f;
    out.added_inertia.noalias() += ma_el * jac.transpose() * jac;
  }
}

Disturbance generalized_disturbance_field(const Vec& q, const Vec& qdot,
                                          const FlowField& flow, const BasePose& base,
                                          const SegmentGeometry& geom,
                                          const HydroCoeffs& coeffs,
                                          const DynamicParams& params) {
  kin::NodeSweep sweep;
  kin::SweepRequest req;
  req.qdot = &qdot;
  kin::sweep_nodes(q, base, geom, params.nodes_per_segment, req, sweep);
  Disturbance out;
  disturbance_from_nodes(sweep, qdot, flow, geom, coeffs, out);
  return out;
}

Disturbance generalized_disturbance(const Vec& q, const Vec& qdot, const SeaState& sea,
                                    double t, const BasePose& base,
                                    const SegmentGeometry& geom,
                                    const HydroCoeffs& coeffs,
                                    const DynamicParams& params) {
  const bool with_acc = coeffs.include_fluid_acceleration;
  FlowField flow = [&sea, t, with_acc](double x, double z) {
    FlowSample s;
    s.velocity = particle_velocity(sea, x, z, t);
    if (with_acc) s.acceleration = particle_acceleration(sea, x, z, t);
    return s;
  };
  return generalized_disturbance_field(q, qdot, flow, base, geom, coeffs, params);
}

} // namespace wavearm::hydro
