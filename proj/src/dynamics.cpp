#include "wavearm/dynamics.hpp"

#include <Eigen/Cholesky>
#include <cmath>
#include <stdexcept>

namespace wavearm::dyn {

namespace {

double element_volume(const SegmentGeometry& geom, const DynamicParams& params) {
  return 0.25 * kPi * geom.diameter * geom.diameter * geom.length /
         params.nodes_per_segment;
}

void check_sizes(const Vec& q, const SegmentGeometry& geom, const DynamicParams& params) {
  if (q.size() != geom.count)
    throw std::invalid_argument("q size does not match segment count");
  if (params.stiffness.size() != geom.count || params.damping.size() != geom.count)
    throw std::invalid_argument("stiffness/damping size does not match segment count");
  if (params.nodes_per_segment < 4)
    throw std::invalid_argument("nodes_per_segment must be at least 4");
}

} // namespace

Mat mass_matrix(const Vec& q, const SegmentGeometry& geom, const DynamicParams& params) {
  check_sizes(q, geom, params);
  const double m_el = params.rho_body * element_volume(geom, params);
  kin::NodeSweep sweep;
  kin::sweep_nodes(q, BasePose{}, geom, params.nodes_per_segment, {}, sweep);
  Mat m = Mat::Zero(geom.count, geom.count);
  for (const Mat& jac : sweep.jac) m.noalias() += m_el * jac.transpose() * jac;
  return m;
}

Mat coriolis_matrix(const Vec& q, const Vec& qdot, const SegmentGeometry& geom,
                    const DynamicParams& params) {
  check_sizes(q, geom, params);
  if (qdot.size() != q.size())
    throw std::invalid_argument("qdot size does not match q");
  const int n = geom.count;
  const double m_el = params.rho_body * element_volume(geom, params);

  kin::NodeSweep sweep;
  kin::SweepRequest req;
  req.coordinate_dirs = true;
  kin::sweep_nodes(q, BasePose{}, geom, params.nodes_per_segment, req, sweep);

  std::vector<Mat> dmass(n, Mat::Zero(n, n));
  Mat scratch(n, n);
  for (int j = 0; j < sweep.node_count(); ++j) {
    const Mat& jac = sweep.jac[j];
    for (int k = 0; k < n; ++k) {
      scratch.noalias() = sweep.jac_dirs[j][k].transpose() * jac;
      dmass[k].noalias() += m_el * (scratch + scratch.transpose());
    }
  }

  // Christoffel form: C = (Mdot + S - S^T)/2 with S.col(k) = (dM/dq_k) qdot;
  // Mdot - 2C = S^T - S is then skew-symmetric by construction.
  Mat c = Mat::Zero(n, n);
  for (int k = 0; k < n; ++k) {
    c.noalias() += qdot[k] * dmass[k];
    scratch.col(k).noalias() = dmass[k] * qdot;
  }
  c += scratch;
  c -= scratch.transpose();
  c *= 0.5;
  return c;
}

Vec stiffness_vector(const Vec& q, const DynamicParams& params) {
  if (q.size() != params.stiffness.size())
    throw std::invalid_argument("q size does not match stiffness vector");
  return params.stiffness.cwiseProduct(q);
}

Vec gravity_buoyancy(const Vec& q, const SegmentGeometry& geom,
                     const DynamicParams& params, const BasePose& base) {
  check_sizes(q, geom, params);
  const double v_el = element_volume(geom, params);
  const double w_el = (params.rho_body - params.rho_fluid) * v_el * params.gravity;
  kin::NodeSweep sweep;
  kin::sweep_nodes(q, base, geom, params.nodes_per_segment, {}, sweep);
  Vec g = Vec::Zero(geom.count);
  for (const Mat& jac : sweep.jac) g += w_el * jac.row(1).transpose();
  return g;
}

Vec forward_dynamics(const Vec& q, const Vec& qdot, const Vec& tau, const Vec& f_ext,
                     const Mat& added_inertia, const SegmentGeometry& geom,
                     const DynamicParams& params, const BasePose& base) {
  LumpedModel lumped(ArmModel{geom, base, params, HydroCoeffs{}});
  lumped.eval(q, qdot, false);
  if (added_inertia.size() == 0)
    return lumped.accel(tau, f_ext, Mat::Zero(geom.count, geom.count));
  return lumped.accel(tau, f_ext, added_inertia);
}

LumpedModel::LumpedModel(ArmModel model) : model_(std::move(model)) {
  const int n = model_.geom.count;
  const double v_el = element_volume(model_.geom, model_.dyn);
  node_mass_ = model_.dyn.rho_body * v_el;
  node_weight_ =
      (model_.dyn.rho_body - model_.dyn.rho_fluid) * v_el * model_.dyn.gravity;
  // Scalar added-mass coefficient makes the element added mass isotropic, so
  // the generalized added inertia is an exact multiple of M:
  //   sum J^T (cm * rho_f * V_el) J = (cm * rho_f / rho_body) * M.
  added_scale_ = model_.hydro.cm() * model_.hydro.rho_fluid / model_.dyn.rho_body;
  terms_.mass = Mat::Zero(n, n);
  terms_.bias = Vec::Zero(n);
  terms_.added_inertia = Mat::Zero(n, n);
  solve_rhs_ = Vec::Zero(n);
  solve_llt_ = Mat::Zero(n, n);
}

const LumpedModel::Terms& LumpedModel::eval(const Vec& q, const Vec& qdot,
                                            bool with_added_inertia) {
  const int n = model_.geom.count;
  check_sizes(q, model_.geom, model_.dyn);
  if (qdot.size() != n) throw std::invalid_argument("qdot size does not match q");

  kin::SweepRequest req;
  req.qdot = &qdot;
  kin::sweep_nodes(q, model_.base, model_.geom, model_.dyn.nodes_per_segment, req, sweep_);

  Mat& mass = terms_.mass;
  Vec& bias = terms_.bias;
  mass.setZero();
  bias.setZero();

  // Hand-rolled accumulation over the node Jacobians: the tiny (2 x n)
  // factors make Eigen's product kernels pure overhead here, and columns
  // distal to a node's segment are identically zero and can be skipped.
  const int npseg = model_.dyn.nodes_per_segment;
  const int total = sweep_.node_count();
  double* m_data = mass.data(); // n x n, column-major
  for (int j = 0; j < total; ++j) {
    const double* jd = sweep_.jac[j].data(); // 2 x n, column-major
    const Vec2& rb = sweep_.rate_bias[j];
    const int cols = j / npseg + 1; // nonzero leading columns
    for (int cb = 0; cb < cols; ++cb) {
      const double bx = jd[2 * cb];
      const double bz = jd[2 * cb + 1];
      double* m_col = m_data + cb * n;
      for (int ca = cb; ca < cols; ++ca)
        m_col[ca] += jd[2 * ca] * bx + jd[2 * ca + 1] * bz;
      // Coriolis force sum m J^T (Jdot qdot) plus net-weight moment arm
      bias[cb] += node_mass_ * (bx * rb.x() + bz * rb.y()) + node_weight_ * bz;
    }
  }
  for (int cb = 0; cb < n; ++cb) {
    for (int ca = cb; ca < n; ++ca) {
      const double v = node_mass_ * m_data[cb * n + ca];
      m_data[cb * n + ca] = v;
      m_data[ca * n + cb] = v;
    }
  }

  bias += model_.dyn.damping.cwiseProduct(qdot);
  bias += model_.dyn.stiffness.cwiseProduct(q);

  if (with_added_inertia)
    terms_.added_inertia = added_scale_ * mass;
  else
    terms_.added_inertia.setZero();
  return terms_;
}

Vec LumpedModel::accel(const Vec& tau, const Vec& f_ext) {
  return accel(tau, f_ext, terms_.added_inertia);
}

Vec LumpedModel::accel(const Vec& tau, const Vec& f_ext, const Mat& added_inertia) {
  solve_llt_ = terms_.mass;
  if (added_inertia.size() != 0) solve_llt_ += added_inertia;
  Eigen::LLT<Eigen::Ref<Mat>> llt(solve_llt_); // in-place factorization
  if (llt.info() != Eigen::Success)
    throw std::runtime_error("effective mass matrix is not positive definite");
  solve_rhs_ = tau + f_ext - terms_.bias;
  llt.solveInPlace(solve_rhs_);
  return solve_rhs_;
}

} // namespace wavearm::dyn
