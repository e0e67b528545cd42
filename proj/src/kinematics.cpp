#include "wavearm/kinematics.hpp"

#include <cmath>
#include <stdexcept>

namespace wavearm::kin {

namespace {

// sinc(v) = sin(v)/v and its first two derivatives. Series branch keeps the
// derivative terms free of cancellation near straight configurations.
struct SincTerms {
  double s0, s1, s2;
};

// Variant for callers that already hold sin(v)/cos(v); the series branch
// ignores them, so recurrence-produced values are fine.
SincTerms sinc_terms(double v, double sv, double cv) {
  SincTerms r;
  const double v2 = v * v;
  if (std::abs(v) < 1e-4) {
    r.s0 = 1.0 - v2 / 6.0 + v2 * v2 / 120.0;
    r.s1 = v * (-1.0 / 3.0 + v2 / 30.0);
    r.s2 = -1.0 / 3.0 + v2 / 10.0 - v2 * v2 / 168.0;
  } else {
    r.s0 = sv / v;
    r.s1 = (cv - r.s0) / v;
    r.s2 = (-sv - 2.0 * r.s1) / v;
  }
  return r;
}

SincTerms sinc_terms(double v) { return sinc_terms(v, std::sin(v), std::cos(v)); }

inline Vec2 rot90(const Vec2& v) { return Vec2(-v.y(), v.x()); }

void check_point(const Vec& q, int segment, double s, const SegmentGeometry& geom) {
  if (q.size() != geom.count)
    throw std::invalid_argument("q size does not match segment count");
  if (segment < 0 || segment >= geom.count)
    throw std::out_of_range("segment index out of range");
  if (!(s >= 0.0 && s <= 1.0))
    throw std::out_of_range("arc fraction s outside [0,1]");
}

// Chain state accumulated segment by segment: start pose of the current
// segment plus Jacobians of that start point.
struct ChainState {
  Vec2 p;
  double th = 0.0;
  Mat jac;                    // 2 x n
  Vec2 rate_bias;             // Jdot*qdot at the start point
  std::vector<Mat> jac_dirs;  // dJ/dq_k per direction
  Mat jac_rate;               // Jdot along qdot
};

// Jdot*qdot of a point on segment j, extended from the segment start.
// Contracting the column recurrence of dJ/dt with qdot collapses the
// sum over proximal joints into thdot (their rate total).
Vec2 point_rate_bias(const Vec2& start_bias, const ArcTerms& at, double thdot,
                     double qd_j) {
  const Vec2 chord_dot = rot90(at.chord) * thdot + at.d_chord * qd_j;
  return start_bias + rot90(chord_dot) * thdot +
         (rot90(at.d_chord) * thdot + at.d2_chord * qd_j) * qd_j;
}

// Extends point Jacobians from the start of segment `j` to a point on it.
// thdot_pre = d(heading at segment start)/d(direction), bend_coeff =
// component of the direction along q_j.
void point_jac_dir(const Mat& base_dir, int j, const ArcTerms& at,
                   double thdot_pre, double bend_coeff, Mat& out) {
  const Vec2 chord_dot = rot90(at.chord) * thdot_pre + at.d_chord * bend_coeff;
  const Vec2 r90_dot = rot90(chord_dot);
  for (int i = 0; i < j; ++i) out.col(i) = base_dir.col(i) + r90_dot;
  out.col(j) = rot90(at.d_chord) * thdot_pre + at.d2_chord * bend_coeff;
  out.rightCols(out.cols() - j - 1).setZero();
}

} // namespace

namespace {

ArcTerms assemble_arc_terms(const SincTerms& st, double ell, double frac, double cm,
                            double sm) {
  const Vec2 dir(cm, sm);
  const Vec2 perp(-sm, cm);
  ArcTerms at;
  at.chord = ell * st.s0 * dir;
  const double half = 0.5 * frac;
  at.d_chord = half * ell * (st.s1 * dir + st.s0 * perp);
  at.d2_chord = half * half * ell * ((st.s2 - st.s0) * dir + 2.0 * st.s1 * perp);
  return at;
}

} // namespace

ArcTerms arc_terms(double heading, double bend, double seg_length, double frac) {
  const double v = 0.5 * bend * frac;
  const double mid = heading + v;
  return assemble_arc_terms(sinc_terms(v), seg_length * frac, frac, std::cos(mid),
                            std::sin(mid));
}

PointPose forward_kinematics(const Vec& q, int segment, double s,
                             const BasePose& base, const SegmentGeometry& geom) {
  check_point(q, segment, s, geom);
  Vec2 p = base.position;
  double th = base.heading;
  for (int j = 0; j < segment; ++j) {
    p += arc_terms(th, q[j], geom.length, 1.0).chord;
    th += q[j];
  }
  PointPose out;
  out.position = p + arc_terms(th, q[segment], geom.length, s).chord;
  out.tangent = th + q[segment] * s;
  return out;
}

Mat jacobian(const Vec& q, int segment, double s, const BasePose& base,
             const SegmentGeometry& geom) {
  check_point(q, segment, s, geom);
  const int n = geom.count;
  Mat jac = Mat::Zero(2, n);
  Vec2 p = base.position;
  double th = base.heading;
  for (int j = 0; j < segment; ++j) {
    const ArcTerms at = arc_terms(th, q[j], geom.length, 1.0);
    const Vec2 r90c = rot90(at.chord);
    for (int i = 0; i < j; ++i) jac.col(i) += r90c;
    jac.col(j) = at.d_chord;
    p += at.chord;
    th += q[j];
  }
  const ArcTerms at = arc_terms(th, q[segment], geom.length, s);
  const Vec2 r90c = rot90(at.chord);
  for (int i = 0; i < segment; ++i) jac.col(i) += r90c;
  jac.col(segment) = at.d_chord;
  return jac;
}

Mat jacobian_rate(const Vec& q, const Vec& qdot, int segment, double s,
                  const BasePose& base, const SegmentGeometry& geom) {
  check_point(q, segment, s, geom);
  if (qdot.size() != q.size())
    throw std::invalid_argument("qdot size does not match q");
  const int n = geom.count;
  Mat jrate = Mat::Zero(2, n);
  Mat jrate_base = Mat::Zero(2, n);
  double th = base.heading;
  double thdot = 0.0;
  for (int j = 0; j < segment; ++j) {
    const ArcTerms at = arc_terms(th, q[j], geom.length, 1.0);
    const Vec2 chord_dot = rot90(at.chord) * thdot + at.d_chord * qdot[j];
    const Vec2 r90_dot = rot90(chord_dot);
    for (int i = 0; i < j; ++i) jrate.col(i) = jrate_base.col(i) + r90_dot;
    jrate.col(j) = rot90(at.d_chord) * thdot + at.d2_chord * qdot[j];
    jrate_base = jrate;
    th += q[j];
    thdot += qdot[j];
  }
  const ArcTerms at = arc_terms(th, q[segment], geom.length, s);
  const Vec2 chord_dot = rot90(at.chord) * thdot + at.d_chord * qdot[segment];
  const Vec2 r90_dot = rot90(chord_dot);
  for (int i = 0; i < segment; ++i) jrate.col(i) = jrate_base.col(i) + r90_dot;
  jrate.col(segment) = rot90(at.d_chord) * thdot + at.d2_chord * qdot[segment];
  jrate.rightCols(n - segment - 1).setZero();
  return jrate;
}

void sweep_nodes(const Vec& q, const BasePose& base, const SegmentGeometry& geom,
                 int nodes_per_segment, const SweepRequest& req, NodeSweep& out) {
  const int n = geom.count;
  if (q.size() != n) throw std::invalid_argument("q size does not match segment count");
  if (nodes_per_segment < 1) throw std::invalid_argument("nodes_per_segment must be >= 1");
  if (req.qdot && req.qdot->size() != n)
    throw std::invalid_argument("qdot size does not match q");

  if (req.rate_matrices && !req.qdot)
    throw std::invalid_argument("rate_matrices requested without qdot");

  const int total = n * nodes_per_segment;
  out.segments = n;
  out.nodes_per_segment = nodes_per_segment;
  out.position.resize(total);
  out.tangent.resize(total);
  if (static_cast<int>(out.jac.size()) != total) {
    out.jac.assign(total, Mat::Zero(2, n));
  }
  if (req.qdot) out.rate_bias.resize(total);
  const int n_dirs = req.coordinate_dirs ? n : 0;
  if (n_dirs > 0 && (out.jac_dirs.size() != static_cast<size_t>(total) ||
                     (total > 0 && out.jac_dirs[0].size() != static_cast<size_t>(n_dirs)))) {
    out.jac_dirs.assign(total, std::vector<Mat>(n_dirs, Mat::Zero(2, n)));
  }
  if (req.rate_matrices && static_cast<int>(out.jac_rate.size()) != total) {
    out.jac_rate.assign(total, Mat::Zero(2, n));
  }

  ChainState chain;
  chain.p = base.position;
  chain.th = base.heading;
  chain.jac = Mat::Zero(2, n);
  chain.rate_bias.setZero();
  if (n_dirs > 0) chain.jac_dirs.assign(n_dirs, Mat::Zero(2, n));
  if (req.rate_matrices) chain.jac_rate = Mat::Zero(2, n);
  double thdot = 0.0;

  int node = 0;
  for (int j = 0; j < n; ++j) {
    const double qd_j = req.qdot ? (*req.qdot)[j] : 0.0;
    // Node angles advance arithmetically along a segment, so one sin/cos of
    // the increment drives a rotation recurrence instead of per-node calls.
    const double dv = 0.5 * q[j] / nodes_per_segment;
    const double sdv = std::sin(dv);
    const double cdv = std::cos(dv);
    double sv = std::sin(0.5 * dv);
    double cv = std::cos(0.5 * dv);
    double sm = std::sin(chain.th + 0.5 * dv);
    double cm = std::cos(chain.th + 0.5 * dv);
    for (int a = 0; a < nodes_per_segment; ++a, ++node) {
      const double s = (a + 0.5) / nodes_per_segment;
      const double v = dv * (a + 0.5);
      const ArcTerms at =
          assemble_arc_terms(sinc_terms(v, sv, cv), geom.length * s, s, cm, sm);
      out.position[node] = chain.p + at.chord;
      out.tangent[node] = chain.th + q[j] * s;

      Mat& jac = out.jac[node];
      const Vec2 r90c = rot90(at.chord);
      for (int i = 0; i < j; ++i) jac.col(i) = chain.jac.col(i) + r90c;
      jac.col(j) = at.d_chord;
      jac.rightCols(n - j - 1).setZero();

      if (req.qdot)
        out.rate_bias[node] = point_rate_bias(chain.rate_bias, at, thdot, qd_j);
      for (int k = 0; k < n_dirs; ++k) {
        point_jac_dir(chain.jac_dirs[k], j, at, k < j ? 1.0 : 0.0,
                      k == j ? 1.0 : 0.0, out.jac_dirs[node][k]);
      }
      if (req.rate_matrices) {
        point_jac_dir(chain.jac_rate, j, at, thdot, qd_j, out.jac_rate[node]);
      }

      const double sv_next = sv * cdv + cv * sdv;
      cv = cv * cdv - sv * sdv;
      sv = sv_next;
      const double sm_next = sm * cdv + cm * sdv;
      cm = cm * cdv - sm * sdv;
      sm = sm_next;
    }

    // advance the chain through the full segment; the column updates read
    // each entry before overwriting it, so in-place extension is safe
    const ArcTerms at = arc_terms(chain.th, q[j], geom.length, 1.0);
    const Vec2 r90c = rot90(at.chord);
    for (int i = 0; i < j; ++i) chain.jac.col(i) += r90c;
    chain.jac.col(j) = at.d_chord;
    if (req.qdot)
      chain.rate_bias = point_rate_bias(chain.rate_bias, at, thdot, qd_j);
    for (int k = 0; k < n_dirs; ++k) {
      point_jac_dir(chain.jac_dirs[k], j, at, k < j ? 1.0 : 0.0,
                    k == j ? 1.0 : 0.0, chain.jac_dirs[k]);
    }
    if (req.rate_matrices) {
      point_jac_dir(chain.jac_rate, j, at, thdot, qd_j, chain.jac_rate);
    }
    chain.p += at.chord;
    chain.th += q[j];
    thdot += qd_j;
  }
}

} // namespace wavearm::kin
