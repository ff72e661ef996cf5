#pragma once

#include <functional>
#include <vector>

#include "evoctrl/dynamics.hpp"
#include "evoctrl/problem.hpp"
#include "evoctrl/rng.hpp"
#include "evoctrl/value.hpp"

namespace evoctrl {

/// Certificate selectors (q, p1, p2) sampled along a trajectory: p1 must live
/// in D(A*), p2 carries the radial part.  Each selector may depend on the
/// current state so sign switches can follow the trajectory.
struct CertificateSelectors {
  std::function<double(double, const StateVec&)> q;
  std::function<StateVec(double, const StateVec&)> p1;
  std::function<StateVec(double, const StateVec&)> p2;
};

struct SuperdiffReport {
  bool pass = false;
  double violation = 0.0;   // worst excess over the fitted quadratic bound
  double fitted_C = 0.0;    // quadratic coefficient fitted on the outer shell
  bool dastar_ok = false;   // p1 within the D(A*) budget
  bool radial_ok = false;   // p2 parallel to x (zero when x = 0)
  double worst_s = 0.0;
  StateVec worst_y;
};

/// Necessary-condition surrogate for membership of (q, p1, p2) in the
/// structured superdifferential at (t,x): checks the first-order upper bound
///   w(s,y) <= w(t,x) + q (s-t) + <p1+p2, y-x> + C (|s-t|^2 + ||y-x||^2)
/// on shrinking sample shells, with C fitted on the outermost shell, plus the
/// structural split (p1 in D(A*), p2 radial).  Exhibiting actual test-function
/// witnesses is out of numeric reach; this certifies the first-order
/// consequence only.
SuperdiffReport check_superdiff_membership(const ScalarField& w, const SpectralOperator& A,
                                           double t, const StateVec& x, double q,
                                           const StateVec& p1, const StateVec& p2, double radius,
                                           int samples, Rng& rng, double tolerance = 1e-7);

struct CondminRow {
  double s = 0.0;
  double lhs_integrand = 0.0;
  double rhs_integrand = 0.0;
  double p2_pairing = 0.0;  // <p2, A x> along the trajectory
};

struct CondminResult {
  double lhs = 0.0;  // int [<p1+p2, b> + q + <A* p1, x>] ds
  double rhs = 0.0;  // -int L ds
  bool pass = false; // lhs <= rhs + tolerance
  double tolerance = 0.0;
  // int <p2, A x> ds, reported because equality certificates implicitly force
  // this pairing to vanish wherever the trajectory lies in the domain of A
  double p2_pairing = 0.0;
  std::vector<CondminRow> rows;
};

/// Integral optimality certificate along an admissible couple: a sufficient
/// condition for optimality, with equality attained by optimal certificates.
/// Default tolerance 10 dt.
CondminResult check_condmin(const ControlProblem& problem, const Trajectory& traj,
                            const PiecewiseControl& u, const CertificateSelectors& sel,
                            double tolerance = 0.0);

/// Pointwise optimality characterization: Richardson-extrapolated limit of
///   [V(s+d, x + d (A x + b(s,x,u))) - V(s,x)] / d + L(s,x,u)
/// over the given decreasing deltas; near zero iff u passes the pointwise
/// optimality condition at (s, x).
double remliyo_residual(const ControlProblem& problem, const ScalarField& V, double s,
                        const StateVec& x_s, const Eigen::VectorXd& u,
                        const std::vector<double>& deltas = {1e-2, 5e-3, 2.5e-3});

}  // namespace evoctrl
