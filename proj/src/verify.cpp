#include "evoctrl/verify.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace evoctrl {

SuperdiffReport check_superdiff_membership(const ScalarField& w, const SpectralOperator& A,
                                           double t, const StateVec& x, double q,
                                           const StateVec& p1, const StateVec& p2, double radius,
                                           int samples, Rng& rng, double tolerance) {
  if (!(radius > 0.0)) throw std::invalid_argument("check_superdiff_membership: radius must be positive");
  const int n = static_cast<int>(x.size());
  const StateVec p = p1 + p2;
  const double w0 = w.eval(t, x);
  const double abs_tol = tolerance * (1.0 + std::abs(w0));

  SuperdiffReport report;
  report.dastar_ok = A.in_domain_Astar(p1);
  if (x.norm() < 1e-12) {
    report.radial_ok = p2.norm() < 1e-10;
  } else {
    const StateVec xhat = x / x.norm();
    report.radial_ok = (p2 - p2.dot(xhat) * xhat).norm() <= 1e-9 * (1.0 + p2.norm());
  }

  // residual of the first-order expansion at (s, y)
  const auto rho = [&](double s, const StateVec& y) {
    return w.eval(s, y) - w0 - q * (s - t) - p.dot(y - x);
  };

  // direction set: all signed coordinate axes, a few random directions, and
  // pure time shifts; d2 = |s-t|^2 + ||y-x||^2
  struct Probe { double ds; StateVec dy; };
  std::vector<Probe> dirs;
  for (int k = 0; k < n; ++k) {
    dirs.push_back({0.0, basis_vector(n, k)});
    dirs.push_back({0.0, -basis_vector(n, k)});
  }
  dirs.push_back({1.0, StateVec::Zero(n)});
  dirs.push_back({-1.0, StateVec::Zero(n)});
  for (int i = 0; i < samples; ++i) {
    const double ds = rng.uniform(-1.0, 1.0);
    StateVec dy = rng.unit_vector(n);
    const double norm = std::sqrt(ds * ds + dy.squaredNorm());
    dirs.push_back({ds / norm, dy / norm});
  }

  constexpr int kShells = 5;
  // fit C on the outermost shell
  double c_fit = 0.0;
  for (const auto& dir : dirs) {
    const double r = radius;
    const double val = rho(t + r * dir.ds, x + r * dir.dy);
    c_fit = std::max(c_fit, val / (r * r));
  }
  report.fitted_C = c_fit;

  // inner shells must stay below the same quadratic bound (10% headroom);
  // a genuine first-order violation doubles the ratio per shell
  double worst = -std::numeric_limits<double>::infinity();
  for (int shell = 1; shell < kShells; ++shell) {
    const double r = radius * std::pow(0.5, shell);
    for (const auto& dir : dirs) {
      const double s = t + r * dir.ds;
      const StateVec y = x + r * dir.dy;
      const double excess = rho(s, y) - 1.1 * c_fit * r * r;
      if (excess > worst) {
        worst = excess;
        report.worst_s = s;
        report.worst_y = y;
      }
    }
  }
  report.violation = worst;
  report.pass = report.dastar_ok && report.radial_ok && worst <= abs_tol;
  return report;
}

CondminResult check_condmin(const ControlProblem& problem, const Trajectory& traj,
                            const PiecewiseControl& u, const CertificateSelectors& sel,
                            double tolerance) {
  CondminResult res;
  res.tolerance = tolerance > 0.0 ? tolerance : 10.0 * traj.dt;
  for (std::size_t i = 0; i + 1 < traj.times.size(); ++i) {
    const double a = traj.times[i], b = traj.times[i + 1];
    const double mid = 0.5 * (a + b);
    const StateVec xm = 0.5 * (traj.states[i] + traj.states[i + 1]);
    const Eigen::VectorXd um = u.at(mid);
    const StateVec p1 = sel.p1(mid, xm);
    const StateVec p2 = sel.p2(mid, xm);
    const double qv = sel.q(mid, xm);
    if (!is_finite(p1) || !is_finite(p2) || !std::isfinite(qv))
      throw std::invalid_argument("check_condmin: non-finite selector sample");
    const double lhs_int =
        (p1 + p2).dot(problem.b(mid, xm, um)) + qv + pair_Astar(problem.A, p1, xm);
    const double rhs_int = -problem.L(mid, xm, um);
    const double pairing = p2.dot(apply_generator(problem.A, xm));
    res.lhs += (b - a) * lhs_int;
    res.rhs += (b - a) * rhs_int;
    res.p2_pairing += (b - a) * pairing;
    res.rows.push_back({mid, lhs_int, rhs_int, pairing});
  }
  res.pass = res.lhs <= res.rhs + res.tolerance;
  return res;
}

double remliyo_residual(const ControlProblem& problem, const ScalarField& V, double s,
                        const StateVec& x_s, const Eigen::VectorXd& u,
                        const std::vector<double>& deltas) {
  if (deltas.size() < 3)
    throw std::invalid_argument("remliyo_residual: need at least three deltas");
  for (std::size_t i = 0; i + 1 < deltas.size(); ++i)
    if (!(deltas[i] > deltas[i + 1]) || !(deltas[i + 1] > 0.0))
      throw std::invalid_argument("remliyo_residual: deltas must be positive decreasing");

  const StateVec direction = apply_generator(problem.A, x_s) + problem.b(s, x_s, u);
  const double v0 = V.eval(s, x_s);
  const double Lval = problem.L(s, x_s, u);
  const auto quotient = [&](double d) {
    return (V.eval(s + d, x_s + d * direction) - v0) / d + Lval;
  };

  // polynomial extrapolation of the quotient to delta = 0 kills the O(d) and
  // O(d^2) bias of the one-sided difference
  double acc = 0.0;
  for (std::size_t i = 0; i < deltas.size(); ++i) {
    double weight = 1.0;
    for (std::size_t j = 0; j < deltas.size(); ++j)
      if (j != i) weight *= -deltas[j] / (deltas[i] - deltas[j]);
    acc += weight * quotient(deltas[i]);
  }
  return acc;
}

}  // namespace evoctrl
