#pragma once

#include <iosfwd>
#include <vector>

#include "evoctrl/problem.hpp"
#include "evoctrl/statespace.hpp"

namespace evoctrl {

/// Piecewise-constant control on a strictly increasing knot grid:
/// u(s) = values[i] on [knots[i], knots[i+1]); clamped to the end pieces
/// outside the grid.
class PiecewiseControl {
 public:
  PiecewiseControl() = default;
  PiecewiseControl(std::vector<double> knots, std::vector<Eigen::VectorXd> values);

  const std::vector<double>& knots() const { return knots_; }
  const std::vector<Eigen::VectorXd>& values() const { return values_; }
  int pieces() const { return static_cast<int>(values_.size()); }
  double start() const { return knots_.front(); }
  double end() const { return knots_.back(); }

  Eigen::VectorXd at(double s) const;
  bool inside(const ControlBox& box, double tol = 1e-9) const;

  /// Appends one more piece on [end, t_next).
  void append(double t_next, const Eigen::VectorXd& u);

  static PiecewiseControl constant(const Eigen::VectorXd& u, double t0, double t1);
  /// n equal pieces on [t0, t1] with the given values.
  static PiecewiseControl uniform(double t0, double t1, std::vector<Eigen::VectorXd> values);

 private:
  std::vector<double> knots_;
  std::vector<Eigen::VectorXd> values_;
};

/// Sampled mild solution.  The time grid is the union of a uniform sample
/// grid and the control knots, so downstream quadrature never straddles a
/// control switch.
struct Trajectory {
  std::vector<double> times;
  std::vector<StateVec> states;
  double dt = 0.0;  // internal integrator step bound

  double span() const { return times.back() - times.front(); }
  const StateVec& front() const { return states.front(); }
  const StateVec& back() const { return states.back(); }
  /// Linear interpolation between stored samples.
  StateVec at(double s) const;
};

/// Mild solution x(s) = e^{(s-t0)A} x0 + int e^{(s-r)A} b(r, x(r), u(r)) dr via
/// second-order exponential midpoint stepping; the semigroup action is exact
/// per block, only the drift is quadratured.  dt = 0 selects 1e-3 * T.
/// Integration spans [t0, t_end] (t_end <= 0 selects the horizon T).
Trajectory integrate_mild(const ControlProblem& problem, double t0, const StateVec& x0,
                          const PiecewiseControl& u, double dt = 0.0, int samples = 512,
                          double t_end = -1.0);

/// Composite-midpoint integral of L along the trajectory (no terminal cost).
double running_cost(const ControlProblem& problem, const Trajectory& traj,
                    const PiecewiseControl& u);

/// Full cost: running cost over [t0, T] plus h at the endpoint.  The
/// degenerate case t0 = T returns h(x0) exactly.
double cost(const ControlProblem& problem, double t0, const Trajectory& traj,
            const PiecewiseControl& u);

/// |phi(s, x(s)) - phi(t, x) - int [phi_t + <A* Dphi, x> + <Dphi, b>] dr| at
/// the trajectory endpoint; O(dt^2) for exact test functions.
double chain_rule_residual(const ControlProblem& problem, const TestFunction& phi,
                           const Trajectory& traj, const PiecewiseControl& u);
double chain_rule_residual(const ControlProblem& problem, const Test1Fn& phi,
                           const Trajectory& traj, const PiecewiseControl& u);

/// Signed defect [g(s,x(s)) - g(t,x)] - [g_t(t,x)(s-t) + int <Dg(t,x),
/// b(t,x,u(r))> dr] with all g-data frozen at the trajectory start; the radial
/// test inequality requires defect <= o(s-t).
double test2_residual(const ControlProblem& problem, const Test2Fn& g, const Trajectory& traj,
                      const PiecewiseControl& u);

using FeedbackFn = std::function<Eigen::VectorXd(double, const StateVec&)>;

struct FeedbackRollout {
  PiecewiseControl control;
  Trajectory trajectory;
};

/// Closed-loop sampling of a feedback map as an n-piece piecewise-constant
/// control on [t0, t_end].
FeedbackRollout rollout_feedback(const ControlProblem& problem, const FeedbackFn& fb, double t0,
                                 const StateVec& x0, int pieces, double dt = 0.0,
                                 double t_end = -1.0);

/// CSV export: time, coeff_1..coeff_N, control components.
void write_trajectory_csv(std::ostream& out, const Trajectory& traj, const PiecewiseControl& u);

}  // namespace evoctrl
