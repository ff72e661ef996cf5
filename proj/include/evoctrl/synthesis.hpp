#pragma once

#include <vector>

#include "evoctrl/convolution.hpp"
#include "evoctrl/dynamics.hpp"
#include "evoctrl/problem.hpp"
#include "evoctrl/value.hpp"

namespace evoctrl {

/// Configuration of one synthesis run on the window [t, t + window]:
/// n equal steps, convolution parameters for the envelope differentials, the
/// target slack nu and the interior-domain margin delta (0 selects 0.05 T, with
/// the proviso beta <= delta^2 / 16 enforced).
struct SynthesisConfig {
  double window = 0.5;
  int n = 20;
  ConvolutionParams params;
  double nu = 0.05;
  double delta = 0.0;      // 0 => 0.05 * T
  double dt = 0.0;         // integrator step; 0 => 1e-3 * T
  bool extend_tail = true; // append the L-argmin control on [t+window, T]
  ConvolveNumerics numerics;
};

struct SynthesisStep {
  double t_i = 0.0;
  double a = 0.0;       // envelope time derivative at the node
  StateVec p;           // envelope space derivative at the node
  Eigen::VectorXd u;    // chosen control value
  double slack = 0.0;   // a + <A*p, x_i> + <p, b(t_i,x_i,u_i)> + L(t_i,x_i,u_i)
};

struct SynthesisResult {
  PiecewiseControl control;  // n pieces on [t, t+window), plus the tail piece
  Trajectory trajectory;     // full span of the control
  double gap = 0.0;          // w(t,x) - int_t^{t+window} L - w(t+window, x(t+window))
  std::vector<SynthesisStep> per_step;
  double total_cost = 0.0;   // full-horizon cost (meaningful with the tail)
  double max_slack = -std::numeric_limits<double>::infinity();
  bool beta_proviso_ok = true;  // beta <= delta^2/16 (advisory; the schedule restores it)
};

/// Step-by-step construction of a piecewise-constant control: at each node the
/// envelope superdifferential (a, p) of the inf-convolution of w is computed
/// and u_i is the Hamiltonian argmin at (t_i, x(t_i), p); one step of length
/// window/n is integrated and the procedure repeats from the new state.
/// Aborts (std::runtime_error) if the envelope fails to converge at a node.
SynthesisResult synthesize(const ControlProblem& problem, const ScalarField& w, double t,
                           const StateVec& x, const SynthesisConfig& cfg);

struct ScheduleAttempt {
  ConvolutionParams params;
  int n = 0;
  double gap = 0.0;
};

struct ScheduleResult {
  SynthesisResult result;  // last attempt
  std::vector<ScheduleAttempt> attempts;
  bool achieved = false;   // gap >= -nu reached
};

/// Runs synthesize under a shrinking parameter schedule (beta, then epsilon,
/// then lambda, then grow n) until the gap clears -nu or the schedule is
/// exhausted.
ScheduleResult synthesize_schedule(const ControlProblem& problem, const ScalarField& w, double t,
                                   const StateVec& x, SynthesisConfig cfg, int max_attempts = 6);

/// One-sided dynamic-programming defect of w against a concrete control:
///   w(t,x) - int_t^{t+window} L(s, x(s), u(s)) ds - w(t+window, x(t+window)).
/// Subsolutions satisfy gap <= 0 for every control; supersolutions admit
/// controls with gap >= -nu.  When the window reaches the horizon the
/// continuation value is the terminal cost h.
double superoptimality_gap(const ControlProblem& problem, const ScalarField& w, double t,
                           const StateVec& x, double window, const PiecewiseControl& u,
                           double dt = 0.0);

struct GapRow {
  int index = 0;
  double gap = 0.0;
};

struct SuboptimalityReport {
  double max_gap = -std::numeric_limits<double>::infinity();
  bool pass = false;
  double tolerance = 0.0;
  int argmax = -1;
  std::vector<GapRow> gaps;
};

/// Checks the subsolution inequality against a family of controls: passes iff
/// every control's running-cost-plus-continuation dominates w(t,x).
SuboptimalityReport suboptimality_check(const ControlProblem& problem, const ScalarField& w,
                                        double t, const StateVec& x, double window,
                                        const std::vector<PiecewiseControl>& controls,
                                        double tolerance = 1e-3, double dt = 0.0);

/// Seeded uniform random piecewise-constant controls with values in the box.
std::vector<PiecewiseControl> make_random_controls(const ControlProblem& problem, double t0,
                                                   double t1, int pieces, int count, Rng& rng);

}  // namespace evoctrl
