#pragma once

#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "evoctrl/dynamics.hpp"
#include "evoctrl/problem.hpp"

namespace evoctrl {

/// Modulus data backing the uniform-continuity contract
/// |w(t,x) - w(s,y)| <= c_space * ||x-y||_{-1} + (c_time_const + c_time_norm * ||x||) |t-s|.
struct LipschitzProfile {
  double space_minus1 = std::numeric_limits<double>::quiet_NaN();
  double time_const = std::numeric_limits<double>::quiet_NaN();
  double time_norm = std::numeric_limits<double>::quiet_NaN();
  bool known() const { return std::isfinite(space_minus1); }
};

/// Evaluatable candidate value function, with exact derivatives where known.
/// eval must be total on R x R^N (closed forms extend smoothly past the
/// horizon, which the directional difference quotients rely on).
struct ScalarField {
  std::function<double(double, const StateVec&)> eval;
  std::function<double(double, const StateVec&)> time_derivative;  // optional
  std::function<StateVec(double, const StateVec&)> gradient;       // optional
  LipschitzProfile lipschitz;

  double operator()(double t, const StateVec& x) const { return eval(t, x); }
  bool has_derivatives() const {
    return static_cast<bool>(time_derivative) && static_cast<bool>(gradient);
  }
};

/// G(t) = int_t^T e^{lambda (s-t)} ds, with the analytic limit T - t taken for
/// |lambda| < 1e-8.
double compute_G(double lambda, double t, double T);

/// int_t^T G(s)^2 ds in closed form (series branch near lambda = 0).
double integral_G_squared(double lambda, double t, double T);

/// Glued closed-form value W(t,x) = -G(t)|<alpha,x>| - c^2/2 int_t^T G(s)^2 ds.
double vintage_value(const VintageInstance& inst, double t, const StateVec& x);

/// Optimal feedback -c G(t) on <alpha,x> <= 0, +c G(t) otherwise.  The variant
/// map assigns the boundary <alpha,x> = 0 to the positive branch instead; both
/// are optimal.
Eigen::VectorXd vintage_feedback(const VintageInstance& inst, double t, const StateVec& x,
                                 bool boundary_negative_branch = true);

/// W as a ScalarField with exact derivatives off the hyperplane <alpha,x> = 0
/// (the gradient returns the nonpositive-side branch on the hyperplane).
ScalarField make_vintage_value_field(const VintageInstance& inst);

/// Closed form for the one-dimensional toy: V(t,x) = x - (T-t)/2.
ScalarField make_scalar_toy_value_field(double T);

struct BruteForceResult {
  double value = 0.0;
  PiecewiseControl control;
  long attempted = 0;  // enumerated control sequences
};

/// Independent dynamic-programming oracle: enumerates every piecewise-constant
/// control on a uniform n_steps grid with values from control_grid, integrates
/// each with the production integrator, and returns the best.  Enumeration
/// budget |grid|^n_steps <= 1e6.
BruteForceResult brute_force_value(const ControlProblem& problem, double t, const StateVec& x,
                                   int n_steps, const std::vector<Eigen::VectorXd>& control_grid,
                                   double dt = 0.0);

/// Same, backed by a CSV cache keyed by (problem tag, t, x, n_steps, grid).
BruteForceResult brute_force_value_cached(const std::string& cache_path,
                                          const ControlProblem& problem, double t,
                                          const StateVec& x, int n_steps,
                                          const std::vector<Eigen::VectorXd>& control_grid,
                                          double dt = 0.0);

/// Uniform scalar control grid helper for oracle configs.
std::vector<Eigen::VectorXd> scalar_grid(double lo, double hi, int points);

}  // namespace evoctrl
