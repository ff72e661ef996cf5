#pragma once

#include <functional>
#include <string>
#include <vector>

#include "evoctrl/rng.hpp"
#include "evoctrl/statespace.hpp"

namespace evoctrl {

class PiecewiseControl;  // dynamics.hpp

/// Compact control box in R^d with a uniform evaluation grid, the computable
/// stand-in for a general compact control set.
struct ControlBox {
  Eigen::VectorXd lo;
  Eigen::VectorXd hi;
  int grid_points = 201;  // per dimension

  int dim() const { return static_cast<int>(lo.size()); }
  bool contains(const Eigen::VectorXd& u, double tol = 1e-12) const;
  double spacing(int d) const;
  /// Full product grid in lexicographic order.
  std::vector<Eigen::VectorXd> grid() const;

  static ControlBox interval(double a, double b, int grid_points = 201);
};

using DriftFn = std::function<StateVec(double, const StateVec&, const Eigen::VectorXd&)>;
using RunningCostFn = std::function<double(double, const StateVec&, const Eigen::VectorXd&)>;
using TerminalCostFn = std::function<double(const StateVec&)>;

/// Bundle defining one finite-horizon control problem: the linear part A, the
/// smoothing operator B fixing the weak norms, data (b, L, h, U, T) and the
/// structural constants carried by the standing hypotheses.  Immutable after
/// construction; b, L, h must be pure.
struct ControlProblem {
  SpectralOperator A;
  SmoothingOperator B;
  double T = 1.0;
  ControlBox U;
  DriftFn b;
  RunningCostFn L;
  TerminalCostFn h;
  double K = 1.0;        // ||.||_{-1}-Lipschitz constant of b in x
  double M = 1.0;        // bounds at x = 0 for b, L, h
  double growth_k = 1.0; // growth exponent of admissible value functions
  std::string tag;       // instance label used in artifacts and cache keys

  int dim() const { return A.dim(); }
  double default_dt() const { return 1e-3 * T; }
};

/// Generic smooth test function interface consumed by the residual checks:
/// value, exact time derivative and exact gradient.
struct TestFunction {
  std::function<double(double, const StateVec&)> value;
  std::function<double(double, const StateVec&)> time_derivative;
  std::function<StateVec(double, const StateVec&)> gradient;
};

/// phi(t,x) = eta(t) <a, x> + psi(t) with a in D(A*); the family of anisotropic
/// test functions whose A*-pairing is exactly computable.
struct Test1Fn {
  std::function<double(double)> eta;
  std::function<double(double)> eta_dot;
  std::function<double(double)> psi;
  std::function<double(double)> psi_dot;
  StateVec a;

  double value(double t, const StateVec& x) const { return eta(t) * a.dot(x) + psi(t); }
  double time_derivative(double t, const StateVec& x) const {
    return eta_dot(t) * a.dot(x) + psi_dot(t);
  }
  StateVec grad(double t) const { return eta(t) * a; }

  TestFunction as_test_function() const;
  /// Checks a against the operator's D(A*) budget.
  bool domain_ok(const SpectralOperator& A) const { return A.in_domain_Astar(a); }

  static Test1Fn pairing(const StateVec& a);                     // <a, x>
  static Test1Fn scaled_pairing(const StateVec& a, double T);    // (T - t) <a, x>
};

/// Radial test function g(t,x) = eta(t) g0(||x||) with eta > 0, g0' >= 0 and
/// g0'(0) = 0; the default profile is g0(r) = r^2.
struct Test2Fn {
  std::function<double(double)> eta;
  std::function<double(double)> eta_dot;
  std::function<double(double)> g0;
  std::function<double(double)> g0_dot;

  double value(double t, const StateVec& x) const { return eta(t) * g0(x.norm()); }
  double time_derivative(double t, const StateVec& x) const { return eta_dot(t) * g0(x.norm()); }
  StateVec grad(double t, const StateVec& x) const;

  static Test2Fn quadratic();  // eta = 1, g0 = r^2
};

struct LipschitzReport {
  double max_ratio_b = 0.0;   // sup ||b(t,x,u)-b(t,y,u)|| / ||x-y||_{-1}
  double max_ratio_L = 0.0;   // sup |L diff| / (||x-y||_{-1} + |t-s|)
  bool pass = false;          // configured K dominates the empirical b-ratio
  StateVec worst_x, worst_y;
  int samples = 0;
};

/// Samples the Lipschitz structure of b and L in the ||.||_{-1} metric over
/// random pairs plus all coordinate directions (high modes carry the worst
/// ratios when b is only ||.||-Lipschitz).
LipschitzReport probe_lipschitz(const ControlProblem& problem, int samples,
                                std::uint64_t seed = 7, double radius = 2.0);

struct ModulusRow {
  double delta = 0.0;
  double max_modulus = 0.0;  // worst over controls
  double min_modulus = 0.0;  // best over controls
  double spread = 0.0;       // (max - min) / max
};

struct ModulusReport {
  std::vector<ModulusRow> rows;
  double max_spread = 0.0;
};

/// Empirical uniform-continuity modulus of trajectories across a family of
/// controls: delta -> max over controls and sample pairs |s2-s1| <= delta of
/// ||x(s2) - x(s1)||, with the cross-control spread per delta.
ModulusReport probe_uniform_modulus(const ControlProblem& problem, double t, const StateVec& x,
                                    const std::vector<PiecewiseControl>& controls,
                                    const std::vector<double>& deltas, double dt = 0.0);

// ---- named instances -------------------------------------------------------

struct VintageConfig {
  int N = 9;
  double T = 1.0;
  double alpha_beta = 0.0;   // <alpha, beta>; 0 reproduces the degenerate instance
  double lambda_eig = 0.0;   // eigenvalue of A* on alpha, must be <= 0
  int control_grid = 201;
};

/// The rotation-semigroup benchmark: state rotates on periodic L^2(0,1),
/// drift b = u beta, running cost -|<alpha, x>| + u^2/2, terminal cost 0,
/// control box [-M-1, M+1] with M = sup_t |<alpha_bar(t), beta>|.
struct VintageInstance {
  ControlProblem problem;
  StateVec alpha;
  StateVec beta;
  double lambda_eig = 0.0;
  double alpha_beta = 0.0;
};

VintageInstance make_vintage(const VintageConfig& cfg = {});

/// One-dimensional sanity problem: A = 0, b = u, L = u^2/2, h(x) = x, U = [-1,1].
ControlProblem make_scalar_toy(double T = 1.0, int control_grid = 201);

}  // namespace evoctrl
