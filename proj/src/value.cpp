#include "evoctrl/value.hpp"

#include <cmath>
#include <cstdint>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include "evoctrl/csv.hpp"

namespace evoctrl {

namespace {

// G and its squared integral as smooth functions of tau = T - t; defined for
// every real tau so closed-form fields extend past the horizon.
double g_of(double lambda, double tau) {
  if (std::abs(lambda) < 1e-8) return tau;
  return std::expm1(lambda * tau) / lambda;
}

double ig2_of(double lambda, double tau) {
  const double a = lambda * tau;
  if (std::abs(a) < 1e-3)
    return tau * tau * tau * (1.0 / 3.0 + a / 4.0 + 7.0 * a * a / 60.0);
  return (std::expm1(2.0 * a) / (2.0 * lambda) - 2.0 * std::expm1(a) / lambda + tau) /
         (lambda * lambda);
}

}  // namespace

double compute_G(double lambda, double t, double T) {
  if (t > T + 1e-12) throw std::invalid_argument("compute_G: t must be <= T");
  return g_of(lambda, T - t);
}

double integral_G_squared(double lambda, double t, double T) {
  if (t > T + 1e-12) throw std::invalid_argument("integral_G_squared: t must be <= T");
  return ig2_of(lambda, T - t);
}

double vintage_value(const VintageInstance& inst, double t, const StateVec& x) {
  const double T = inst.problem.T;
  const double c = inst.alpha_beta;
  return -g_of(inst.lambda_eig, T - t) * std::abs(inst.alpha.dot(x)) -
         0.5 * c * c * ig2_of(inst.lambda_eig, T - t);
}

Eigen::VectorXd vintage_feedback(const VintageInstance& inst, double t, const StateVec& x,
                                 bool boundary_negative_branch) {
  const double g = g_of(inst.lambda_eig, inst.problem.T - t);
  const double z = inst.alpha.dot(x);
  const double mag = inst.alpha_beta * g;
  const bool negative_side = boundary_negative_branch ? (z <= 0.0) : (z < 0.0);
  return Eigen::VectorXd::Constant(1, negative_side ? -mag : +mag);
}

ScalarField make_vintage_value_field(const VintageInstance& inst) {
  const StateVec alpha = inst.alpha;
  const double lambda = inst.lambda_eig;
  const double c = inst.alpha_beta;
  const double T = inst.problem.T;

  ScalarField field;
  field.eval = [alpha, lambda, c, T](double t, const StateVec& x) {
    return -g_of(lambda, T - t) * std::abs(alpha.dot(x)) - 0.5 * c * c * ig2_of(lambda, T - t);
  };
  field.time_derivative = [alpha, lambda, c, T](double t, const StateVec& x) {
    const double g = g_of(lambda, T - t);
    const double g_dot = -std::exp(lambda * (T - t));  // d/dt G
    return -g_dot * std::abs(alpha.dot(x)) + 0.5 * c * c * g * g;
  };
  field.gradient = [alpha, lambda, T](double t, const StateVec& x) -> StateVec {
    const double g = g_of(lambda, T - t);
    const double z = alpha.dot(x);
    return (z > 0.0 ? -g : g) * alpha;  // hyperplane assigned to the nonpositive branch
  };
  field.lipschitz.space_minus1 =
      g_of(lambda, T) * std::sqrt(inst.problem.B.apply_inverse(alpha).dot(alpha));
  field.lipschitz.time_const = 0.5 * c * c * g_of(lambda, T) * g_of(lambda, T);
  field.lipschitz.time_norm = 1.0;
  return field;
}

ScalarField make_scalar_toy_value_field(double T) {
  ScalarField field;
  field.eval = [T](double t, const StateVec& x) { return x[0] - 0.5 * (T - t); };
  field.time_derivative = [](double, const StateVec&) { return 0.5; };
  field.gradient = [](double, const StateVec& x) -> StateVec {
    return Eigen::VectorXd::Ones(x.size());
  };
  field.lipschitz.space_minus1 = 1.0;
  field.lipschitz.time_const = 0.5;
  field.lipschitz.time_norm = 0.0;
  return field;
}

BruteForceResult brute_force_value(const ControlProblem& problem, double t, const StateVec& x,
                                   int n_steps, const std::vector<Eigen::VectorXd>& control_grid,
                                   double dt) {
  if (n_steps < 1) throw std::invalid_argument("brute_force_value: n_steps must be >= 1");
  if (control_grid.empty()) throw std::invalid_argument("brute_force_value: empty control grid");
  const double combos = std::pow(static_cast<double>(control_grid.size()), n_steps);
  if (combos > 1e6)
    throw std::invalid_argument("brute_force_value: enumeration budget |grid|^n > 1e6 exceeded");

  const int g = static_cast<int>(control_grid.size());
  std::vector<int> idx(n_steps, 0);
  BruteForceResult best;
  best.value = std::numeric_limits<double>::infinity();
  const int samples = std::max(512, 8 * n_steps);

  while (true) {
    std::vector<Eigen::VectorXd> vals(n_steps);
    for (int i = 0; i < n_steps; ++i) vals[i] = control_grid[idx[i]];
    PiecewiseControl u = PiecewiseControl::uniform(t, problem.T, std::move(vals));
    const Trajectory traj = integrate_mild(problem, t, x, u, dt, samples);
    const double J = cost(problem, t, traj, u);
    ++best.attempted;
    if (J < best.value) {
      best.value = J;
      best.control = std::move(u);
    }
    int i = n_steps - 1;
    for (; i >= 0; --i) {
      if (++idx[i] < g) break;
      idx[i] = 0;
    }
    if (i < 0) break;
  }
  return best;
}

namespace {

std::uint64_t fnv1a(const std::string& s) {
  std::uint64_t h = 1469598103934665603ULL;
  for (unsigned char c : s) {
    h ^= c;
    h *= 1099511628211ULL;
  }
  return h;
}

std::string oracle_key(const ControlProblem& problem, double t, const StateVec& x, int n_steps,
                       const std::vector<Eigen::VectorXd>& grid) {
  std::ostringstream os;
  os << problem.tag << '|' << format_double(t) << '|';
  for (int i = 0; i < x.size(); ++i) os << format_double(x[i]) << ' ';
  os << '|' << n_steps << '|';
  for (const auto& u : grid)
    for (int i = 0; i < u.size(); ++i) os << format_double(u[i]) << ' ';
  return std::to_string(fnv1a(os.str()));
}

}  // namespace

BruteForceResult brute_force_value_cached(const std::string& cache_path,
                                          const ControlProblem& problem, double t,
                                          const StateVec& x, int n_steps,
                                          const std::vector<Eigen::VectorXd>& control_grid,
                                          double dt) {
  const std::string key = oracle_key(problem, t, x, n_steps, control_grid);
  const int d = static_cast<int>(control_grid.front().size());
  {
    std::ifstream in(cache_path);
    std::string line;
    while (std::getline(in, line)) {
      std::stringstream ss(line);
      std::string cell;
      if (!std::getline(ss, cell, ',') || cell != key) continue;
      BruteForceResult hit;
      std::getline(ss, cell, ',');
      hit.value = std::stod(cell);
      std::vector<Eigen::VectorXd> vals(n_steps, Eigen::VectorXd::Zero(d));
      for (int i = 0; i < n_steps; ++i)
        for (int k = 0; k < d; ++k) {
          std::getline(ss, cell, ',');
          vals[i][k] = std::stod(cell);
        }
      hit.control = PiecewiseControl::uniform(t, problem.T, std::move(vals));
      hit.attempted = 0;  // served from cache
      return hit;
    }
  }
  BruteForceResult res = brute_force_value(problem, t, x, n_steps, control_grid, dt);
  std::ofstream out(cache_path, std::ios::app);
  out << key << ',' << format_double(res.value);
  for (const auto& v : res.control.values())
    for (int k = 0; k < d; ++k) out << ',' << format_double(v[k]);
  out << '\n';
  return res;
}

std::vector<Eigen::VectorXd> scalar_grid(double lo, double hi, int points) {
  if (points < 1) throw std::invalid_argument("scalar_grid: points must be >= 1");
  std::vector<Eigen::VectorXd> grid;
  for (int i = 0; i < points; ++i) {
    const double v = points == 1 ? lo : lo + (hi - lo) * static_cast<double>(i) / (points - 1);
    grid.push_back(Eigen::VectorXd::Constant(1, v));
  }
  return grid;
}

}  // namespace evoctrl
