#include "evoctrl/problem.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "evoctrl/dynamics.hpp"

namespace evoctrl {

namespace {
constexpr double kPi = 3.14159265358979323846;
}

bool ControlBox::contains(const Eigen::VectorXd& u, double tol) const {
  if (u.size() != lo.size()) return false;
  for (int d = 0; d < u.size(); ++d)
    if (u[d] < lo[d] - tol || u[d] > hi[d] + tol) return false;
  return true;
}

double ControlBox::spacing(int d) const {
  if (grid_points < 2) return 0.0;
  return (hi[d] - lo[d]) / static_cast<double>(grid_points - 1);
}

std::vector<Eigen::VectorXd> ControlBox::grid() const {
  const int d = dim();
  std::vector<Eigen::VectorXd> pts;
  std::vector<int> idx(d, 0);
  const int per_dim = std::max(grid_points, 1);
  while (true) {
    Eigen::VectorXd u(d);
    for (int i = 0; i < d; ++i)
      u[i] = per_dim == 1 ? lo[i] : lo[i] + idx[i] * spacing(i);
    pts.push_back(u);
    int i = d - 1;
    for (; i >= 0; --i) {
      if (++idx[i] < per_dim) break;
      idx[i] = 0;
    }
    if (i < 0) break;
  }
  return pts;
}

ControlBox ControlBox::interval(double a, double b, int grid_points) {
  if (!(a < b)) throw std::invalid_argument("ControlBox: empty interval");
  ControlBox box;
  box.lo = Eigen::VectorXd::Constant(1, a);
  box.hi = Eigen::VectorXd::Constant(1, b);
  box.grid_points = grid_points;
  return box;
}

TestFunction Test1Fn::as_test_function() const {
  Test1Fn self = *this;
  TestFunction fn;
  fn.value = [self](double t, const StateVec& x) { return self.value(t, x); };
  fn.time_derivative = [self](double t, const StateVec& x) { return self.time_derivative(t, x); };
  fn.gradient = [self](double t, const StateVec&) { return self.grad(t); };
  return fn;
}

Test1Fn Test1Fn::pairing(const StateVec& a) {
  Test1Fn fn;
  fn.eta = [](double) { return 1.0; };
  fn.eta_dot = [](double) { return 0.0; };
  fn.psi = [](double) { return 0.0; };
  fn.psi_dot = [](double) { return 0.0; };
  fn.a = a;
  return fn;
}

Test1Fn Test1Fn::scaled_pairing(const StateVec& a, double T) {
  Test1Fn fn;
  fn.eta = [T](double t) { return T - t; };
  fn.eta_dot = [](double) { return -1.0; };
  fn.psi = [](double) { return 0.0; };
  fn.psi_dot = [](double) { return 0.0; };
  fn.a = a;
  return fn;
}

StateVec Test2Fn::grad(double t, const StateVec& x) const {
  const double r = x.norm();
  if (r < 1e-14) return StateVec::Zero(x.size());  // g0'(0) = 0
  return (eta(t) * g0_dot(r) / r) * x;
}

Test2Fn Test2Fn::quadratic() {
  Test2Fn g;
  g.eta = [](double) { return 1.0; };
  g.eta_dot = [](double) { return 0.0; };
  g.g0 = [](double r) { return r * r; };
  g.g0_dot = [](double r) { return 2.0 * r; };
  return g;
}

LipschitzReport probe_lipschitz(const ControlProblem& problem, int samples, std::uint64_t seed,
                                double radius) {
  if (samples < 1) throw std::invalid_argument("probe_lipschitz: samples must be >= 1");
  Rng rng(seed);
  const int n = problem.dim();
  LipschitzReport report;

  auto visit = [&](double t, const StateVec& x, const StateVec& y, const Eigen::VectorXd& u) {
    const double den_space = norm_gamma(problem.B, x - y, 1.0);
    if (den_space > 1e-12) {
      const double ratio = (problem.b(t, x, u) - problem.b(t, y, u)).norm() / den_space;
      if (ratio > report.max_ratio_b) {
        report.max_ratio_b = ratio;
        report.worst_x = x;
        report.worst_y = y;
      }
      const double ratio_l =
          std::abs(problem.L(t, x, u) - problem.L(t, y, u)) / den_space;
      report.max_ratio_L = std::max(report.max_ratio_L, ratio_l);
    }
    ++report.samples;
  };

  const Eigen::VectorXd u_mid = 0.5 * (problem.U.lo + problem.U.hi);
  // Coordinate-direction pairs catch the worst modes deterministically.
  for (int k = 0; k < n; ++k) {
    const StateVec x = rng.in_ball(n, radius);
    visit(0.5 * problem.T, x, x + 0.5 * basis_vector(n, k), u_mid);
  }
  for (int i = 0; i < samples; ++i) {
    const double t = rng.uniform(0.0, problem.T);
    const StateVec x = rng.in_ball(n, radius);
    const StateVec y = rng.in_ball(n, radius);
    Eigen::VectorXd u(problem.U.dim());
    for (int d = 0; d < u.size(); ++d) u[d] = rng.uniform(problem.U.lo[d], problem.U.hi[d]);
    visit(t, x, y, u);
  }
  report.pass = report.max_ratio_b <= problem.K + 1e-9;
  return report;
}

ModulusReport probe_uniform_modulus(const ControlProblem& problem, double t, const StateVec& x,
                                    const std::vector<PiecewiseControl>& controls,
                                    const std::vector<double>& deltas, double dt) {
  if (controls.empty()) throw std::invalid_argument("probe_uniform_modulus: no controls");
  ModulusReport report;

  std::vector<double> sorted = deltas;
  std::sort(sorted.begin(), sorted.end());

  // Per control: bin each sample pair into the smallest delta covering its
  // separation, then take the cumulative max so every row bounds all pairs
  // with |s2 - s1| <= delta.
  std::vector<std::vector<double>> per_control;
  for (const auto& u : controls) {
    const Trajectory traj = integrate_mild(problem, t, x, u, dt);
    const std::size_t m = traj.times.size();
    std::vector<double> mod(sorted.size(), 0.0);
    for (std::size_t i = 0; i + 1 < m; ++i)
      for (std::size_t j = i + 1; j < m; ++j) {
        const double gap = traj.times[j] - traj.times[i];
        const auto bin = std::lower_bound(sorted.begin(), sorted.end(), gap - 1e-12);
        if (bin == sorted.end()) continue;
        const double d = (traj.states[j] - traj.states[i]).norm();
        mod[static_cast<std::size_t>(bin - sorted.begin())] =
            std::max(mod[static_cast<std::size_t>(bin - sorted.begin())], d);
      }
    for (std::size_t k = 1; k < mod.size(); ++k) mod[k] = std::max(mod[k], mod[k - 1]);
    per_control.push_back(std::move(mod));
  }

  for (std::size_t k = 0; k < sorted.size(); ++k) {
    ModulusRow row;
    row.delta = sorted[k];
    row.max_modulus = 0.0;
    row.min_modulus = std::numeric_limits<double>::infinity();
    for (const auto& mod : per_control) {
      row.max_modulus = std::max(row.max_modulus, mod[k]);
      row.min_modulus = std::min(row.min_modulus, mod[k]);
    }
    row.spread = row.max_modulus > 0.0 ? (row.max_modulus - row.min_modulus) / row.max_modulus : 0.0;
    report.max_spread = std::max(report.max_spread, row.spread);
    report.rows.push_back(row);
  }
  return report;
}

VintageInstance make_vintage(const VintageConfig& cfg) {
  if (cfg.N < 3 || cfg.N % 2 == 0)
    throw std::invalid_argument("vintage instance needs odd dimension N >= 3");
  if (cfg.T <= 0.0) throw std::invalid_argument("vintage instance needs T > 0");
  if (cfg.lambda_eig > 0.0)
    throw std::invalid_argument("vintage instance needs lambda_eig <= 0");

  const int n = cfg.N;
  VintageInstance inst;
  inst.lambda_eig = cfg.lambda_eig;
  inst.alpha_beta = cfg.alpha_beta;
  inst.alpha = basis_vector(n, 0);

  // beta: the mean-zero square wave chi_[0,1/2] - chi_[1/2,1] expanded in the
  // sine modes (coefficients 2 sqrt2 / (pi k) for odd k), shifted along alpha
  // by <alpha, beta> for the nondegenerate variant.
  StateVec beta = StateVec::Zero(n);
  beta[0] = cfg.alpha_beta;
  const int pairs = (n - 1) / 2;
  for (int k = 1; k <= pairs; k += 2)
    beta[fourier_sin_index(k)] = 2.0 * std::sqrt(2.0) / (kPi * k);
  inst.beta = beta;

  // G is maximized at t = 0 for lambda_eig <= 0.
  const double g0 = cfg.lambda_eig == 0.0
                        ? cfg.T
                        : std::expm1(cfg.lambda_eig * cfg.T) / cfg.lambda_eig;
  const double bound = std::abs(cfg.alpha_beta) * g0;

  SpectralOperator A = make_rotation_generator(n, cfg.lambda_eig);
  SmoothingOperator B = make_inverse_sqrt_laplacian(n);

  ControlProblem p{std::move(A),
                   std::move(B),
                   cfg.T,
                   ControlBox::interval(-bound - 1.0, bound + 1.0, cfg.control_grid),
                   {},
                   {},
                   {},
                   /*K=*/1.0,
                   /*M=*/(bound + 1.0) * std::max(beta.norm(), 1.0),
                   /*growth_k=*/1.0,
                   "vintage"};
  const StateVec alpha = inst.alpha;
  p.b = [beta](double, const StateVec&, const Eigen::VectorXd& u) -> StateVec {
    return u[0] * beta;
  };
  p.L = [alpha](double, const StateVec& x, const Eigen::VectorXd& u) {
    return -std::abs(alpha.dot(x)) + 0.5 * u[0] * u[0];
  };
  p.h = [](const StateVec&) { return 0.0; };
  if (cfg.alpha_beta != 0.0) p.tag = "vintage-nondegenerate";
  p.tag += "(N=" + std::to_string(n) + ",T=" + std::to_string(cfg.T) +
           ",c=" + std::to_string(cfg.alpha_beta) + ",lam=" + std::to_string(cfg.lambda_eig) + ")";
  inst.problem = std::move(p);
  return inst;
}

ControlProblem make_scalar_toy(double T, int control_grid) {
  ControlProblem p{make_scalar_generator(0.0),
                   SmoothingOperator(Eigen::VectorXd::Ones(1), 0.0),
                   T,
                   ControlBox::interval(-1.0, 1.0, control_grid),
                   {},
                   {},
                   {},
                   /*K=*/1.0,
                   /*M=*/1.0,
                   /*growth_k=*/1.0,
                   "scalar-toy"};
  p.b = [](double, const StateVec&, const Eigen::VectorXd& u) -> StateVec {
    return Eigen::VectorXd::Constant(1, u[0]);
  };
  p.L = [](double, const StateVec&, const Eigen::VectorXd& u) { return 0.5 * u[0] * u[0]; };
  p.h = [](const StateVec& x) { return x[0]; };
  p.tag += "(T=" + std::to_string(T) + ")";
  return p;
}

}  // namespace evoctrl
