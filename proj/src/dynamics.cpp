#include "evoctrl/dynamics.hpp"

#include <algorithm>
#include <cmath>
#include <ostream>
#include <sstream>
#include <stdexcept>

#include "evoctrl/csv.hpp"

namespace evoctrl {

PiecewiseControl::PiecewiseControl(std::vector<double> knots, std::vector<Eigen::VectorXd> values)
    : knots_(std::move(knots)), values_(std::move(values)) {
  if (knots_.size() != values_.size() + 1 || values_.empty())
    throw std::invalid_argument("PiecewiseControl: need n+1 knots for n pieces");
  for (std::size_t i = 0; i + 1 < knots_.size(); ++i)
    if (!(knots_[i] < knots_[i + 1]))
      throw std::invalid_argument("PiecewiseControl: knots must be strictly increasing");
}

Eigen::VectorXd PiecewiseControl::at(double s) const {
  if (s <= knots_.front()) return values_.front();
  if (s >= knots_.back()) return values_.back();
  const auto it = std::upper_bound(knots_.begin(), knots_.end(), s);
  const auto idx = static_cast<std::size_t>(it - knots_.begin()) - 1;
  return values_[std::min(idx, values_.size() - 1)];
}

bool PiecewiseControl::inside(const ControlBox& box, double tol) const {
  for (const auto& v : values_)
    if (!box.contains(v, tol)) return false;
  return true;
}

void PiecewiseControl::append(double t_next, const Eigen::VectorXd& u) {
  if (!(t_next > knots_.back()))
    throw std::invalid_argument("PiecewiseControl::append: knot must increase");
  knots_.push_back(t_next);
  values_.push_back(u);
}

PiecewiseControl PiecewiseControl::constant(const Eigen::VectorXd& u, double t0, double t1) {
  return PiecewiseControl({t0, t1}, {u});
}

PiecewiseControl PiecewiseControl::uniform(double t0, double t1,
                                           std::vector<Eigen::VectorXd> values) {
  const int n = static_cast<int>(values.size());
  if (n < 1) throw std::invalid_argument("PiecewiseControl::uniform: empty values");
  std::vector<double> knots(n + 1);
  for (int i = 0; i <= n; ++i) knots[i] = t0 + (t1 - t0) * static_cast<double>(i) / n;
  return PiecewiseControl(std::move(knots), std::move(values));
}

StateVec Trajectory::at(double s) const {
  if (s <= times.front()) return states.front();
  if (s >= times.back()) return states.back();
  const auto it = std::upper_bound(times.begin(), times.end(), s);
  const auto j = static_cast<std::size_t>(it - times.begin());
  const double t0 = times[j - 1], t1 = times[j];
  const double w = (s - t0) / (t1 - t0);
  return (1.0 - w) * states[j - 1] + w * states[j];
}

namespace {

std::vector<double> build_breakpoints(double t0, double t_end, int samples,
                                      const std::vector<double>& knots) {
  std::vector<double> pts;
  pts.reserve(samples + knots.size() + 2);
  for (int i = 0; i <= samples; ++i)
    pts.push_back(t0 + (t_end - t0) * static_cast<double>(i) / samples);
  for (double k : knots)
    if (k > t0 && k < t_end) pts.push_back(k);
  std::sort(pts.begin(), pts.end());
  // merge near-duplicates
  std::vector<double> out;
  for (double p : pts)
    if (out.empty() || p - out.back() > 1e-12 * std::max(1.0, std::abs(t_end))) out.push_back(p);
  if (out.back() < t_end) out.push_back(t_end);
  return out;
}

[[noreturn]] void throw_nonfinite(double t, const StateVec& x, const Eigen::VectorXd& u) {
  std::ostringstream msg;
  msg << "integrate_mild: non-finite drift at t=" << t << ", ||x||=" << x.norm() << ", u=(";
  for (int i = 0; i < u.size(); ++i) msg << (i ? "," : "") << u[i];
  msg << ")";
  throw std::runtime_error(msg.str());
}

}  // namespace

Trajectory integrate_mild(const ControlProblem& problem, double t0, const StateVec& x0,
                          const PiecewiseControl& u, double dt, int samples, double t_end) {
  if (t_end <= 0.0) t_end = problem.T;
  if (x0.size() != problem.dim()) throw std::invalid_argument("integrate_mild: x0 dimension");
  if (!is_finite(x0)) throw std::invalid_argument("integrate_mild: non-finite x0");
  if (dt <= 0.0) dt = problem.default_dt();
  if (samples < 1) throw std::invalid_argument("integrate_mild: samples must be >= 1");

  Trajectory traj;
  traj.dt = dt;
  if (t_end <= t0 + 1e-15 * std::max(1.0, std::abs(t_end))) {
    traj.times = {t0};
    traj.states = {x0};
    return traj;
  }

  const std::vector<double> bps = build_breakpoints(t0, t_end, samples, u.knots());
  traj.times = bps;
  traj.states.reserve(bps.size());
  traj.states.push_back(x0);

  StateVec x = x0;
  for (std::size_t seg = 0; seg + 1 < bps.size(); ++seg) {
    const double a = bps[seg], b = bps[seg + 1];
    const Eigen::VectorXd uval = u.at(0.5 * (a + b));
    const int nsub = std::max(1, static_cast<int>(std::ceil((b - a) / dt - 1e-12)));
    const double h = (b - a) / nsub;
    const SemigroupAction full = make_semigroup_action(problem.A, h);
    const SemigroupAction half = make_semigroup_action(problem.A, 0.5 * h);
    for (int j = 0; j < nsub; ++j) {
      const double tj = a + j * h;
      const StateVec drift0 = problem.b(tj, x, uval);
      if (!is_finite(drift0)) throw_nonfinite(tj, x, uval);
      const StateVec x_pred = half.apply(x) + (0.5 * h) * drift0;
      const StateVec drift_mid = problem.b(tj + 0.5 * h, x_pred, uval);
      if (!is_finite(drift_mid)) throw_nonfinite(tj + 0.5 * h, x_pred, uval);
      x = full.apply(x) + h * half.apply(drift_mid);
    }
    traj.states.push_back(x);
  }
  return traj;
}

double running_cost(const ControlProblem& problem, const Trajectory& traj,
                    const PiecewiseControl& u) {
  double acc = 0.0;
  for (std::size_t i = 0; i + 1 < traj.times.size(); ++i) {
    const double a = traj.times[i], b = traj.times[i + 1];
    const double mid = 0.5 * (a + b);
    const StateVec xm = 0.5 * (traj.states[i] + traj.states[i + 1]);
    acc += (b - a) * problem.L(mid, xm, u.at(mid));
  }
  return acc;
}

double cost(const ControlProblem& problem, double t0, const Trajectory& traj,
            const PiecewiseControl& u) {
  if (std::abs(traj.times.front() - t0) > 1e-9)
    throw std::invalid_argument("cost: trajectory does not start at t0");
  if (traj.times.back() < problem.T - 1e-9)
    throw std::invalid_argument("cost: trajectory does not span [t0, T]");
  return running_cost(problem, traj, u) + problem.h(traj.back());
}

double chain_rule_residual(const ControlProblem& problem, const TestFunction& phi,
                           const Trajectory& traj, const PiecewiseControl& u) {
  const double t0 = traj.times.front(), t1 = traj.times.back();
  const double lhs = phi.value(t1, traj.back()) - phi.value(t0, traj.front());
  double rhs = 0.0;
  for (std::size_t i = 0; i + 1 < traj.times.size(); ++i) {
    const double a = traj.times[i], b = traj.times[i + 1];
    const double mid = 0.5 * (a + b);
    const StateVec xm = 0.5 * (traj.states[i] + traj.states[i + 1]);
    const StateVec grad = phi.gradient(mid, xm);
    rhs += (b - a) * (phi.time_derivative(mid, xm) + pair_Astar(problem.A, grad, xm) +
                      grad.dot(problem.b(mid, xm, u.at(mid))));
  }
  return std::abs(lhs - rhs);
}

double chain_rule_residual(const ControlProblem& problem, const Test1Fn& phi,
                           const Trajectory& traj, const PiecewiseControl& u) {
  if (!phi.domain_ok(problem.A))
    throw std::domain_error("chain_rule_residual: test function gradient outside D(A*) budget");
  return chain_rule_residual(problem, phi.as_test_function(), traj, u);
}

double test2_residual(const ControlProblem& problem, const Test2Fn& g, const Trajectory& traj,
                      const PiecewiseControl& u) {
  const double t0 = traj.times.front(), t1 = traj.times.back();
  const StateVec& x0 = traj.front();
  const double lhs = g.value(t1, traj.back()) - g.value(t0, x0);
  const StateVec grad0 = g.grad(t0, x0);
  double drift_term = 0.0;  // exact piecewise sum: b frozen at (t0, x0), u varies
  for (std::size_t i = 0; i + 1 < traj.times.size(); ++i) {
    const double a = traj.times[i], b = traj.times[i + 1];
    drift_term += (b - a) * grad0.dot(problem.b(t0, x0, u.at(0.5 * (a + b))));
  }
  return lhs - (g.time_derivative(t0, x0) * (t1 - t0) + drift_term);
}

FeedbackRollout rollout_feedback(const ControlProblem& problem, const FeedbackFn& fb, double t0,
                                 const StateVec& x0, int pieces, double dt, double t_end) {
  if (t_end <= 0.0) t_end = problem.T;
  if (pieces < 1) throw std::invalid_argument("rollout_feedback: pieces must be >= 1");
  if (dt <= 0.0) dt = problem.default_dt();

  const double tau = (t_end - t0) / pieces;
  StateVec x = x0;
  PiecewiseControl control;
  for (int i = 0; i < pieces; ++i) {
    const double ti = t0 + i * tau;
    const Eigen::VectorXd ui = fb(ti, x);
    if (i == 0)
      control = PiecewiseControl::constant(ui, t0, t0 + tau);
    else
      control.append(ti + tau, ui);
    const Trajectory step = integrate_mild(problem, ti, x, PiecewiseControl::constant(ui, ti, ti + tau),
                                           dt, std::max(2, 512 / pieces), ti + tau);
    x = step.back();
  }
  FeedbackRollout out;
  out.trajectory = integrate_mild(problem, t0, x0, control, dt, 512, t_end);
  out.control = std::move(control);
  return out;
}

void write_trajectory_csv(std::ostream& out, const Trajectory& traj, const PiecewiseControl& u) {
  const int n = static_cast<int>(traj.front().size());
  const int d = static_cast<int>(u.values().front().size());
  out << "time";
  for (int i = 1; i <= n; ++i) out << ",coeff_" << i;
  for (int i = 1; i <= d; ++i) out << ",control_" << i;
  out << '\n';
  for (std::size_t j = 0; j < traj.times.size(); ++j) {
    out << format_double(traj.times[j]);
    for (int i = 0; i < n; ++i) out << ',' << format_double(traj.states[j][i]);
    const Eigen::VectorXd uv = u.at(traj.times[j]);
    for (int i = 0; i < d; ++i) out << ',' << format_double(uv[i]);
    out << '\n';
  }
}

}  // namespace evoctrl
