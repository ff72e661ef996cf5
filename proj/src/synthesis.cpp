#include "evoctrl/synthesis.hpp"

#include <cmath>
#include <sstream>
#include <stdexcept>

#include "evoctrl/hamiltonian.hpp"

namespace evoctrl {

namespace {

void validate_synthesis_domain(const ControlProblem& problem, double t, double window,
                               const SynthesisConfig& cfg, double delta) {
  if (cfg.n < 1) throw std::invalid_argument("synthesize: n must be >= 1");
  if (!(cfg.nu > 0.0)) throw std::invalid_argument("synthesize: nu must be positive");
  if (!(window > 0.0)) throw std::invalid_argument("synthesize: window must be positive");
  if (t + window > problem.T - delta + 1e-12)
    throw std::invalid_argument("synthesize: window must end before T - delta");
}

}  // namespace

SynthesisResult synthesize(const ControlProblem& problem, const ScalarField& w, double t,
                           const StateVec& x, const SynthesisConfig& cfg) {
  const double delta = cfg.delta > 0.0 ? cfg.delta : 0.05 * problem.T;
  validate_synthesis_domain(problem, t, cfg.window, cfg, delta);
  cfg.params.validate();
  if (!(cfg.params.m > problem.growth_k))
    throw std::invalid_argument("synthesize: requires m > growth exponent of w");
  const double dt = cfg.dt > 0.0 ? cfg.dt : problem.default_dt();
  const double tau = cfg.window / cfg.n;

  SynthesisResult out;
  out.beta_proviso_ok = cfg.params.beta <= delta * delta / 16.0 + 1e-15;
  StateVec xi = x;
  PiecewiseControl control;
  for (int i = 0; i < cfg.n; ++i) {
    const double ti = t + i * tau;
    const EnvelopePoint env = inf_convolve(w, problem, cfg.params, ti, xi, cfg.numerics);
    if (!env.converged) {
      std::ostringstream msg;
      msg << "synthesize: envelope did not converge at node " << i << " (t=" << ti << ")";
      throw std::runtime_error(msg.str());
    }
    const HamiltonianResult ham = hamiltonian(problem, ti, xi, env.p);

    SynthesisStep step;
    step.t_i = ti;
    step.a = env.a;
    step.p = env.p;
    step.u = ham.argmin_u;
    step.slack = env.a + pair_Astar(problem.A, env.p, xi) + ham.value;
    out.max_slack = std::max(out.max_slack, step.slack);
    out.per_step.push_back(step);

    if (i == 0)
      control = PiecewiseControl::constant(ham.argmin_u, t, t + tau);
    else
      control.append(ti + tau, ham.argmin_u);

    const Trajectory piece = integrate_mild(
        problem, ti, xi, PiecewiseControl::constant(ham.argmin_u, ti, ti + tau), dt,
        std::max(2, 512 / cfg.n), ti + tau);
    xi = piece.back();
  }

  if (cfg.extend_tail && t + cfg.window < problem.T - 1e-12) {
    // tail control: argmin of the control-dependent part of L (p = 0)
    const Eigen::VectorXd u_tail =
        hamiltonian(problem, t + cfg.window, xi, StateVec::Zero(problem.dim())).argmin_u;
    control.append(problem.T, u_tail);
  }

  out.control = control;
  out.trajectory = integrate_mild(problem, t, x, control, dt, 512, control.end());
  out.gap = superoptimality_gap(problem, w, t, x, cfg.window, control, dt);
  if (std::abs(control.end() - problem.T) < 1e-12)
    out.total_cost = cost(problem, t, out.trajectory, control);
  else
    out.total_cost = running_cost(problem, out.trajectory, control);
  return out;
}

ScheduleResult synthesize_schedule(const ControlProblem& problem, const ScalarField& w, double t,
                                   const StateVec& x, SynthesisConfig cfg, int max_attempts) {
  ScheduleResult sched;
  int phase = 0;  // 0: shrink beta, 1: shrink epsilon, 2: shrink lambda, then grow n
  for (int attempt = 0; attempt < max_attempts; ++attempt) {
    SynthesisResult res = synthesize(problem, w, t, x, cfg);
    sched.attempts.push_back({cfg.params, cfg.n, res.gap});
    sched.result = std::move(res);
    if (sched.result.gap >= -cfg.nu) {
      sched.achieved = true;
      break;
    }
    switch (phase) {
      case 0: cfg.params.beta *= 0.1; break;
      case 1: cfg.params.epsilon *= 0.1; break;
      case 2: cfg.params.lambda *= 0.01; break;
      default: cfg.n *= 2; break;
    }
    ++phase;
  }
  return sched;
}

double superoptimality_gap(const ControlProblem& problem, const ScalarField& w, double t,
                           const StateVec& x, double window, const PiecewiseControl& u,
                           double dt) {
  if (window < 0.0) throw std::invalid_argument("superoptimality_gap: window must be >= 0");
  if (window == 0.0) return 0.0;
  const double t_end = t + window;
  if (t_end > problem.T + 1e-9)
    throw std::invalid_argument("superoptimality_gap: window exceeds the horizon");
  const Trajectory traj = integrate_mild(problem, t, x, u, dt, 512, std::min(t_end, problem.T));
  const double running = running_cost(problem, traj, u);
  // at the horizon the continuation value is the terminal cost
  const bool at_horizon = t_end >= problem.T - 1e-9;
  const double continuation = at_horizon ? problem.h(traj.back()) : w.eval(t_end, traj.back());
  return w.eval(t, x) - running - continuation;
}

SuboptimalityReport suboptimality_check(const ControlProblem& problem, const ScalarField& w,
                                        double t, const StateVec& x, double window,
                                        const std::vector<PiecewiseControl>& controls,
                                        double tolerance, double dt) {
  SuboptimalityReport report;
  report.tolerance = tolerance;
  for (std::size_t i = 0; i < controls.size(); ++i) {
    const double gap = superoptimality_gap(problem, w, t, x, window, controls[i], dt);
    report.gaps.push_back({static_cast<int>(i), gap});
    if (gap > report.max_gap) {
      report.max_gap = gap;
      report.argmax = static_cast<int>(i);
    }
  }
  report.pass = report.max_gap <= tolerance;
  return report;
}

std::vector<PiecewiseControl> make_random_controls(const ControlProblem& problem, double t0,
                                                   double t1, int pieces, int count, Rng& rng) {
  if (pieces < 1 || count < 1)
    throw std::invalid_argument("make_random_controls: pieces and count must be >= 1");
  std::vector<PiecewiseControl> controls;
  const int d = problem.U.dim();
  for (int c = 0; c < count; ++c) {
    std::vector<Eigen::VectorXd> vals(pieces, Eigen::VectorXd::Zero(d));
    for (int i = 0; i < pieces; ++i)
      for (int k = 0; k < d; ++k) vals[i][k] = rng.uniform(problem.U.lo[k], problem.U.hi[k]);
    controls.push_back(PiecewiseControl::uniform(t0, t1, std::move(vals)));
  }
  return controls;
}

}  // namespace evoctrl
