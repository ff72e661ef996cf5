#include "evoctrl/convolution.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "evoctrl/hamiltonian.hpp"
#include "evoctrl/rng.hpp"

namespace evoctrl {

void ConvolutionParams::validate() const {
  if (!(lambda > 0.0)) throw std::invalid_argument("ConvolutionParams: lambda must be positive");
  if (!(epsilon > 0.0)) throw std::invalid_argument("ConvolutionParams: epsilon must be positive");
  if (!(beta > 0.0)) throw std::invalid_argument("ConvolutionParams: beta must be positive");
  if (!(m >= 2.0)) throw std::invalid_argument("ConvolutionParams: m must be >= 2");
  if (!(K > 0.0)) throw std::invalid_argument("ConvolutionParams: K must be positive");
}

namespace {

struct InnerPoint {
  double s = 0.0;
  StateVec y;
  double value = 0.0;
};

using InnerFn = std::function<double(double, const StateVec&)>;

struct SearchDomain {
  double s_lo, s_hi;
  double radius;
};

void clamp_point(double& s, StateVec& y, const SearchDomain& dom) {
  s = std::min(std::max(s, dom.s_lo), dom.s_hi);
  const double n = y.norm();
  if (n > dom.radius) y *= dom.radius / n;
}

// Compass pattern search with per-coordinate scales taken from the penalty
// curvatures, so the quadratic part of the objective is roughly isotropic in
// scaled units.  Deterministic: best-of-poll moves, halve on failure.  The
// poll order breaks exact ties, so descents seeded on opposite sides of a
// symmetric kink stay on their own side (sign = +-1).
InnerPoint compass_descent(const InnerFn& f, double s0, StateVec y0, double sc_s,
                           const Eigen::VectorXd& sc_y, const SearchDomain& dom, double step_tol,
                           double sign = 1.0) {
  clamp_point(s0, y0, dom);
  InnerPoint cur{s0, y0, f(s0, y0)};
  const int n = static_cast<int>(y0.size());
  double h = 1.0;
  const double h_max = 8.0;
  while (h >= step_tol) {
    InnerPoint best = cur;
    auto consider = [&](double s, StateVec y) {
      clamp_point(s, y, dom);
      const double v = f(s, y);
      if (v < best.value) best = InnerPoint{s, std::move(y), v};
    };
    consider(cur.s + sign * h * sc_s, cur.y);
    consider(cur.s - sign * h * sc_s, cur.y);
    for (int k = 0; k < n; ++k) {
      StateVec first = cur.y, second = cur.y;
      first[k] += sign * h * sc_y[k];
      second[k] -= sign * h * sc_y[k];
      consider(cur.s, std::move(first));
      consider(cur.s, std::move(second));
    }
    if (best.value < cur.value) {
      cur = std::move(best);
      h = std::min(2.0 * h, h_max);
    } else {
      h *= 0.5;
    }
  }
  return cur;
}

struct MinimizeResult {
  InnerPoint best;
  bool converged = true;
  InnerPoint alternate;
};

// Coarse product-grid multistart (time axis x offsets along the leading basis
// directions) followed by pattern-search descents from the anchor (t,x) and
// the best grid candidates.  Distinct near-optimal minimizers are reported.
MinimizeResult minimize_inner(const InnerFn& f, const ControlProblem& problem,
                              const ConvolutionParams& params, double t, const StateVec& x,
                              const ConvolveNumerics& num) {
  const int n = problem.dim();
  const double T = problem.T;
  SearchDomain dom;
  const double edge = std::max(1e-9, 1e-9 * T);
  dom.s_lo = edge;
  dom.s_hi = T - edge;
  dom.radius = num.search_radius > 0.0 ? num.search_radius : x.norm() + 2.0;

  const double sc_s = std::sqrt(params.beta);
  Eigen::VectorXd sc_y(n);
  for (int k = 0; k < n; ++k) sc_y[k] = std::sqrt(params.epsilon / problem.B.diag()[k]);

  // grid of starting points
  std::vector<InnerPoint> grid;
  const int d_eff = std::min(num.effective_dims, n);
  const double r_sp = num.space_radius > 0.0 ? num.space_radius : 1.0 + 0.5 * x.norm();
  std::vector<double> offsets(num.space_starts_per_dim);
  for (int i = 0; i < num.space_starts_per_dim; ++i)
    offsets[i] = num.space_starts_per_dim == 1
                     ? 0.0
                     : -r_sp + 2.0 * r_sp * static_cast<double>(i) / (num.space_starts_per_dim - 1);
  std::vector<int> oidx(d_eff, 0);
  while (true) {
    StateVec y = x;
    for (int k = 0; k < d_eff; ++k) y[k] += offsets[oidx[k]];
    for (int j = 0; j < num.time_starts; ++j) {
      double s = dom.s_lo + (dom.s_hi - dom.s_lo) * (j + 0.5) / num.time_starts;
      StateVec yj = y;
      clamp_point(s, yj, dom);
      grid.push_back(InnerPoint{s, yj, f(s, yj)});
    }
    int k = d_eff - 1;
    for (; k >= 0; --k) {
      if (++oidx[k] < num.space_starts_per_dim) break;
      oidx[k] = 0;
    }
    if (k < 0) break;
  }
  std::sort(grid.begin(), grid.end(),
            [](const InnerPoint& a, const InnerPoint& b) { return a.value < b.value; });

  std::vector<InnerPoint> results;
  results.push_back(compass_descent(f, t, x, sc_s, sc_y, dom, num.step_tol));  // anchor
  // two-sided kicks off the anchor catch symmetric minimizer pairs at kinks
  // that a single descent would silently tie-break
  for (int k = 0; k < d_eff; ++k)
    for (double sign : {-1.0, 1.0}) {
      StateVec y = x;
      y[k] += sign * sc_y[k];
      results.push_back(compass_descent(f, t, y, sc_s, sc_y, dom, num.step_tol, sign));
    }
  for (int i = 0; i < std::min<int>(num.descents, static_cast<int>(grid.size())); ++i)
    results.push_back(compass_descent(f, grid[i].s, grid[i].y, sc_s, sc_y, dom, num.step_tol));

  MinimizeResult out;
  out.best = results.front();
  for (const auto& r : results)
    if (r.value < out.best.value) out.best = r;

  // kink audit: a second minimizer with (numerically) the same value but a
  // different location means the envelope differential is ambiguous
  const double val_tol = 1e-9 * (1.0 + std::abs(out.best.value));
  const double pos_tol = 1e-3;
  for (const auto& r : results) {
    if (r.value > out.best.value + val_tol) continue;
    double dist2 = ((r.s - out.best.s) / sc_s) * ((r.s - out.best.s) / sc_s);
    for (int k = 0; k < n; ++k) {
      const double dy = (r.y[k] - out.best.y[k]) / sc_y[k];
      dist2 += dy * dy;
    }
    if (std::sqrt(dist2) > pos_tol) {
      out.converged = false;
      out.alternate = r;
      break;
    }
  }
  return out;
}

double growth_weight(const ConvolutionParams& params, double T, double s, const StateVec& y) {
  return params.lambda * std::exp(2.0 * params.m * params.K * (T - s)) *
         std::pow(y.norm(), params.m);
}

}  // namespace

EnvelopePoint inf_convolve(const ScalarField& w, const ControlProblem& problem,
                           const ConvolutionParams& params, double t, const StateVec& x,
                           const ConvolveNumerics& numerics) {
  params.validate();
  const double T = problem.T;
  const SmoothingOperator& B = problem.B;
  const InnerFn objective = [&](double s, const StateVec& y) {
    const StateVec diff = x - y;
    return w.eval(s, y) + norm_gamma(B, diff, 1.0) * norm_gamma(B, diff, 1.0) / (2.0 * params.epsilon) +
           (t - s) * (t - s) / (2.0 * params.beta) + growth_weight(params, T, s, y);
  };
  const MinimizeResult res = minimize_inner(objective, problem, params, t, x, numerics);

  EnvelopePoint env;
  env.value = res.best.value;
  env.minimizer_s = res.best.s;
  env.minimizer_y = res.best.y;
  env.a = (t - res.best.s) / params.beta;
  env.q = (x - res.best.y) / params.epsilon;
  env.p = B.apply(env.q);
  env.converged = res.converged;
  if (!res.converged) {
    env.alt_value = res.alternate.value;
    env.alt_s = res.alternate.s;
    env.alt_y = res.alternate.y;
  }
  return env;
}

EnvelopePoint sup_convolve(const ScalarField& w, const ControlProblem& problem,
                           const ConvolutionParams& params, double t, const StateVec& x,
                           const ConvolveNumerics& numerics) {
  params.validate();
  const double T = problem.T;
  const SmoothingOperator& B = problem.B;
  // maximize by minimizing the negated objective
  const InnerFn objective = [&](double s, const StateVec& y) {
    const StateVec diff = x - y;
    return -(w.eval(s, y) - norm_gamma(B, diff, 1.0) * norm_gamma(B, diff, 1.0) / (2.0 * params.epsilon) -
             (t - s) * (t - s) / (2.0 * params.beta) - growth_weight(params, T, s, y));
  };
  const MinimizeResult res = minimize_inner(objective, problem, params, t, x, numerics);

  EnvelopePoint env;
  env.value = -res.best.value;
  env.minimizer_s = res.best.s;
  env.minimizer_y = res.best.y;
  // subdifferential-side sign convention for the sup form
  env.a = (res.best.s - t) / params.beta;
  env.q = (res.best.y - x) / params.epsilon;
  env.p = B.apply(env.q);
  env.converged = res.converged;
  if (!res.converged) {
    env.alt_value = -res.alternate.value;
    env.alt_s = res.alternate.s;
    env.alt_y = res.alternate.y;
  }
  return env;
}

namespace {

SemiconvexityReport semiconvexity_impl(const PointValueFn& value, const ControlProblem& problem,
                                       const ConvolutionParams& params, int triples,
                                       std::uint64_t seed, double radius, double tolerance) {
  if (triples < 1) throw std::invalid_argument("semiconvexity_probe: triples must be >= 1");
  Rng rng(seed);
  const double margin = 0.05 * problem.T;
  const int n = problem.dim();

  auto transformed = [&](double t, const StateVec& x) {
    const double nx1 = norm_gamma(problem.B, x, 1.0);
    return value(t, x) - nx1 * nx1 / (2.0 * params.epsilon) -
           t * t / (2.0 * params.beta);
  };

  SemiconvexityReport report;
  report.triples = triples;
  report.tolerance = tolerance;
  for (int i = 0; i < triples; ++i) {
    const double t1 = rng.uniform(margin, problem.T - margin);
    const double t2 = rng.uniform(margin, problem.T - margin);
    const StateVec x1 = rng.in_ball(n, radius);
    const StateVec x2 = rng.in_ball(n, radius);
    const double phi1 = transformed(t1, x1);
    const double phi2 = transformed(t2, x2);
    const double phim = transformed(0.5 * (t1 + t2), 0.5 * (x1 + x2));
    const double violation = 0.5 * (phi1 + phi2) - phim;  // concavity: <= 0
    report.violations.push_back(violation);
    if (violation > report.max_violation) {
      report.max_violation = violation;
      report.worst_t1 = t1;
      report.worst_t2 = t2;
      report.worst_x1 = x1;
      report.worst_x2 = x2;
    }
  }
  report.pass = report.max_violation <= tolerance;
  return report;
}

}  // namespace

SemiconvexityReport semiconvexity_probe(const ScalarField& w, const ControlProblem& problem,
                                        const ConvolutionParams& params, int triples,
                                        std::uint64_t seed, double radius, double tolerance,
                                        const ConvolveNumerics& numerics) {
  const PointValueFn value = [&](double t, const StateVec& x) {
    return inf_convolve(w, problem, params, t, x, numerics).value;
  };
  return semiconvexity_impl(value, problem, params, triples, seed, radius, tolerance);
}

SemiconvexityReport semiconvexity_probe_fn(const PointValueFn& value, const ControlProblem& problem,
                                           const ConvolutionParams& params, int triples,
                                           std::uint64_t seed, double radius, double tolerance) {
  return semiconvexity_impl(value, problem, params, triples, seed, radius, tolerance);
}

namespace {

LipschitzMinus2Report lipschitz_minus2_impl(const PointValueFn& value,
                                            const ControlProblem& problem, double radius,
                                            int samples, std::uint64_t seed) {
  if (samples < 2) throw std::invalid_argument("lipschitz_minus2_probe: samples must be >= 2");
  Rng rng(seed);
  const double margin = 0.05 * problem.T;
  const int n = problem.dim();

  LipschitzMinus2Report report;
  report.samples = samples;
  double best = 0.0;

  auto visit = [&](double t1, const StateVec& x1, double t2, const StateVec& x2) {
    const double den = std::abs(t1 - t2) + norm_gamma(problem.B, x1 - x2, 2.0);
    if (den < 1e-10) return 0.0;
    const double ratio = std::abs(value(t1, x1) - value(t2, x2)) / den;
    if (ratio > best) {
      best = ratio;
      report.worst_t1 = t1;
      report.worst_t2 = t2;
      report.worst_x1 = x1;
      report.worst_x2 = x2;
    }
    return ratio;
  };

  // deterministic coordinate-direction pairs: the high modes expose fields
  // that are Lipschitz only in the plain norm
  for (int k = 0; k < n; ++k) {
    const double t = rng.uniform(margin, problem.T - margin);
    const StateVec x = rng.in_ball(n, 0.5 * radius);
    report.axis_ratios.push_back(visit(t, x, t, x + 0.5 * basis_vector(n, k)));
    report.M_axes = std::max(report.M_axes, report.axis_ratios.back());
  }

  const int half = samples / 2;
  for (int i = 0; i < samples; ++i) {
    const double t1 = rng.uniform(margin, problem.T - margin);
    const double t2 = rng.uniform(margin, problem.T - margin);
    report.M_random =
        std::max(report.M_random, visit(t1, rng.in_ball(n, radius), t2, rng.in_ball(n, radius)));
    if (i + 1 == half) report.M_half = best;
  }
  report.M_full = best;
  report.growth = report.M_half > 0.0 ? report.M_full / report.M_half : 1.0;
  report.stable = report.growth <= 1.2;
  report.high_mode_blowup =
      report.axis_ratios.back() > 3.0 * (report.axis_ratios.front() + report.M_random + 1e-9);
  return report;
}

}  // namespace

LipschitzMinus2Report lipschitz_minus2_probe(const ScalarField& w, const ControlProblem& problem,
                                             const ConvolutionParams& params, double radius,
                                             int samples, std::uint64_t seed,
                                             const ConvolveNumerics& numerics) {
  const PointValueFn value = [&](double t, const StateVec& x) {
    return inf_convolve(w, problem, params, t, x, numerics).value;
  };
  return lipschitz_minus2_impl(value, problem, radius, samples, seed);
}

LipschitzMinus2Report lipschitz_minus2_probe_fn(const PointValueFn& value,
                                                const ControlProblem& problem, double radius,
                                                int samples, std::uint64_t seed) {
  return lipschitz_minus2_impl(value, problem, radius, samples, seed);
}

double perturbed_hjb_residual(const ControlProblem& problem, const ScalarField& w,
                              const ConvolutionParams& params, double t, const StateVec& x,
                              ConvolutionSide side, const ConvolveNumerics& numerics) {
  params.validate();
  if (!(params.m > problem.growth_k))
    throw std::invalid_argument("perturbed_hjb_residual: requires m > growth exponent of w");
  const EnvelopePoint env = side == ConvolutionSide::Super
                                ? inf_convolve(w, problem, params, t, x, numerics)
                                : sup_convolve(w, problem, params, t, x, numerics);
  if (!env.converged)
    throw std::runtime_error("perturbed_hjb_residual: envelope minimizer ambiguous at the sample point");
  return env.a + pair_Astar(problem.A, env.p, x) + hamiltonian(problem, t, x, env.p).value;
}

}  // namespace evoctrl
