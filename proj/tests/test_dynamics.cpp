#include <doctest.h>

#include <cmath>

#include <Eigen/Dense>

#include "evoctrl/dynamics.hpp"
#include "evoctrl/problem.hpp"
#include "evoctrl/rng.hpp"
#include "evoctrl/value.hpp"

using namespace evoctrl;

namespace {

ControlProblem drift_free_vintage() {
  VintageInstance inst = make_vintage({});
  ControlProblem p = inst.problem;
  p.b = [](double, const StateVec& x, const Eigen::VectorXd&) -> StateVec {
    return StateVec::Zero(x.size());
  };
  return p;
}

PiecewiseControl zero_control(const ControlProblem& p, double t0, double t1) {
  return PiecewiseControl::constant(Eigen::VectorXd::Zero(p.U.dim()), t0, t1);
}

// exact mild solution for constant control on the vintage family:
// x(s) = e^{(s-t)A} x + u * int_0^{s-t} e^{r A} beta dr, evaluated per block
StateVec vintage_exact_constant_control(const VintageInstance& inst, double t0, const StateVec& x0,
                                        double u, double s) {
  const double tau = s - t0;
  const auto& blocks = inst.problem.A.blocks();
  StateVec out = apply_semigroup(inst.problem.A, tau, x0);
  int off = 0;
  for (const auto& m : blocks) {
    const int sz = static_cast<int>(m.rows());
    Eigen::MatrixXd integral;
    if (m.norm() < 1e-14) {
      integral = tau * Eigen::MatrixXd::Identity(sz, sz);
    } else {
      // int_0^tau e^{r m} dr = m^{-1} (e^{tau m} - I) for invertible blocks
      Eigen::MatrixXd etm(sz, sz);
      for (int c = 0; c < sz; ++c)
        etm.col(c) = apply_semigroup(SpectralOperator({m}), tau, Eigen::VectorXd::Unit(sz, c));
      integral = m.fullPivLu().solve(etm - Eigen::MatrixXd::Identity(sz, sz));
    }
    out.segment(off, sz) += u * integral * inst.beta.segment(off, sz);
    off += sz;
  }
  return out;
}

}  // namespace

TEST_CASE("piecewise control lookup and validation") {
  Eigen::VectorXd u1 = Eigen::VectorXd::Constant(1, -1.0);
  Eigen::VectorXd u2 = Eigen::VectorXd::Constant(1, 0.5);
  const PiecewiseControl u({0.0, 0.4, 1.0}, {u1, u2});
  CHECK(u.at(0.0)[0] == -1.0);
  CHECK(u.at(0.3999)[0] == -1.0);
  CHECK(u.at(0.4)[0] == 0.5);
  CHECK(u.at(2.0)[0] == 0.5);
  CHECK(u.pieces() == 2);
  CHECK_THROWS_AS(PiecewiseControl({0.0, 0.0}, {u1}), std::invalid_argument);
  const ControlBox box = ControlBox::interval(-1.0, 1.0);
  CHECK(u.inside(box));
}

TEST_CASE("integrate_mild is exact for the pure semigroup") {
  const ControlProblem p = drift_free_vintage();
  const StateVec x0 = basis_vector(9, fourier_sin_index(1));
  const Trajectory traj = integrate_mild(p, 0.0, x0, zero_control(p, 0.0, 1.0), 1e-3, 64, 0.25);
  CHECK((traj.back() - basis_vector(9, fourier_cos_index(1))).norm() < 1e-10);
}

TEST_CASE("alpha pairing is invariant for the degenerate vintage flow") {
  const VintageInstance inst = make_vintage({});
  Rng rng(41);
  StateVec x0 = rng.normal_vector(9);
  x0[0] = -1.0;
  const Trajectory traj =
      integrate_mild(inst.problem, 0.0, x0, zero_control(inst.problem, 0.0, 1.0));
  for (const auto& s : traj.states)
    CHECK(inst.alpha.dot(s) == doctest::Approx(-1.0).epsilon(1e-12));
}

TEST_CASE("scalar toy integrates linearly") {
  const ControlProblem toy = make_scalar_toy();
  const PiecewiseControl u =
      PiecewiseControl::constant(Eigen::VectorXd::Constant(1, -1.0), 0.0, 1.0);
  const Trajectory traj = integrate_mild(toy, 0.0, StateVec::Zero(1), u);
  CHECK(traj.back()[0] == doctest::Approx(-1.0).epsilon(1e-12));

  SUBCASE("cost matches the closed form") {
    CHECK(cost(toy, 0.0, traj, u) == doctest::Approx(-0.5).epsilon(1e-12));
  }
}

TEST_CASE("cost of the invariant vintage flow") {
  const VintageInstance inst = make_vintage({});
  StateVec x0 = StateVec::Zero(9);
  x0[0] = -1.0;
  const PiecewiseControl u0 = zero_control(inst.problem, 0.0, 1.0);
  const Trajectory traj = integrate_mild(inst.problem, 0.0, x0, u0);
  CHECK(cost(inst.problem, 0.0, traj, u0) == doctest::Approx(-1.0).epsilon(1e-10));
}

TEST_CASE("cost at t0 = T is the terminal cost") {
  const ControlProblem toy = make_scalar_toy();
  const StateVec x0 = Eigen::VectorXd::Constant(1, 0.7);
  const Trajectory traj = integrate_mild(toy, 1.0, x0, zero_control(toy, 0.0, 1.0), 1e-3, 8, 1.0);
  CHECK(traj.times.size() == 1);
  CHECK(cost(toy, 1.0, traj, zero_control(toy, 0.0, 1.0)) == doctest::Approx(0.7));
}

TEST_CASE("a priori bound along sampled controls") {
  const VintageInstance inst = make_vintage({});
  Rng rng(43);
  StateVec x0 = rng.in_ball(9, 2.0);
  const double sup_b = 2.0 * inst.beta.norm();  // |u| <= 2 is impossible here (box is [-1,1])
  for (int c = 0; c < 5; ++c) {
    std::vector<Eigen::VectorXd> vals;
    for (int i = 0; i < 4; ++i)
      vals.push_back(Eigen::VectorXd::Constant(1, rng.uniform(-1.0, 1.0)));
    const PiecewiseControl u = PiecewiseControl::uniform(0.0, 1.0, vals);
    const Trajectory traj = integrate_mild(inst.problem, 0.0, x0, u);
    for (const auto& s : traj.states) CHECK(s.norm() <= x0.norm() + 1.0 * sup_b + 1e-9);
  }
}

TEST_CASE("chain rule residual for affine pairings") {
  const VintageInstance inst = make_vintage({});
  StateVec x0 = StateVec::Zero(9);
  x0[0] = -1.0;
  const PiecewiseControl u0 = zero_control(inst.problem, 0.0, 1.0);
  const Trajectory traj = integrate_mild(inst.problem, 0.0, x0, u0, 1e-3);

  SUBCASE("time-independent pairing is invariant") {
    const Test1Fn phi = Test1Fn::pairing(inst.alpha);
    CHECK(chain_rule_residual(inst.problem, phi, traj, u0) < 1e-10);
  }

  SUBCASE("time-scaled pairing") {
    const Test1Fn phi = Test1Fn::scaled_pairing(inst.alpha, inst.problem.T);
    CHECK(chain_rule_residual(inst.problem, phi, traj, u0) < 1e-8);
  }
}

TEST_CASE("chain rule residual decays at second order") {
  ControlProblem decay = make_scalar_toy();
  decay.A = make_scalar_generator(-1.0);
  const PiecewiseControl u =
      PiecewiseControl::constant(Eigen::VectorXd::Constant(1, 1.0), 0.0, 1.0);
  TestFunction phi;
  phi.value = [](double, const StateVec& x) { return x[0] * x[0]; };
  phi.time_derivative = [](double, const StateVec&) { return 0.0; };
  phi.gradient = [](double, const StateVec& x) -> StateVec { return 2.0 * x; };
  const StateVec x0 = Eigen::VectorXd::Constant(1, 0.5);

  std::vector<double> residuals;
  for (double dt : {4e-3, 2e-3, 1e-3}) {
    // the residual quadrature runs on the trajectory grid, so the sample
    // count must refine together with dt
    const int samples = static_cast<int>(std::lround(1.0 / dt));
    const Trajectory traj = integrate_mild(decay, 0.0, x0, u, dt, samples);
    residuals.push_back(chain_rule_residual(decay, phi, traj, u));
  }
  for (std::size_t i = 0; i + 1 < residuals.size(); ++i) {
    const double ratio = residuals[i] / residuals[i + 1];
    CHECK(ratio > 3.2);
    CHECK(ratio < 5.0);
  }
}

TEST_CASE("test2 residual signs") {
  SUBCASE("rotation is an isometry") {
    const ControlProblem p = drift_free_vintage();
    StateVec x0 = basis_vector(9, fourier_cos_index(2));
    const PiecewiseControl u0 = zero_control(p, 0.0, 1.0);
    const Trajectory traj = integrate_mild(p, 0.0, x0, u0, 1e-3, 64, 0.1);
    CHECK(test2_residual(p, Test2Fn::quadratic(), traj, u0) <= 1e-10);
  }

  SUBCASE("strict decay under a negative generator") {
    ControlProblem decay = make_scalar_toy();
    decay.A = make_scalar_generator(-1.0);
    decay.b = [](double, const StateVec& x, const Eigen::VectorXd&) -> StateVec {
      return StateVec::Zero(x.size());
    };
    const StateVec x0 = Eigen::VectorXd::Constant(1, 1.0);
    const PiecewiseControl u0 = zero_control(decay, 0.0, 1.0);
    const Trajectory traj = integrate_mild(decay, 0.0, x0, u0, 1e-3, 64, 0.1);
    CHECK(test2_residual(decay, Test2Fn::quadratic(), traj, u0) < -0.1);
  }

  SUBCASE("second-order defect from the origin") {
    const ControlProblem toy = make_scalar_toy();
    const PiecewiseControl u =
        PiecewiseControl::constant(Eigen::VectorXd::Constant(1, 1.0), 0.0, 1.0);
    std::vector<double> defects;
    for (double span : {0.2, 0.1, 0.05}) {
      const Trajectory traj = integrate_mild(toy, 0.0, StateVec::Zero(1), u, 1e-4, 64, span);
      defects.push_back(test2_residual(toy, Test2Fn::quadratic(), traj, u));
    }
    for (std::size_t i = 0; i + 1 < defects.size(); ++i)
      CHECK(defects[i] / defects[i + 1] == doctest::Approx(4.0).epsilon(0.05));
  }
}

TEST_CASE("integrator is second order against the exact mild solution") {
  VintageConfig cfg;
  cfg.alpha_beta = 1.0;
  const VintageInstance inst = make_vintage(cfg);
  Rng rng(47);
  StateVec x0 = rng.in_ball(9, 1.0);
  const double uval = 1.0;
  const PiecewiseControl u =
      PiecewiseControl::constant(Eigen::VectorXd::Constant(1, uval), 0.0, 1.0);
  // fractional span: over whole rotation periods the per-step quadrature
  // errors cancel and the scheme is exact to rounding
  const double span = 0.37;
  const StateVec exact = vintage_exact_constant_control(inst, 0.0, x0, uval, span);

  std::vector<double> errs;
  // coarse sample grid so the requested dt, not the sample spacing, sets the
  // internal step
  for (double dt : {2e-3, 1e-3, 5e-4})
    errs.push_back(
        (integrate_mild(inst.problem, 0.0, x0, u, dt, 32, span).back() - exact).norm());
  for (std::size_t i = 0; i + 1 < errs.size(); ++i) {
    const double ratio = errs[i] / errs[i + 1];
    CHECK(ratio > 3.5);
    CHECK(ratio < 4.5);
  }
}

TEST_CASE("feedback rollout approaches the closed-form optimum") {
  VintageConfig cfg;
  cfg.alpha_beta = 1.0;
  const VintageInstance inst = make_vintage(cfg);
  StateVec x0 = StateVec::Zero(9);
  x0[0] = -1.0;
  const FeedbackRollout roll = rollout_feedback(
      inst.problem,
      [&inst](double s, const StateVec& xs) { return vintage_feedback(inst, s, xs); }, 0.0, x0,
      50);
  const double J = cost(inst.problem, 0.0, roll.trajectory, roll.control);
  CHECK(J == doctest::Approx(-7.0 / 6.0).epsilon(0.02));
}
