#include <doctest.h>

#include <cmath>

#include "evoctrl/problem.hpp"
#include "evoctrl/rng.hpp"
#include "evoctrl/synthesis.hpp"
#include "evoctrl/value.hpp"
#include "evoctrl/verify.hpp"

using namespace evoctrl;

namespace {

VintageInstance nondegenerate() {
  VintageConfig cfg;
  cfg.alpha_beta = 1.0;
  return make_vintage(cfg);
}

CertificateSelectors optimal_selectors(const VintageInstance& inst) {
  const ScalarField field = make_vintage_value_field(inst);
  CertificateSelectors sel;
  sel.q = [field](double s, const StateVec& xs) { return field.time_derivative(s, xs); };
  sel.p1 = [field](double s, const StateVec& xs) { return field.gradient(s, xs); };
  sel.p2 = [](double, const StateVec& xs) { return StateVec::Zero(xs.size()); };
  return sel;
}

StateVec high_tail_state(double alpha_component) {
  // significant mass on the top frequencies: far from the smooth core of A
  StateVec x = StateVec::Zero(9);
  x[0] = alpha_component;
  for (int j = 5; j < 9; ++j) x[j] = 0.45;
  return x;
}

}  // namespace

TEST_CASE("structured superdifferential membership at smooth points") {
  const VintageInstance inst = nondegenerate();
  const ScalarField V = make_vintage_value_field(inst);
  StateVec x = StateVec::Zero(9);
  x[0] = -0.8;
  const double t = 0.4;
  Rng rng(91);
  const double q = V.time_derivative(t, x);
  const StateVec p1 = V.gradient(t, x);
  const StateVec p2 = StateVec::Zero(9);

  const auto ok = check_superdiff_membership(V, inst.problem.A, t, x, q, p1, p2, 0.2, 16, rng);
  CHECK(ok.pass);
  CHECK(ok.dastar_ok);
  CHECK(ok.radial_ok);

  // a wrong time slope is rejected
  const auto bad = check_superdiff_membership(V, inst.problem.A, t, x, q + 0.3, p1, p2, 0.2, 16, rng);
  CHECK_FALSE(bad.pass);
}

TEST_CASE("superdifferential interval at the kink") {
  const VintageInstance inst = nondegenerate();
  const ScalarField V = make_vintage_value_field(inst);
  const double t = 0.3;
  const StateVec x = 0.7 * basis_vector(9, fourier_sin_index(1));  // <alpha, x> = 0
  const double g = compute_G(0.0, t, inst.problem.T);
  const double q = 0.5 * g * g;  // c = 1
  const StateVec p2 = StateVec::Zero(9);
  Rng rng(93);

  for (double gamma : {-1.0, -0.5, 0.0, 0.5, 1.0}) {
    const auto rep = check_superdiff_membership(V, inst.problem.A, t, x, q, gamma * g * inst.alpha,
                                                p2, 0.2, 16, rng);
    CHECK(rep.pass);
  }
  for (double gamma : {-1.5, 1.5, 2.0}) {
    const auto rep = check_superdiff_membership(V, inst.problem.A, t, x, q, gamma * g * inst.alpha,
                                                p2, 0.2, 16, rng);
    CHECK_FALSE(rep.pass);
  }
}

TEST_CASE("radial split and domain budget in the membership report") {
  const VintageInstance inst = nondegenerate();
  const ScalarField V = make_vintage_value_field(inst);
  StateVec x = StateVec::Zero(9);
  x[0] = -0.5;
  Rng rng(95);
  // a p2 not parallel to x breaks the radial structure
  const StateVec p2 = basis_vector(9, fourier_cos_index(2));
  const auto rep = check_superdiff_membership(V, inst.problem.A, 0.4, x,
                                              V.time_derivative(0.4, x),
                                              V.gradient(0.4, x) - p2, p2, 0.2, 8, rng);
  CHECK_FALSE(rep.radial_ok);
  CHECK_FALSE(rep.pass);
}

TEST_CASE("condmin certificate along the optimal couple") {
  const VintageInstance inst = nondegenerate();
  const CertificateSelectors sel = optimal_selectors(inst);

  for (bool boundary_negative : {true, false}) {
    const StateVec x0 = high_tail_state(-1.0);
    const FeedbackRollout roll = rollout_feedback(
        inst.problem,
        [&inst, boundary_negative](double s, const StateVec& xs) {
          return vintage_feedback(inst, s, xs, boundary_negative);
        },
        0.0, x0, 200, 1e-3);
    const auto res = check_condmin(inst.problem, roll.trajectory, roll.control, sel);
    CHECK(res.pass);
    CHECK(std::abs(res.lhs - res.rhs) <= 1e-3);
  }
}

TEST_CASE("condmin on the degenerate instance never needs the domain of A") {
  const VintageInstance deg = make_vintage({});
  const CertificateSelectors sel = optimal_selectors(deg);
  const StateVec x0 = high_tail_state(-1.0);  // off the smooth core
  const PiecewiseControl u0 =
      PiecewiseControl::constant(Eigen::VectorXd::Zero(1), 0.0, 1.0);
  const Trajectory traj = integrate_mild(deg.problem, 0.0, x0, u0);
  const auto res = check_condmin(deg.problem, traj, u0, sel);
  CHECK(res.pass);
  CHECK(std::abs(res.lhs - res.rhs) <= 1e-3);
}

TEST_CASE("condmin rejects a suboptimal constant control") {
  const VintageInstance inst = nondegenerate();
  const CertificateSelectors sel = optimal_selectors(inst);
  StateVec x0 = StateVec::Zero(9);
  x0[0] = -1.0;
  const PiecewiseControl bad =
      PiecewiseControl::constant(Eigen::VectorXd::Constant(1, 1.0), 0.0, 1.0);
  const Trajectory traj = integrate_mild(inst.problem, 0.0, x0, bad);
  const auto res = check_condmin(inst.problem, traj, bad, sel);
  CHECK_FALSE(res.pass);
  CHECK(res.lhs - res.rhs >= 0.05);
  // the pointwise defect is (1 + G(s))^2 / 2 on the negative side, and the
  // pairing -1 + s stays nonpositive throughout: integral = 7/6
  CHECK(res.lhs - res.rhs == doctest::Approx(7.0 / 6.0).epsilon(1e-2));
}

TEST_CASE("condmin flags controls far from the feedback") {
  const VintageInstance inst = nondegenerate();
  const CertificateSelectors sel = optimal_selectors(inst);
  StateVec x0 = StateVec::Zero(9);
  x0[0] = -1.0;
  // constant control differing from -G(s) by at least 0.5 on [0, 0.5]
  const PiecewiseControl off =
      PiecewiseControl::constant(Eigen::VectorXd::Constant(1, -1.6), 0.0, 1.0);
  const Trajectory traj = integrate_mild(inst.problem, 0.0, x0, off);
  const auto res = check_condmin(inst.problem, traj, off, sel);
  CHECK_FALSE(res.pass);
  CHECK(res.lhs - res.rhs > 0.01);
}

TEST_CASE("pointwise optimality residual") {
  const VintageInstance inst = nondegenerate();
  const ScalarField V = make_vintage_value_field(inst);

  SUBCASE("feedback value passes, an offset control pays its square") {
    StateVec x = StateVec::Zero(9);
    x[0] = -0.9;
    const double s = 0.4;
    const Eigen::VectorXd u_opt = vintage_feedback(inst, s, x);
    CHECK(std::abs(remliyo_residual(inst.problem, V, s, x, u_opt)) <= 1e-3);
    const Eigen::VectorXd u_off = u_opt + Eigen::VectorXd::Constant(1, 1.0);
    CHECK(remliyo_residual(inst.problem, V, s, x, u_off) == doctest::Approx(0.5).epsilon(1e-2));
  }

  SUBCASE("stable up to the horizon") {
    StateVec x = StateVec::Zero(9);
    x[0] = -0.9;
    const double s = inst.problem.T - 1e-3;
    const Eigen::VectorXd u_opt = vintage_feedback(inst, s, x);
    CHECK(std::abs(remliyo_residual(inst.problem, V, s, x, u_opt)) <= 1e-2);
  }

  SUBCASE("residuals at synthesized nodes shrink along the parameter schedule") {
    StateVec x0 = StateVec::Zero(9);
    x0[0] = -1.0;
    SynthesisConfig coarse;
    coarse.window = 0.6;
    coarse.n = 8;
    coarse.params.epsilon = 1e-2;
    coarse.params.beta = 1e-3;
    SynthesisConfig fine = coarse;
    fine.n = 16;
    fine.params.epsilon = 1e-3;
    fine.params.beta = 1e-4;

    auto max_node_residual = [&](const SynthesisConfig& cfg) {
      const SynthesisResult res = synthesize(inst.problem, V, 0.0, x0, cfg);
      double worst = 0.0;
      for (const auto& step : res.per_step) {
        const StateVec xs = res.trajectory.at(step.t_i);
        worst = std::max(worst,
                         std::abs(remliyo_residual(inst.problem, V, step.t_i, xs, step.u)));
      }
      return worst;
    };
    const double coarse_res = max_node_residual(coarse);
    const double fine_res = max_node_residual(fine);
    CHECK(fine_res <= coarse_res + 1e-6);
    CHECK(fine_res <= 1e-2);
  }

  SUBCASE("input validation") {
    StateVec x = StateVec::Zero(9);
    CHECK_THROWS_AS(remliyo_residual(inst.problem, V, 0.3, x,
                                     Eigen::VectorXd::Zero(1), {1e-2, 5e-3}),
                    std::invalid_argument);
    CHECK_THROWS_AS(remliyo_residual(inst.problem, V, 0.3, x,
                                     Eigen::VectorXd::Zero(1), {1e-3, 5e-3, 2.5e-3}),
                    std::invalid_argument);
  }
}
