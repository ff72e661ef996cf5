#include "evoctrl/hamiltonian.hpp"

#include <cmath>
#include <stdexcept>

namespace evoctrl {

HamiltonianResult hamiltonian(const ControlProblem& problem, double t, const StateVec& x,
                              const StateVec& p) {
  if (!is_finite(x) || !is_finite(p))
    throw std::invalid_argument("hamiltonian: non-finite input");

  const auto objective = [&](const Eigen::VectorXd& u) {
    return p.dot(problem.b(t, x, u)) + problem.L(t, x, u);
  };

  const ControlBox& box = problem.U;
  const int d = box.dim();

  // Grid scan in lexicographic order; strict improvement keeps the smallest
  // argmin among ties.
  Eigen::VectorXd best_u;
  double best_f = std::numeric_limits<double>::infinity();
  for (const auto& u : box.grid()) {
    const double f = objective(u);
    if (f < best_f) {
      best_f = f;
      best_u = u;
    }
  }

  // One local quadratic refinement: per coordinate, fit a parabola through the
  // grid argmin and its two neighbours, take the vertex when it is convex and
  // stays within one grid cell.
  Eigen::VectorXd refined = best_u;
  for (int k = 0; k < d; ++k) {
    const double hgrid = box.spacing(k);
    if (hgrid <= 0.0) continue;
    Eigen::VectorXd up = best_u, dn = best_u;
    up[k] = std::min(best_u[k] + hgrid, box.hi[k]);
    dn[k] = std::max(best_u[k] - hgrid, box.lo[k]);
    if (up[k] - best_u[k] < 0.5 * hgrid || best_u[k] - dn[k] < 0.5 * hgrid) continue;
    const double fp = objective(up), f0 = best_f, fm = objective(dn);
    const double curv = fp - 2.0 * f0 + fm;
    if (curv <= 0.0) continue;
    const double step = 0.5 * hgrid * (fm - fp) / curv;
    if (std::abs(step) <= hgrid)
      refined[k] = std::min(std::max(best_u[k] + step, box.lo[k]), box.hi[k]);
  }
  if (refined != best_u) {
    const double f_ref = objective(refined);
    if (f_ref < best_f) {
      best_f = f_ref;
      best_u = refined;
    }
  }

  HamiltonianResult out;
  out.value = best_f;
  out.argmin_u = best_u;
  out.interior = true;
  for (int k = 0; k < d; ++k) {
    const double margin = 1e-12 * (box.hi[k] - box.lo[k]);
    if (best_u[k] <= box.lo[k] + margin || best_u[k] >= box.hi[k] - margin) out.interior = false;
  }
  return out;
}

double hjb_residual(const ControlProblem& problem, double w_t, const StateVec& Dw, double t,
                    const StateVec& x) {
  return w_t + pair_Astar(problem.A, Dw, x) + hamiltonian(problem, t, x, Dw).value;
}

}  // namespace evoctrl
