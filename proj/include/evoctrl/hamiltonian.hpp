#pragma once

#include "evoctrl/problem.hpp"
#include "evoctrl/statespace.hpp"

namespace evoctrl {

struct HamiltonianResult {
  double value = 0.0;
  Eigen::VectorXd argmin_u;
  bool interior = false;  // argmin strictly inside the control box
};

/// Bellman Hamiltonian H(t,x,p) = inf_u { <p, b(t,x,u)> + L(t,x,u) }, computed
/// by a scan of the control grid followed by one coordinate-wise quadratic
/// refinement around the grid argmin.  Ties break to the lexicographically
/// smallest grid point so synthesis stays reproducible.
HamiltonianResult hamiltonian(const ControlProblem& problem, double t, const StateVec& x,
                              const StateVec& p);

/// Residual of the dynamic-programming equation at a smooth point:
/// w_t + <A* Dw, x> + H(t, x, Dw).  Dw must satisfy the D(A*) budget.
double hjb_residual(const ControlProblem& problem, double w_t, const StateVec& Dw, double t,
                    const StateVec& x);

}  // namespace evoctrl
