#pragma once

#include <cstdint>
#include <limits>
#include <vector>

#include <Eigen/Core>

namespace evoctrl {

/// Coefficient vector of a state relative to the fixed orthonormal basis of
/// the truncated Hilbert space.
using StateVec = Eigen::VectorXd;

bool is_finite(const StateVec& x);

/// Generator A acting block-diagonally (1x1 or 2x2 blocks) on the basis
/// coordinates.  The semigroup e^{sA} is evaluated exactly per block, so the
/// stiff linear part never constrains integrator step sizes.
///
/// Membership of a vector p in D(A*) is operationalized through the blockwise
/// norm ||A* p||: at finite truncation the pairing is always finite, and the
/// configurable budget keeps the distinction between gradients that are
/// required to live in D(A*) and those that are not.
class SpectralOperator {
 public:
  /// Default: the zero generator on a one-dimensional space.
  SpectralOperator() : SpectralOperator({Eigen::MatrixXd::Zero(1, 1)}) {}
  explicit SpectralOperator(std::vector<Eigen::MatrixXd> blocks,
                            double dastar_budget = std::numeric_limits<double>::infinity());

  int dim() const { return dim_; }
  const std::vector<Eigen::MatrixXd>& blocks() const { return blocks_; }
  /// Per-block operator norms; these decide D(A*) membership under the budget.
  const std::vector<double>& block_norms() const { return block_norms_; }
  double dastar_budget() const { return dastar_budget_; }

  /// Largest eigenvalue of the symmetric parts; <= 0 iff <Ax,x> <= 0 for all x.
  double dissipativity_defect() const { return dissipativity_defect_; }
  bool is_dissipative(double tol = 1e-12) const { return dissipativity_defect_ <= tol; }

  double dastar_norm(const StateVec& p) const;  // ||A* p||
  bool in_domain_Astar(const StateVec& p) const;

  Eigen::MatrixXd dense() const;

 private:
  std::vector<Eigen::MatrixXd> blocks_;
  std::vector<int> offsets_;
  std::vector<double> block_norms_;
  double dastar_budget_;
  double dissipativity_defect_;
  int dim_;
};

/// Bounded positive self-adjoint smoothing operator B, diagonal in the basis,
/// together with the constant c0 <= 0 of the compatibility condition
/// <(A*B + c0 B)x, x> <= 0.
class SmoothingOperator {
 public:
  /// Default: the identity on a one-dimensional space.
  SmoothingOperator() : SmoothingOperator(Eigen::VectorXd::Ones(1)) {}
  explicit SmoothingOperator(Eigen::VectorXd diag, double c0 = 0.0);

  int dim() const { return static_cast<int>(diag_.size()); }
  const Eigen::VectorXd& diag() const { return diag_; }
  double c0() const { return c0_; }
  double operator_norm() const { return diag_.maxCoeff(); }

  StateVec apply(const StateVec& x) const;          // B x
  StateVec apply_inverse(const StateVec& x) const;  // B^{-1} x
  StateVec apply_power(const StateVec& x, double gamma) const;  // B^gamma x

 private:
  Eigen::VectorXd diag_;
  double c0_;
};

/// Weighted norm ||x||_{-gamma} = ||B^{gamma/2} x||; gamma = 0 is the plain norm.
double norm_gamma(const SmoothingOperator& B, const StateVec& x, double gamma);

/// e^{sA} x, exact per block; contraction for dissipative A.
StateVec apply_semigroup(const SpectralOperator& A, double s, const StateVec& x);

/// A x, blockwise.  At finite truncation every vector is in the domain.
StateVec apply_generator(const SpectralOperator& A, const StateVec& x);

/// <A* p, x> evaluated blockwise as <p, A x>.  Throws std::domain_error when p
/// exceeds the operator's D(A*) decay budget.
double pair_Astar(const SpectralOperator& A, const StateVec& p, const StateVec& x);

struct BCompatibilityReport {
  double max_violation = 0.0;
  bool pass = false;
  int samples = 0;
  double tolerance = 0.0;
  StateVec worst;
};

/// Samples the quadratic form <(A*B + c0 B)x, x> on random unit vectors and
/// reports the largest violation of the dissipativity-compatibility condition.
BCompatibilityReport check_B_compatibility(const SpectralOperator& A, const SmoothingOperator& B,
                                           int samples, std::uint64_t seed = 12345,
                                           double tolerance = 1e-12);

/// Per-block action used by the exact semigroup; exposed for reuse in the
/// integrator's cached stepping.
struct SemigroupAction {
  std::vector<Eigen::MatrixXd> block_exps;
  const SpectralOperator* op = nullptr;
  StateVec apply(const StateVec& x) const;
};
SemigroupAction make_semigroup_action(const SpectralOperator& A, double s);

// ---- factories for the benchmark spaces -----------------------------------

/// Index helpers for the real Fourier basis {1, sqrt2 cos(2 pi k s),
/// sqrt2 sin(2 pi k s)} on L^2(0,1); dimension N = 1 + 2K must be odd.
int fourier_cos_index(int k);  // 2k - 1
int fourier_sin_index(int k);  // 2k

StateVec basis_vector(int n, int idx);

/// Rotation semigroup generator d/ds on periodic L^2(0,1), truncated to the
/// first (N-1)/2 frequency pairs.  The constant-mode block carries the
/// eigenvalue of A* on the constant eigenvector (0 for the pure rotation).
SpectralOperator make_rotation_generator(int n, double constant_mode_eig = 0.0);

SpectralOperator make_scalar_generator(double a);

/// B = (I - Laplacian)^{-1/2} in the Fourier basis: diagonal entries
/// (1 + 4 pi^2 k^2)^{-1/2}, with entry 1 on the constant mode.
SmoothingOperator make_inverse_sqrt_laplacian(int n);

}  // namespace evoctrl
