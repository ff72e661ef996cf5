#include "evoctrl/statespace.hpp"

#include <cmath>
#include <stdexcept>

#include <Eigen/Dense>

#include "evoctrl/rng.hpp"

namespace evoctrl {

namespace {

constexpr double kPi = 3.14159265358979323846;

// Exact exponential of a 1x1 or 2x2 matrix.  For the 2x2 case split off the
// mean of the trace: m = mu I + n with tr(n) = 0, so n^2 = disc * I and
// e^n = cosh(r) I + sinh(r)/r * n with r^2 = disc (trig branch for disc < 0).
Eigen::MatrixXd expm_block(const Eigen::MatrixXd& m) {
  if (m.rows() == 1) {
    Eigen::MatrixXd e(1, 1);
    e(0, 0) = std::exp(m(0, 0));
    return e;
  }
  const double mu = 0.5 * (m(0, 0) + m(1, 1));
  Eigen::Matrix2d n = m;
  n(0, 0) -= mu;
  n(1, 1) -= mu;
  const double disc = n(0, 0) * n(0, 0) + n(0, 1) * n(1, 0);
  double c, s;  // e^n = c I + s n
  if (disc > 1e-8) {
    const double r = std::sqrt(disc);
    c = std::cosh(r);
    s = std::sinh(r) / r;
  } else if (disc < -1e-8) {
    const double w = std::sqrt(-disc);
    c = std::cos(w);
    s = std::sin(w) / w;
  } else {
    c = 1.0 + disc / 2.0 + disc * disc / 24.0;
    s = 1.0 + disc / 6.0 + disc * disc / 120.0;
  }
  Eigen::Matrix2d e = c * Eigen::Matrix2d::Identity() + s * n;
  return std::exp(mu) * e;
}

double symmetric_top_eigenvalue(const Eigen::MatrixXd& m) {
  const Eigen::MatrixXd sym = 0.5 * (m + m.transpose());
  if (sym.rows() == 1) return sym(0, 0);
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(sym);
  return es.eigenvalues().maxCoeff();
}

}  // namespace

bool is_finite(const StateVec& x) { return x.allFinite(); }

SpectralOperator::SpectralOperator(std::vector<Eigen::MatrixXd> blocks, double dastar_budget)
    : blocks_(std::move(blocks)), dastar_budget_(dastar_budget) {
  if (blocks_.empty()) throw std::invalid_argument("SpectralOperator: no blocks");
  int offset = 0;
  double defect = -std::numeric_limits<double>::infinity();
  for (const auto& b : blocks_) {
    if (b.rows() != b.cols() || (b.rows() != 1 && b.rows() != 2))
      throw std::invalid_argument("SpectralOperator: blocks must be 1x1 or 2x2");
    offsets_.push_back(offset);
    offset += static_cast<int>(b.rows());
    block_norms_.push_back(b.operatorNorm());
    defect = std::max(defect, symmetric_top_eigenvalue(b));
  }
  dim_ = offset;
  dissipativity_defect_ = defect;
}

double SpectralOperator::dastar_norm(const StateVec& p) const {
  if (p.size() != dim_) throw std::invalid_argument("dastar_norm: dimension mismatch");
  double acc = 0.0;
  for (std::size_t b = 0; b < blocks_.size(); ++b) {
    const int off = offsets_[b];
    const int sz = static_cast<int>(blocks_[b].rows());
    // ||(A* p)_b|| = ||M^T p_b|| for the block matrix M.
    acc += (blocks_[b].transpose() * p.segment(off, sz)).squaredNorm();
  }
  return std::sqrt(acc);
}

bool SpectralOperator::in_domain_Astar(const StateVec& p) const {
  return dastar_norm(p) <= dastar_budget_;
}

Eigen::MatrixXd SpectralOperator::dense() const {
  Eigen::MatrixXd m = Eigen::MatrixXd::Zero(dim_, dim_);
  for (std::size_t b = 0; b < blocks_.size(); ++b) {
    const int off = offsets_[b];
    const int sz = static_cast<int>(blocks_[b].rows());
    m.block(off, off, sz, sz) = blocks_[b];
  }
  return m;
}

SmoothingOperator::SmoothingOperator(Eigen::VectorXd diag, double c0)
    : diag_(std::move(diag)), c0_(c0) {
  if (diag_.size() == 0) throw std::invalid_argument("SmoothingOperator: empty diagonal");
  if (diag_.minCoeff() <= 0.0)
    throw std::invalid_argument("SmoothingOperator: diagonal entries must be positive");
  if (c0_ > 0.0) throw std::invalid_argument("SmoothingOperator: c0 must be nonpositive");
}

StateVec SmoothingOperator::apply(const StateVec& x) const {
  if (x.size() != diag_.size()) throw std::invalid_argument("SmoothingOperator: dimension mismatch");
  return diag_.cwiseProduct(x);
}

StateVec SmoothingOperator::apply_inverse(const StateVec& x) const {
  if (x.size() != diag_.size()) throw std::invalid_argument("SmoothingOperator: dimension mismatch");
  return x.cwiseQuotient(diag_);
}

StateVec SmoothingOperator::apply_power(const StateVec& x, double gamma) const {
  if (x.size() != diag_.size()) throw std::invalid_argument("SmoothingOperator: dimension mismatch");
  StateVec out(x.size());
  for (int i = 0; i < x.size(); ++i) out[i] = std::pow(diag_[i], gamma) * x[i];
  return out;
}

double norm_gamma(const SmoothingOperator& B, const StateVec& x, double gamma) {
  if (x.size() != B.dim()) throw std::invalid_argument("norm_gamma: dimension mismatch");
  if (gamma < 0.0) throw std::invalid_argument("norm_gamma: gamma must be nonnegative");
  if (gamma == 0.0) return x.norm();
  double acc = 0.0;
  for (int i = 0; i < x.size(); ++i) acc += std::pow(B.diag()[i], gamma) * x[i] * x[i];
  return std::sqrt(acc);
}

SemigroupAction make_semigroup_action(const SpectralOperator& A, double s) {
  if (s < 0.0) throw std::invalid_argument("semigroup time must be nonnegative");
  SemigroupAction act;
  act.op = &A;
  act.block_exps.reserve(A.blocks().size());
  for (const auto& b : A.blocks()) act.block_exps.push_back(expm_block(s * b));
  return act;
}

StateVec SemigroupAction::apply(const StateVec& x) const {
  if (x.size() != op->dim()) throw std::invalid_argument("SemigroupAction: dimension mismatch");
  StateVec out(x.size());
  int off = 0;
  for (const auto& e : block_exps) {
    const int sz = static_cast<int>(e.rows());
    out.segment(off, sz) = e * x.segment(off, sz);
    off += sz;
  }
  return out;
}

StateVec apply_semigroup(const SpectralOperator& A, double s, const StateVec& x) {
  return make_semigroup_action(A, s).apply(x);
}

StateVec apply_generator(const SpectralOperator& A, const StateVec& x) {
  if (x.size() != A.dim()) throw std::invalid_argument("apply_generator: dimension mismatch");
  StateVec out(x.size());
  int off = 0;
  for (const auto& b : A.blocks()) {
    const int sz = static_cast<int>(b.rows());
    out.segment(off, sz) = b * x.segment(off, sz);
    off += sz;
  }
  return out;
}

double pair_Astar(const SpectralOperator& A, const StateVec& p, const StateVec& x) {
  if (p.size() != A.dim() || x.size() != A.dim())
    throw std::invalid_argument("pair_Astar: dimension mismatch");
  if (!A.in_domain_Astar(p))
    throw std::domain_error("pair_Astar: p exceeds the D(A*) decay budget");
  return p.dot(apply_generator(A, x));
}

BCompatibilityReport check_B_compatibility(const SpectralOperator& A, const SmoothingOperator& B,
                                           int samples, std::uint64_t seed, double tolerance) {
  if (samples < 1) throw std::invalid_argument("check_B_compatibility: samples must be >= 1");
  if (A.dim() != B.dim()) throw std::invalid_argument("check_B_compatibility: dimension mismatch");
  Rng rng(seed);
  BCompatibilityReport report;
  report.samples = samples;
  report.tolerance = tolerance;
  report.max_violation = -std::numeric_limits<double>::infinity();
  for (int i = 0; i < samples; ++i) {
    const StateVec x = rng.unit_vector(A.dim());
    // <(A*B + c0 B)x, x> = <Bx, Ax> + c0 <Bx, x>
    const StateVec bx = B.apply(x);
    const double form = bx.dot(apply_generator(A, x)) + B.c0() * bx.dot(x);
    if (form > report.max_violation) {
      report.max_violation = form;
      report.worst = x;
    }
  }
  report.pass = report.max_violation <= tolerance;
  return report;
}

int fourier_cos_index(int k) { return 2 * k - 1; }
int fourier_sin_index(int k) { return 2 * k; }

StateVec basis_vector(int n, int idx) {
  if (idx < 0 || idx >= n) throw std::invalid_argument("basis_vector: index out of range");
  StateVec e = StateVec::Zero(n);
  e[idx] = 1.0;
  return e;
}

SpectralOperator make_rotation_generator(int n, double constant_mode_eig) {
  if (n < 1 || n % 2 == 0)
    throw std::invalid_argument("rotation generator needs odd dimension 1 + 2K");
  if (constant_mode_eig > 0.0)
    throw std::invalid_argument("constant-mode eigenvalue must be nonpositive");
  std::vector<Eigen::MatrixXd> blocks;
  Eigen::MatrixXd c(1, 1);
  c(0, 0) = constant_mode_eig;
  blocks.push_back(c);
  const int pairs = (n - 1) / 2;
  for (int k = 1; k <= pairs; ++k) {
    const double omega = 2.0 * kPi * k;
    Eigen::Matrix2d m;
    // d/ds maps (cos_k, sin_k) coordinates (c, s) to (omega s, -omega c).
    m << 0.0, omega, -omega, 0.0;
    blocks.push_back(m);
  }
  return SpectralOperator(std::move(blocks));
}

SpectralOperator make_scalar_generator(double a) {
  Eigen::MatrixXd m(1, 1);
  m(0, 0) = a;
  return SpectralOperator({m});
}

SmoothingOperator make_inverse_sqrt_laplacian(int n) {
  if (n < 1 || n % 2 == 0)
    throw std::invalid_argument("Fourier smoothing operator needs odd dimension");
  Eigen::VectorXd d(n);
  d[0] = 1.0;
  const int pairs = (n - 1) / 2;
  for (int k = 1; k <= pairs; ++k) {
    const double val = 1.0 / std::sqrt(1.0 + 4.0 * kPi * kPi * k * k);
    d[fourier_cos_index(k)] = val;
    d[fourier_sin_index(k)] = val;
  }
  return SmoothingOperator(d, 0.0);
}

}  // namespace evoctrl
