#pragma once

#include <cstdint>
#include <functional>
#include <vector>

#include "evoctrl/problem.hpp"
#include "evoctrl/statespace.hpp"
#include "evoctrl/value.hpp"

namespace evoctrl {

/// Regularization tuple for the inf/sup-convolutions
///   w_{lambda,eps,beta}(t,x) = inf_{s,y} { w(s,y) + ||x-y||_{-1}^2 / 2 eps
///       + (t-s)^2 / 2 beta + lambda e^{2 m K (T-s)} ||y||^m },
/// and the mirror-image sup form.  Requires m > growth exponent of w.
struct ConvolutionParams {
  double lambda = 1e-8;
  double epsilon = 1e-2;
  double beta = 1e-3;
  double m = 2.0;
  double K = 1.0;

  void validate() const;
};

/// Inner-optimizer knobs.  The coarse multistart grid seeds the time axis and
/// offsets along the leading basis directions; descents run a compass pattern
/// search with per-coordinate scaling from the penalty curvatures.
struct ConvolveNumerics {
  int time_starts = 17;
  int space_starts_per_dim = 9;
  int effective_dims = 2;     // leading basis directions seeded in the multistart
  double space_radius = 0.0;  // 0 => 1 + ||x|| / 2
  double search_radius = 0.0; // 0 => ||x|| + 2 (ball constraint for y)
  double step_tol = 1e-9;
  int descents = 3;           // extra descents from the best grid candidates
};

/// Value and envelope differential of a convolution at one point.  p = B q
/// exactly, with q read off the minimizer; when two near-optimal minimizers
/// are found (a kink of w) the point is flagged non-convergent and the
/// alternate candidate is reported.
struct EnvelopePoint {
  double value = 0.0;
  double minimizer_s = 0.0;
  StateVec minimizer_y;
  double a = 0.0;   // temporal envelope derivative
  StateVec p;       // spatial envelope derivative, p = B q
  StateVec q;
  bool converged = true;
  double alt_value = 0.0;
  double alt_s = 0.0;
  StateVec alt_y;
};

EnvelopePoint inf_convolve(const ScalarField& w, const ControlProblem& problem,
                           const ConvolutionParams& params, double t, const StateVec& x,
                           const ConvolveNumerics& numerics = {});

EnvelopePoint sup_convolve(const ScalarField& w, const ControlProblem& problem,
                           const ConvolutionParams& params, double t, const StateVec& x,
                           const ConvolveNumerics& numerics = {});

using PointValueFn = std::function<double(double, const StateVec&)>;

struct SemiconvexityReport {
  double max_violation = -std::numeric_limits<double>::infinity();
  bool pass = false;
  int triples = 0;
  double tolerance = 0.0;
  double worst_t1 = 0.0, worst_t2 = 0.0;
  StateVec worst_x1, worst_x2;
  std::vector<double> violations;  // per-triple witnesses for CSV export
};

/// Midpoint-concavity probe of v(t,x) - ||x||_{-1}^2 / 2 eps - t^2 / 2 beta
/// where v is the inf-convolution of w; violations beyond the inner-optimizer
/// tolerance disprove the semiconcavity normal form.
SemiconvexityReport semiconvexity_probe(const ScalarField& w, const ControlProblem& problem,
                                        const ConvolutionParams& params, int triples,
                                        std::uint64_t seed = 11, double radius = 2.0,
                                        double tolerance = 1e-6,
                                        const ConvolveNumerics& numerics = {});

/// Same check against an externally supplied value function (negative controls).
SemiconvexityReport semiconvexity_probe_fn(const PointValueFn& value, const ControlProblem& problem,
                                           const ConvolutionParams& params, int triples,
                                           std::uint64_t seed = 11, double radius = 2.0,
                                           double tolerance = 1e-6);

struct LipschitzMinus2Report {
  double M_half = 0.0;  // empirical constant on the first half of the samples
  double M_full = 0.0;  // and on all of them
  double growth = 0.0;  // M_full / M_half
  bool stable = false;  // growth within 20% under sample doubling
  double M_axes = 0.0;  // constant over the coordinate-direction pairs only
  double M_random = 0.0;
  std::vector<double> axis_ratios;  // per-mode coordinate-pair ratios
  bool high_mode_blowup = false;    // top-mode ratio dwarfs the low modes
  int samples = 0;
  double worst_t1 = 0.0, worst_t2 = 0.0;
  StateVec worst_x1, worst_x2;
};

/// Empirical ||.||_{-2} Lipschitz constant of the inf-convolution on the ball
/// B_R: sup |v(t,x) - v(s,y)| / (|t-s| + ||x-y||_{-2}), with a sample-doubling
/// stability flag.  Coordinate-direction pairs are always included; a field
/// that is only ||.||-Lipschitz blows up on the high modes and gets flagged.
LipschitzMinus2Report lipschitz_minus2_probe(const ScalarField& w, const ControlProblem& problem,
                                             const ConvolutionParams& params, double radius,
                                             int samples, std::uint64_t seed = 13,
                                             const ConvolveNumerics& numerics = {});

LipschitzMinus2Report lipschitz_minus2_probe_fn(const PointValueFn& value,
                                                const ControlProblem& problem, double radius,
                                                int samples, std::uint64_t seed = 13);

enum class ConvolutionSide {
  Super,  // inf-convolution of a supersolution candidate
  Sub     // sup-convolution of a subsolution candidate
};

/// Perturbed-equation residual r = a + <A* p, x> + H(t, x, p) evaluated with
/// the envelope differential of the requested convolution at (t,x).  For the
/// exact value function both one-sided bounds hold and r stays within the
/// gamma budget of the regularization; a shift of w by delta * (T - t) moves r
/// by exactly -delta at smooth points.  Throws on a non-convergent envelope.
double perturbed_hjb_residual(const ControlProblem& problem, const ScalarField& w,
                              const ConvolutionParams& params, double t, const StateVec& x,
                              ConvolutionSide side, const ConvolveNumerics& numerics = {});

}  // namespace evoctrl
