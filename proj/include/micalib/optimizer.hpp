#pragma once

#include <Eigen/Core>
#include <functional>

#include "micalib/geometry.hpp"

namespace micalib::opt {

/// Box constraints in scaled parameter units.
struct Bounds {
  Eigen::VectorXd lower;
  Eigen::VectorXd upper;

  static Bounds around(const Eigen::VectorXd& center, double halfwidth);
};

struct OptimizerConfig {
  double rho_begin = 1.0;  // initial trust-region radius, scaled units
  double rho_end = 1e-3;   // final radius / convergence resolution
  int max_evaluations = 2000;
  /// Interpolation set size; 0 selects the 2n+1 default. Must lie in
  /// [n+2, (n+1)(n+2)/2] for dimension n.
  int interpolation_points = 0;
};

enum class Termination { RadiusConverged, EvalBudget, Stalled };

struct OptimizationResult {
  Eigen::VectorXd best_params;
  double best_value = 0.0;
  int evaluations_used = 0;
  Termination termination = Termination::Stalled;
};

using ObjectiveFn = std::function<double(const Eigen::VectorXd&)>;
/// Called once per objective evaluation: (evaluation index, point, value).
using TraceFn = std::function<void(int, const Eigen::VectorXd&, double)>;

/// Bounded derivative-free maximization with quadratic interpolation
/// models in a trust region (BOBYQA-class). Maintains an interpolation
/// set, fits minimum-Frobenius-norm model updates, and takes
/// bound-respecting steps; the trust-region resolution shrinks from
/// rho_begin to rho_end. Every evaluated point lies inside the bounds.
/// Non-finite objective values are treated as -infinity (the point is
/// rejected), never propagated. Throws std::invalid_argument when x0 is
/// not strictly inside the bounds or the config is inconsistent.
OptimizationResult maximize(const ObjectiveFn& f, const Eigen::VectorXd& x0,
                            const Bounds& bounds, const OptimizerConfig& config,
                            const TraceFn& trace = nullptr);

/// Per-axis conditioning between parameter space (degrees, meters) and
/// the optimizer's scaled space. The defaults equalize the reprojection
/// displacement of a unit step: 1 unit = 1 degree = 5 cm.
struct ParamScaling {
  double per_degree = 1.0;
  double per_meter = 20.0;
};

Vector6 scale_params(const ExtrinsicParams& params, const ParamScaling& s);
ExtrinsicParams unscale_params(const Vector6& v, const ParamScaling& s);

}  // namespace micalib::opt
