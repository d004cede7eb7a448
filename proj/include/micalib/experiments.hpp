#pragma once

#include <array>
#include <optional>
#include <vector>

#include "micalib/geometry.hpp"
#include "micalib/mi.hpp"
#include "micalib/optimizer.hpp"

namespace micalib {

enum class PerturbationMode { RotationOnly, RotationTranslation };

/// A set of initial-guess offsets: unit directions from the Fibonacci
/// sphere scaled into Euler-angle components (degrees) and, in 6-DoF
/// mode, the same directions scaled into translation components
/// (meters).
struct PerturbationBatch {
  PerturbationMode mode = PerturbationMode::RotationOnly;
  double rotation_deg = 0.0;
  double translation_m = 0.0;
  std::vector<Vec3> directions;
  std::vector<ExtrinsicParams> deltas;
};

/// Builds n perturbations of the given magnitudes. Deterministic; the
/// rotation and translation parts of a 6-DoF delta reuse the same
/// direction. Throws std::invalid_argument for n < 1 or negative
/// magnitudes.
PerturbationBatch generate_perturbations(PerturbationMode mode,
                                         double rot_deg, double trans_m,
                                         int n);

/// Componentwise addition; the result is the optimizer's initial guess.
ExtrinsicParams apply_perturbation(const ExtrinsicParams& gt,
                                   const ExtrinsicParams& delta);

/// Strict recovery thresholds: geodesic rotation residual < 0.5 degrees
/// and Euclidean translation residual < 0.20 m.
bool hit_decision(double rot_err_deg, double trans_err_m);
bool hit_metric(const ExtrinsicParams& optimized, const ExtrinsicParams& gt);

struct RunRecord {
  ExtrinsicParams initial;
  ExtrinsicParams optimized;
  ExtrinsicParams ground_truth;
  double best_mi = 0.0;
  int evaluations = 0;
  bool hit = false;
};

struct BatchOptions {
  int dof = 3;  // 3 = rotation only (translation pinned), 6 = full pose
  opt::OptimizerConfig optimizer;
  opt::ParamScaling scaling;
  double bound_halfwidth = 30.0;  // box half-width in scaled units
  int threads = 1;
};

/// Result of refine_extrinsics: the refined pose, its objective value,
/// and the total evaluation count across all restarts.
struct RefineResult {
  ExtrinsicParams params;
  double mi = 0.0;
  int evaluations = 0;
};

/// Maximizes the objective from `init`, restarting the optimizer at its
/// own endpoint until the pose stops moving (at most a handful of
/// passes). Restarts rebuild the interpolation geometry at full scale,
/// which recovers the weakly observable directions that a single run
/// can under-step once its radius has contracted. Bounds are fixed
/// around `init` and shared by every pass. dof selects how many leading
/// parameters move (3 or 6; others stay pinned at their init values).
RefineResult refine_extrinsics(const MIObjectiveContext& ctx,
                               const ExtrinsicParams& init, int dof,
                               const opt::OptimizerConfig& config,
                               const opt::ParamScaling& scaling,
                               double bound_halfwidth,
                               const opt::TraceFn& trace = nullptr);

/// One recovery optimization per perturbation, starting from
/// gt + delta. A run that throws is recorded as a miss; the batch never
/// aborts. Records depend only on inputs, not on execution order or
/// thread count.
std::vector<RunRecord> run_batch(const MIObjectiveContext& ctx,
                                 const ExtrinsicParams& gt,
                                 const PerturbationBatch& batch,
                                 const BatchOptions& opts);

/// Hit rate plus signed per-parameter residual statistics
/// (optimized - ground truth) over the hit runs only. mean is absent
/// with zero hits; stddev (n-1 denominator) additionally needs two.
struct BatchStatistics {
  int total = 0;
  int hits = 0;
  double hit_rate = 0.0;
  std::optional<std::array<double, 6>> mean;
  std::optional<std::array<double, 6>> stddev;
};

BatchStatistics batch_statistics(const std::vector<RunRecord>& records);

/// Parameter indexing shared by sweeps, statistics, and CSV headers:
/// 0..2 are Euler angles (degrees), 3..5 translation (meters).
const char* param_name(int index);

/// Objective values on a regular (steps x steps) grid of offsets of two
/// parameters around a center pose; offsets span [-range, +range] in
/// the axes' native units. values is row-major over (offset_a,
/// offset_b). Throws std::invalid_argument for steps < 2 or equal axes.
struct SweepResult {
  int axis_a = 0;
  int axis_b = 1;
  std::vector<double> offsets;
  std::vector<double> values;
};

SweepResult mi_surface_sweep(const MIObjectiveContext& ctx,
                             const ExtrinsicParams& center, int axis_a,
                             int axis_b, double range, int steps);

}  // namespace micalib
