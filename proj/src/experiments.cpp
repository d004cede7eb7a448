#include "micalib/experiments.hpp"

#include <cmath>
#include <stdexcept>

#include "detail/parallel.hpp"

namespace micalib {

PerturbationBatch generate_perturbations(PerturbationMode mode,
                                         double rot_deg, double trans_m,
                                         int n) {
  if (n < 1) throw std::invalid_argument("perturbation count must be >= 1");
  if (rot_deg < 0.0 || trans_m < 0.0) {
    throw std::invalid_argument("perturbation magnitudes must be >= 0");
  }

  PerturbationBatch batch;
  batch.mode = mode;
  batch.rotation_deg = rot_deg;
  batch.translation_m =
      mode == PerturbationMode::RotationTranslation ? trans_m : 0.0;
  batch.directions = fibonacci_sphere(n);
  batch.deltas.reserve(static_cast<size_t>(n));
  for (const Vec3& dir : batch.directions) {
    ExtrinsicParams delta{};
    delta.theta_x = rot_deg * dir.x();
    delta.theta_y = rot_deg * dir.y();
    delta.theta_z = rot_deg * dir.z();
    if (mode == PerturbationMode::RotationTranslation) {
      delta.tx = trans_m * dir.x();
      delta.ty = trans_m * dir.y();
      delta.tz = trans_m * dir.z();
    }
    batch.deltas.push_back(delta);
  }
  return batch;
}

ExtrinsicParams apply_perturbation(const ExtrinsicParams& gt,
                                   const ExtrinsicParams& delta) {
  return ExtrinsicParams{gt.theta_x + delta.theta_x,
                         gt.theta_y + delta.theta_y,
                         gt.theta_z + delta.theta_z,
                         gt.tx + delta.tx,
                         gt.ty + delta.ty,
                         gt.tz + delta.tz};
}

bool hit_decision(double rot_err_deg, double trans_err_m) {
  return rot_err_deg < 0.5 && trans_err_m < 0.20;
}

bool hit_metric(const ExtrinsicParams& optimized, const ExtrinsicParams& gt) {
  const RigidTransform t_opt = params_to_transform(optimized);
  const RigidTransform t_gt = params_to_transform(gt);
  const double rot_err =
      rotation_error_angle_deg(t_opt.rotation, t_gt.rotation);
  const double trans_err = (t_opt.translation - t_gt.translation).norm();
  return hit_decision(rot_err, trans_err);
}

RefineResult refine_extrinsics(const MIObjectiveContext& ctx,
                               const ExtrinsicParams& init, int dof,
                               const opt::OptimizerConfig& config,
                               const opt::ParamScaling& scaling,
                               double bound_halfwidth,
                               const opt::TraceFn& trace) {
  if (dof != 3 && dof != 6) {
    throw std::invalid_argument("refine_extrinsics: dof must be 3 or 6");
  }

  const Vector6 x0_full = opt::scale_params(init, scaling);
  Eigen::VectorXd x = x0_full.head(dof);
  const opt::Bounds bounds = opt::Bounds::around(x, bound_halfwidth);

  auto to_params = [&](const Eigen::VectorXd& v) {
    Vector6 full = x0_full;
    full.head(dof) = v;
    return opt::unscale_params(full, scaling);
  };

  RefineResult out;
  out.params = init;
  out.mi = kDegenerateObjective;

  // A pass that barely moves the pose has converged for good; one that
  // travels restarts the search there with full-scale geometry.
  const double move_tol = std::max(10.0 * config.rho_end, 1e-9);
  const int kMaxPasses = 6;
  for (int pass = 0; pass < kMaxPasses; ++pass) {
    // The pose stays strictly inside the shared box so each pass starts
    // from a valid interior point.
    for (int i = 0; i < dof; ++i) {
      const double margin = 1e-9 * (bounds.upper(i) - bounds.lower(i));
      x(i) = std::min(std::max(x(i), bounds.lower(i) + margin),
                      bounds.upper(i) - margin);
    }

    opt::TraceFn pass_trace;
    if (trace) {
      const int offset = out.evaluations;
      pass_trace = [&trace, offset](int k, const Eigen::VectorXd& v,
                                    double f) { trace(offset + k, v, f); };
    }

    const auto res = opt::maximize(
        [&](const Eigen::VectorXd& v) { return objective(to_params(v), ctx); },
        x, bounds, config, pass_trace);
    out.evaluations += res.evaluations_used;

    const double moved = (res.best_params - x).norm();
    if (res.best_value >= out.mi) {
      out.mi = res.best_value;
      x = res.best_params;
    }
    if (moved <= move_tol) break;
  }

  out.params = to_params(x);
  return out;
}

namespace {

RunRecord run_single(const MIObjectiveContext& ctx, const ExtrinsicParams& gt,
                     const ExtrinsicParams& delta, const BatchOptions& opts) {
  RunRecord rec;
  rec.ground_truth = gt;
  rec.initial = apply_perturbation(gt, delta);
  rec.optimized = rec.initial;
  rec.best_mi = kDegenerateObjective;

  // Batch parallelism lives at the run level; each objective call runs
  // single threaded so records cannot depend on the worker count.
  MIObjectiveContext local_ctx = ctx;
  local_ctx.threads = 1;

  try {
    const RefineResult res =
        refine_extrinsics(local_ctx, rec.initial, opts.dof, opts.optimizer,
                          opts.scaling, opts.bound_halfwidth);
    rec.optimized = res.params;
    rec.best_mi = res.mi;
    rec.evaluations = res.evaluations;
    rec.hit = hit_metric(rec.optimized, gt);
  } catch (const std::exception&) {
    // A failed optimization counts as a miss; the batch carries on.
    rec.hit = false;
  }
  return rec;
}

}  // namespace

std::vector<RunRecord> run_batch(const MIObjectiveContext& ctx,
                                 const ExtrinsicParams& gt,
                                 const PerturbationBatch& batch,
                                 const BatchOptions& opts) {
  if (opts.dof != 3 && opts.dof != 6) {
    throw std::invalid_argument("run_batch: dof must be 3 or 6");
  }
  std::vector<RunRecord> records(batch.deltas.size());
  detail::parallel_for(batch.deltas.size(), opts.threads, [&](size_t i) {
    records[i] = run_single(ctx, gt, batch.deltas[i], opts);
  });
  return records;
}

BatchStatistics batch_statistics(const std::vector<RunRecord>& records) {
  BatchStatistics stats;
  stats.total = static_cast<int>(records.size());

  std::array<double, 6> sum{};
  std::vector<std::array<double, 6>> residuals;
  for (const RunRecord& rec : records) {
    if (!rec.hit) continue;
    const Vector6 r = rec.optimized.to_vector() - rec.ground_truth.to_vector();
    std::array<double, 6> res;
    for (int k = 0; k < 6; ++k) {
      res[k] = r(k);
      sum[k] += r(k);
    }
    residuals.push_back(res);
  }

  stats.hits = static_cast<int>(residuals.size());
  stats.hit_rate =
      stats.total > 0 ? static_cast<double>(stats.hits) / stats.total : 0.0;

  if (stats.hits >= 1) {
    std::array<double, 6> mean;
    for (int k = 0; k < 6; ++k) mean[k] = sum[k] / stats.hits;
    stats.mean = mean;
  }
  if (stats.hits >= 2) {
    std::array<double, 6> sd{};
    for (const auto& res : residuals) {
      for (int k = 0; k < 6; ++k) {
        const double d = res[k] - (*stats.mean)[k];
        sd[k] += d * d;
      }
    }
    for (int k = 0; k < 6; ++k) sd[k] = std::sqrt(sd[k] / (stats.hits - 1));
    stats.stddev = sd;
  }
  return stats;
}

const char* param_name(int index) {
  switch (index) {
    case 0: return "theta_x";
    case 1: return "theta_y";
    case 2: return "theta_z";
    case 3: return "tx";
    case 4: return "ty";
    case 5: return "tz";
    default: throw std::invalid_argument("parameter index must be 0..5");
  }
}

SweepResult mi_surface_sweep(const MIObjectiveContext& ctx,
                             const ExtrinsicParams& center, int axis_a,
                             int axis_b, double range, int steps) {
  if (steps < 2) throw std::invalid_argument("sweep needs steps >= 2");
  if (axis_a < 0 || axis_a > 5 || axis_b < 0 || axis_b > 5 ||
      axis_a == axis_b) {
    throw std::invalid_argument("sweep needs two distinct axes in 0..5");
  }
  if (!(range > 0.0)) throw std::invalid_argument("sweep range must be > 0");

  SweepResult result;
  result.axis_a = axis_a;
  result.axis_b = axis_b;
  result.offsets.reserve(static_cast<size_t>(steps));
  for (int i = 0; i < steps; ++i) {
    result.offsets.push_back(-range + 2.0 * range * i / (steps - 1));
  }

  const Vector6 base = center.to_vector();
  result.values.resize(static_cast<size_t>(steps) * steps);
  for (int ia = 0; ia < steps; ++ia) {
    for (int ib = 0; ib < steps; ++ib) {
      Vector6 v = base;
      v(axis_a) += result.offsets[ia];
      v(axis_b) += result.offsets[ib];
      result.values[static_cast<size_t>(ia) * steps + ib] =
          objective(ExtrinsicParams::from_vector(v), ctx);
    }
  }
  return result;
}

}  // namespace micalib
