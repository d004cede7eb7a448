#include "micalib/optimizer.hpp"

#include <Eigen/Dense>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <vector>

namespace micalib::opt {

namespace {

// The solver below minimizes internally; the public interface maximizes.
// Everything in this anonymous namespace works on F = -f.

// Quadratic model c + g.(x - base) + 0.5 (x - base)^T H (x - base).
struct QuadModel {
  Eigen::VectorXd base;
  double c = 0.0;
  Eigen::VectorXd g;
  Eigen::MatrixXd H;

  double value(const Eigen::VectorXd& x) const {
    const Eigen::VectorXd d = x - base;
    return c + g.dot(d) + 0.5 * d.dot(H * d);
  }

  Eigen::VectorXd gradient(const Eigen::VectorXd& x) const {
    return g + H * (x - base);
  }

  // Re-express the same quadratic about a new base point.
  void shift_base(const Eigen::VectorXd& new_base) {
    const Eigen::VectorXd d = new_base - base;
    c += g.dot(d) + 0.5 * d.dot(H * d);
    g += H * d;
    base = new_base;
  }
};

// Interpolation system for the minimum-Frobenius-norm model update.
//
// With displacements s_i = y_i - base scaled by a common factor, the KKT
// system for "interpolate the residuals, minimize ||dH||_F" is
//
//   [ A  P ] [ lambda ]   [ r ]        A_ij = 0.5 (s_i . s_j)^2
//   [ P' 0 ] [ coeffs ] = [ 0 ]        P row i = [1, s_i']
//
// and the same factorization yields Lagrange polynomial values: for a
// query x, l_j(x) is component j of W^-1 phi(x) with
// phi(x) = [0.5 (s_1.s)^2, ..., 1, s'].
class InterpSystem {
 public:
  // Returns false when the point set is degenerate (singular system).
  bool factorize(const std::vector<Eigen::VectorXd>& points,
                 const Eigen::VectorXd& base) {
    const int m = static_cast<int>(points.size());
    const int n = static_cast<int>(base.size());
    scale_ = 0.0;
    scaled_.assign(m, Eigen::VectorXd());
    for (int i = 0; i < m; ++i) {
      scale_ = std::max(scale_, (points[i] - base).norm());
    }
    if (scale_ <= 0.0) return false;
    for (int i = 0; i < m; ++i) {
      scaled_[i] = (points[i] - base) / scale_;
    }

    Eigen::MatrixXd W = Eigen::MatrixXd::Zero(m + n + 1, m + n + 1);
    for (int i = 0; i < m; ++i) {
      for (int j = 0; j <= i; ++j) {
        const double dot = scaled_[i].dot(scaled_[j]);
        W(i, j) = W(j, i) = 0.5 * dot * dot;
      }
      W(i, m) = W(m, i) = 1.0;
      W.block(i, m + 1, 1, n) = scaled_[i].transpose();
      W.block(m + 1, i, n, 1) = scaled_[i];
    }
    lu_.compute(W);
    base_ = base;
    m_ = m;
    n_ = n;
    return lu_.isInvertible();
  }

  // Least-change update: adds to `model` the minimum-Frobenius-norm
  // quadratic that interpolates `residuals` at the factorized points.
  void apply_update(const Eigen::VectorXd& residuals, QuadModel* model) const {
    Eigen::VectorXd rhs = Eigen::VectorXd::Zero(m_ + n_ + 1);
    rhs.head(m_) = residuals;
    const Eigen::VectorXd sol = lu_.solve(rhs);

    model->c += sol(m_);
    model->g += sol.segment(m_ + 1, n_) / scale_;
    for (int j = 0; j < m_; ++j) {
      const double lam = sol(j) / (scale_ * scale_);
      if (lam != 0.0) {
        model->H.noalias() += lam * (scaled_[j] * scaled_[j].transpose());
      }
    }
  }

  // Values of all m Lagrange polynomials at x.
  Eigen::VectorXd lagrange_at(const Eigen::VectorXd& x) const {
    const Eigen::VectorXd s = (x - base_) / scale_;
    Eigen::VectorXd phi(m_ + n_ + 1);
    for (int i = 0; i < m_; ++i) {
      const double dot = scaled_[i].dot(s);
      phi(i) = 0.5 * dot * dot;
    }
    phi(m_) = 1.0;
    phi.segment(m_ + 1, n_) = s;
    return lu_.solve(phi).head(m_);
  }

  // Gradient of the j-th Lagrange polynomial at x (original units).
  Eigen::VectorXd lagrange_gradient(int j, const Eigen::VectorXd& x) const {
    Eigen::VectorXd ej = Eigen::VectorXd::Zero(m_ + n_ + 1);
    ej(j) = 1.0;
    const Eigen::VectorXd coeffs = lu_.solve(ej);
    const Eigen::VectorXd s = (x - base_) / scale_;
    Eigen::VectorXd grad = coeffs.segment(m_ + 1, n_);
    for (int k = 0; k < m_; ++k) {
      if (coeffs(k) != 0.0) grad += coeffs(k) * scaled_[k].dot(s) * scaled_[k];
    }
    return grad / scale_;
  }

 private:
  Eigen::FullPivLU<Eigen::MatrixXd> lu_;
  std::vector<Eigen::VectorXd> scaled_;
  Eigen::VectorXd base_;
  double scale_ = 1.0;
  int m_ = 0;
  int n_ = 0;
};

// Minimize g.d + 0.5 d'Hd subject to ||d|| <= delta and lb <= x+d <= ub.
// Truncated conjugate gradients with an active set: whenever a coordinate
// reaches its bound it is frozen and CG restarts on the free subspace.
Eigen::VectorXd trsbox(const Eigen::VectorXd& g0, const Eigen::MatrixXd& H,
                       const Eigen::VectorXd& x, const Eigen::VectorXd& lb,
                       const Eigen::VectorXd& ub, double delta) {
  const int n = static_cast<int>(x.size());
  Eigen::VectorXd d = Eigen::VectorXd::Zero(n);
  const double gtol = 1e-12 * std::max(1.0, g0.norm());
  const double bound_tol = 1e-13 * std::max(1.0, delta);

  for (int restart = 0; restart <= n; ++restart) {
    const Eigen::VectorXd g = g0 + H * d;

    // Free coordinates: not pinned at a bound with the gradient pushing
    // further out.
    Eigen::VectorXd r = Eigen::VectorXd::Zero(n);
    for (int i = 0; i < n; ++i) {
      const double xi = x(i) + d(i);
      const bool at_lower = xi <= lb(i) + bound_tol && g(i) >= 0.0;
      const bool at_upper = xi >= ub(i) - bound_tol && g(i) <= 0.0;
      if (!at_lower && !at_upper) r(i) = -g(i);
    }
    if (r.norm() <= gtol) break;

    Eigen::VectorXd p = r;
    double rs_old = r.squaredNorm();
    bool hit_box = false;

    for (int iter = 0; iter < 2 * n + 4; ++iter) {
      const Eigen::VectorXd Hp = H * p;
      const double pHp = p.dot(Hp);

      // Largest step along p that stays inside the trust region.
      const double dd = d.squaredNorm();
      const double dp = d.dot(p);
      const double pp = p.squaredNorm();
      if (pp <= 0.0) break;
      const double disc =
          std::max(0.0, dp * dp + pp * (delta * delta - dd));
      double alpha_lim = (std::sqrt(disc) - dp) / pp;
      bool tr_limits = true;

      // Largest step that keeps every coordinate inside the box.
      int box_axis = -1;
      for (int i = 0; i < n; ++i) {
        if (p(i) == 0.0) continue;
        const double room =
            p(i) > 0.0 ? ub(i) - x(i) - d(i) : lb(i) - x(i) - d(i);
        const double a_box = room / p(i);
        if (a_box < alpha_lim) {
          alpha_lim = a_box;
          tr_limits = false;
          box_axis = i;
        }
      }
      alpha_lim = std::max(alpha_lim, 0.0);

      double alpha = alpha_lim;
      bool interior_step = false;
      if (pHp > 0.0) {
        const double alpha_cg = rs_old / pHp;
        if (alpha_cg < alpha_lim) {
          alpha = alpha_cg;
          interior_step = true;
        }
      }

      d += alpha * p;

      if (!interior_step) {
        if (tr_limits) {
          // Reached the trust-region sphere: done globally.
          restart = n + 1;
        } else {
          // Reached a box face: freeze that coordinate and restart CG.
          (void)box_axis;
          hit_box = true;
        }
        break;
      }

      r -= alpha * Hp;
      const double rs_new = r.squaredNorm();
      if (rs_new <= gtol * gtol) {
        restart = n + 1;
        break;
      }
      p = r + (rs_new / rs_old) * p;
      rs_old = rs_new;
    }

    if (!hit_box) break;
  }

  // Snap exactly onto the box to guard against roundoff.
  for (int i = 0; i < n; ++i) {
    d(i) = std::min(std::max(x(i) + d(i), lb(i)), ub(i)) - x(i);
  }
  return d;
}

constexpr double kBadRatio = -1e30;

}  // namespace

Bounds Bounds::around(const Eigen::VectorXd& center, double halfwidth) {
  Bounds b;
  b.lower = center.array() - halfwidth;
  b.upper = center.array() + halfwidth;
  return b;
}

OptimizationResult maximize(const ObjectiveFn& f, const Eigen::VectorXd& x0,
                            const Bounds& bounds, const OptimizerConfig& config,
                            const TraceFn& trace) {
  const int n = static_cast<int>(x0.size());
  if (n < 1) throw std::invalid_argument("optimizer: empty parameter vector");
  if (bounds.lower.size() != n || bounds.upper.size() != n) {
    throw std::invalid_argument("optimizer: bounds dimension mismatch");
  }
  for (int i = 0; i < n; ++i) {
    if (!(bounds.lower(i) < bounds.upper(i))) {
      throw std::invalid_argument("optimizer: lower bound must be < upper");
    }
    if (!(x0(i) > bounds.lower(i)) || !(x0(i) < bounds.upper(i))) {
      throw std::invalid_argument(
          "optimizer: start point must lie strictly inside the bounds");
    }
  }
  if (!(config.rho_end > 0.0) || !(config.rho_begin > config.rho_end)) {
    throw std::invalid_argument("optimizer: need rho_begin > rho_end > 0");
  }
  if (config.max_evaluations < 1) {
    throw std::invalid_argument("optimizer: max_evaluations must be >= 1");
  }
  int npt = config.interpolation_points;
  if (npt == 0) npt = 2 * n + 1;
  if (npt < n + 2 || npt > (n + 1) * (n + 2) / 2) {
    throw std::invalid_argument(
        "optimizer: interpolation_points outside [n+2, (n+1)(n+2)/2]");
  }

  const Eigen::VectorXd& lb = bounds.lower;
  const Eigen::VectorXd& ub = bounds.upper;

  int evals = 0;
  bool budget_hit = false;
  // Internal values are F = -f; non-finite f is rejected by substituting
  // a finite penalty so the model never sees inf/NaN.
  auto evaluate = [&](const Eigen::VectorXd& x) -> double {
    const double fx = f(x);
    if (trace) trace(evals, x, fx);
    ++evals;
    return std::isfinite(fx) ? -fx
                             : std::numeric_limits<double>::quiet_NaN();
  };

  // --- Initial interpolation set: x0 plus coordinate steps of length
  // rho_begin, flipped or shortened where a bound is closer, then axis
  // pairs if npt exceeds 2n+1.
  std::vector<Eigen::VectorXd> pts;
  pts.reserve(npt);
  Eigen::VectorXd step_pos(n), step_neg(n);
  for (int i = 0; i < n; ++i) {
    step_pos(i) = std::min(config.rho_begin, 0.5 * (ub(i) - x0(i)));
    step_neg(i) = std::min(config.rho_begin, 0.5 * (x0(i) - lb(i)));
  }
  pts.push_back(x0);
  for (int i = 0; i < n && static_cast<int>(pts.size()) < npt; ++i) {
    Eigen::VectorXd y = x0;
    y(i) += step_pos(i);
    pts.push_back(y);
  }
  for (int i = 0; i < n && static_cast<int>(pts.size()) < npt; ++i) {
    Eigen::VectorXd y = x0;
    y(i) -= step_neg(i);
    pts.push_back(y);
  }
  for (int i = 0; i < n && static_cast<int>(pts.size()) < npt; ++i) {
    for (int j = i + 1; j < n && static_cast<int>(pts.size()) < npt; ++j) {
      Eigen::VectorXd y = x0;
      y(i) += step_pos(i);
      y(j) += step_pos(j);
      pts.push_back(y);
    }
  }

  std::vector<double> vals(pts.size(),
                           std::numeric_limits<double>::quiet_NaN());
  for (size_t i = 0; i < pts.size(); ++i) {
    if (evals >= config.max_evaluations) {
      budget_hit = true;
      break;
    }
    vals[i] = evaluate(pts[i]);
  }

  // Incumbent: best finite value seen so far (ties keep the earliest).
  int best_idx = -1;
  for (size_t i = 0; i < vals.size(); ++i) {
    if (std::isfinite(vals[i]) &&
        (best_idx < 0 || vals[i] < vals[best_idx])) {
      best_idx = static_cast<int>(i);
    }
  }

  OptimizationResult result;
  result.best_params = x0;
  result.best_value = -std::numeric_limits<double>::infinity();
  auto finish = [&](Termination term) {
    result.evaluations_used = evals;
    result.termination = term;
    if (best_idx >= 0) {
      result.best_params = pts[best_idx];
      result.best_value = -vals[best_idx];
    }
    return result;
  };

  if (budget_hit) return finish(Termination::EvalBudget);
  if (best_idx < 0) return finish(Termination::Stalled);

  // Rejected points get a finite value clearly worse than anything seen,
  // so the model steers away without being distorted by huge numbers.
  auto penalty = [&]() {
    double worst = vals[best_idx];
    for (double v : vals) {
      if (std::isfinite(v)) worst = std::max(worst, v);
    }
    return worst + 10.0 * (1.0 + std::abs(worst));
  };
  for (double& v : vals) {
    if (!std::isfinite(v)) v = penalty();
  }

  Eigen::VectorXd xbest = pts[best_idx];
  double fbest = vals[best_idx];

  QuadModel model;
  model.base = xbest;
  model.c = 0.0;
  model.g = Eigen::VectorXd::Zero(n);
  model.H = Eigen::MatrixXd::Zero(n, n);

  InterpSystem system;
  auto refit = [&]() -> bool {
    model.shift_base(xbest);
    if (!system.factorize(pts, model.base)) return false;
    Eigen::VectorXd residuals(pts.size());
    for (size_t i = 0; i < pts.size(); ++i) {
      residuals(i) = vals[i] - model.value(pts[i]);
    }
    system.apply_update(residuals, &model);
    return true;
  };
  if (!refit()) return finish(Termination::Stalled);

  double rho = config.rho_begin;
  double delta = config.rho_begin;

  // Replace point t with (y, fy) and refold the model.
  auto replace_point = [&](int t, const Eigen::VectorXd& y, double fy) -> bool {
    pts[t] = y;
    vals[t] = fy;
    if (fy < fbest) {
      best_idx = t;
      xbest = y;
      fbest = fy;
    }
    return refit();
  };

  // Regenerate the interpolation set around the incumbent: fresh
  // coordinate steps at the current resolution. Cures a degenerate
  // point geometry that the least-change updates cannot recover from.
  int rebuilds = 0;
  auto rebuild_set = [&](double radius) -> bool {
    ++rebuilds;
    pts.assign(1, xbest);
    vals.assign(1, fbest);
    best_idx = 0;
    for (int i = 0; i < n && static_cast<int>(pts.size()) < npt; ++i) {
      Eigen::VectorXd y = xbest;
      y(i) += std::min(radius, 0.5 * (ub(i) - xbest(i)));
      if ((y - xbest).norm() > 0.0) pts.push_back(y);
    }
    for (int i = 0; i < n && static_cast<int>(pts.size()) < npt; ++i) {
      Eigen::VectorXd y = xbest;
      y(i) -= std::min(radius, 0.5 * (xbest(i) - lb(i)));
      if ((y - xbest).norm() > 0.0) pts.push_back(y);
    }
    for (int i = 0; i < n && static_cast<int>(pts.size()) < npt; ++i) {
      for (int j = i + 1; j < n && static_cast<int>(pts.size()) < npt; ++j) {
        Eigen::VectorXd y = xbest;
        y(i) += std::min(radius, 0.5 * (ub(i) - xbest(i)));
        y(j) += std::min(radius, 0.5 * (ub(j) - xbest(j)));
        pts.push_back(y);
      }
    }
    vals.assign(pts.size(), fbest);
    for (size_t i = 1; i < pts.size(); ++i) {
      if (evals >= config.max_evaluations) return false;
      const double v = evaluate(pts[i]);
      vals[i] = std::isfinite(v) ? v : penalty();
      if (vals[i] < fbest) {
        best_idx = static_cast<int>(i);
        xbest = pts[i];
        fbest = vals[i];
      }
    }
    model.base = xbest;
    model.c = fbest;
    model.g.setZero();
    model.H.setZero();
    return refit();
  };

  // Descends the rho ladder; returns false when already at the bottom.
  auto shrink_rho = [&]() -> bool {
    if (rho <= config.rho_end) return false;
    const double over = rho / config.rho_end;
    if (over <= 16.0) {
      rho = config.rho_end;
    } else if (over <= 250.0) {
      rho = std::sqrt(rho * config.rho_end);
    } else {
      rho = 0.1 * rho;
    }
    delta = std::max(0.5 * delta, rho);
    return true;
  };

  // Farthest interpolation point from the incumbent.
  auto farthest = [&](int* idx) -> double {
    *idx = -1;
    double far_dist = 0.0;
    for (int j = 0; j < static_cast<int>(pts.size()); ++j) {
      if (j == best_idx) continue;
      const double dist = (pts[j] - xbest).norm();
      if (dist > far_dist) {
        far_dist = dist;
        *idx = j;
      }
    }
    return far_dist;
  };

  // Replace the far point where its Lagrange polynomial is steep near
  // the incumbent, keeping the set well poised in varied directions.
  // Returns false only when the eval budget is gone.
  auto geometry_step = [&](int far_idx, double far_dist, bool* ok) -> bool {
    Eigen::VectorXd dir = system.lagrange_gradient(far_idx, xbest);
    const double gn = dir.norm();
    dir = gn > 1e-30 ? Eigen::VectorXd(dir / gn)
                     : Eigen::VectorXd((pts[far_idx] - xbest).normalized());
    const double radius =
        std::max(std::min(0.1 * far_dist, 0.5 * delta), rho);
    Eigen::VectorXd cand_a = xbest + radius * dir;
    Eigen::VectorXd cand_b = xbest - radius * dir;
    for (int i = 0; i < n; ++i) {
      cand_a(i) = std::min(std::max(cand_a(i), lb(i)), ub(i));
      cand_b(i) = std::min(std::max(cand_b(i), lb(i)), ub(i));
    }
    const double la = std::abs(system.lagrange_at(cand_a)(far_idx));
    const double lb_val = std::abs(system.lagrange_at(cand_b)(far_idx));
    const Eigen::VectorXd& cand = la >= lb_val ? cand_a : cand_b;
    if ((cand - xbest).norm() <= 1e-12 * std::max(1.0, radius)) {
      *ok = false;
      return true;
    }
    if (evals >= config.max_evaluations) return false;
    const double fc_raw = evaluate(cand);
    const double fc = std::isfinite(fc_raw) ? fc_raw : penalty();
    *ok = replace_point(far_idx, cand, fc);
    if (!*ok && rebuilds == 0) *ok = rebuild_set(std::max(rho, 1e-8));
    return true;
  };

  const long max_iters = 40L * config.max_evaluations + 100;
  for (long iter = 0; iter < max_iters; ++iter) {
    const Eigen::VectorXd d =
        trsbox(model.gradient(xbest), model.H, xbest, lb, ub, delta);
    const double dnorm = d.norm();

    if (dnorm >= 0.5 * rho) {
      // --- Trust-region step.
      if (evals >= config.max_evaluations) {
        return finish(Termination::EvalBudget);
      }
      Eigen::VectorXd xnew = xbest + d;
      for (int i = 0; i < n; ++i) {
        xnew(i) = std::min(std::max(xnew(i), lb(i)), ub(i));
      }
      const double fnew_raw = evaluate(xnew);
      const bool rejected = !std::isfinite(fnew_raw);
      const double fnew = rejected ? penalty() : fnew_raw;

      const double pred = model.value(xbest) - model.value(xnew);
      const double actual = fbest - fnew;
      double ratio;
      if (rejected) {
        ratio = kBadRatio;
      } else if (pred > 1e-300) {
        ratio = actual / pred;
      } else {
        ratio = actual > 0.0 ? 1.0 : kBadRatio;
      }

      if (ratio < 0.1) {
        delta = 0.5 * dnorm;
      } else if (ratio <= 0.7) {
        delta = std::max(0.5 * delta, dnorm);
      } else {
        delta = std::max(0.5 * delta, 2.0 * dnorm);
      }
      if (delta <= 1.5 * rho) delta = rho;

      // The new point enters the set even when its value was a penalty
      // substitute, so the model learns to avoid degenerate regions.
      // Pick the point to drop: large Lagrange value at the new point,
      // biased toward points far from the incumbent.
      bool inserted = false;
      {
        const Eigen::VectorXd lag = system.lagrange_at(xnew);
        int t = -1;
        double best_w = 0.0;
        const double dist_ref = std::max(delta, rho);
        for (int j = 0; j < static_cast<int>(pts.size()); ++j) {
          if (j == best_idx) continue;
          const double dist = (pts[j] - xbest).norm() / dist_ref;
          const double w =
              std::abs(lag(j)) * std::max(1.0, dist * dist * dist);
          if (w > best_w) {
            best_w = w;
            t = j;
          }
        }
        // Re-adding an existing point would make the system singular;
        // the model already interpolates the value there.
        if (t >= 0 && best_w > 1e-14 &&
            (pts[t] - xnew).norm() > 1e-10 * std::max(1.0, dnorm)) {
          inserted = replace_point(t, xnew, fnew);
          if (!inserted && rebuilds == 0) {
            inserted = rebuild_set(std::max(rho, 1e-8));
          }
          if (!inserted) return finish(Termination::Stalled);
        } else if (fnew < fbest) {
          // Degenerate Lagrange values but a genuine improvement: keep
          // the incumbent correct even if the model set stays put.
          xbest = xnew;
          fbest = fnew;
          pts[best_idx] = xnew;
          vals[best_idx] = fnew;
          if (!refit() && !rebuild_set(std::max(rho, 1e-8))) {
            return finish(Termination::Stalled);
          }
          inserted = true;
        }
      }

      if (ratio >= 0.1) continue;

      // Failed step. Mend geometry first. When the set is already local
      // and the step length has fallen to the resolution with nothing
      // gained, this resolution is exhausted and rho descends (this is
      // what ends runs on noisy objectives instead of burning budget).
      int far_idx = -1;
      const double far_dist = farthest(&far_idx);
      if (far_idx >= 0 && far_dist > std::max(2.0 * delta, 10.0 * rho)) {
        bool ok = true;
        if (!geometry_step(far_idx, far_dist, &ok)) {
          return finish(Termination::EvalBudget);
        }
        continue;
      }
      if (inserted) {
        // The model gained a point; retry while some improvement is
        // left or the step length stays above the resolution.
        if (ratio > 0.0 || dnorm > rho) continue;
      }
      if (!shrink_rho()) return finish(Termination::RadiusConverged);
      continue;
    }

    // --- Step shorter than the resolution: fix geometry or shrink rho.
    int far_idx = -1;
    const double far_dist = farthest(&far_idx);
    if (far_idx >= 0 && far_dist > std::max(2.0 * delta, 10.0 * rho)) {
      bool ok = true;
      if (!geometry_step(far_idx, far_dist, &ok)) {
        return finish(Termination::EvalBudget);
      }
      if (ok) continue;
    }

    if (!shrink_rho()) return finish(Termination::RadiusConverged);
  }

  return finish(Termination::Stalled);
}

Vector6 scale_params(const ExtrinsicParams& params, const ParamScaling& s) {
  Vector6 v;
  v << params.theta_x * s.per_degree, params.theta_y * s.per_degree,
      params.theta_z * s.per_degree, params.tx * s.per_meter,
      params.ty * s.per_meter, params.tz * s.per_meter;
  return v;
}

ExtrinsicParams unscale_params(const Vector6& v, const ParamScaling& s) {
  ExtrinsicParams p;
  p.theta_x = v(0) / s.per_degree;
  p.theta_y = v(1) / s.per_degree;
  p.theta_z = v(2) / s.per_degree;
  p.tx = v(3) / s.per_meter;
  p.ty = v(4) / s.per_meter;
  p.tz = v(5) / s.per_meter;
  return p;
}

}  // namespace micalib::opt
