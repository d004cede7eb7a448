#include "micalib/mi.hpp"

#include <algorithm>
#include <cmath>
#include <ostream>
#include <stdexcept>

#include "detail/parallel.hpp"

namespace micalib {

void BinningConfig::validate() const {
  if (bin_count < 2) {
    throw std::invalid_argument("BinningConfig: bin_count must be >= 2");
  }
  if (!(lidar_hi > lidar_lo) || !(camera_hi > camera_lo)) {
    throw std::invalid_argument("BinningConfig: hi must exceed lo on both axes");
  }
}

BinningConfig BinningConfig::for_mode(FeatureMode mode, FeatureKind kind,
                                      int bin_count, double max_depth) {
  BinningConfig cfg;
  cfg.bin_count = bin_count;
  if (mode == FeatureMode::I2I) {
    cfg.lidar_lo = 0.0;
    cfg.lidar_hi = 1.0;
    cfg.camera_lo = 0.0;
    cfg.camera_hi = 1.0;
    return cfg;
  }
  cfg.lidar_lo = 0.5;
  cfg.lidar_hi = max_depth;
  if (kind == FeatureKind::RelativeDepth) {
    cfg.camera_lo = 0.0;
    cfg.camera_hi = 1.0;
  } else {
    cfg.camera_lo = 0.5;
    cfg.camera_hi = max_depth;
  }
  return cfg;
}

namespace {
inline int bin_index(double v, double lo, double hi, int bins) {
  const double t = (v - lo) / (hi - lo) * bins;
  const int idx = static_cast<int>(std::floor(t));
  return std::clamp(idx, 0, bins - 1);
}
}  // namespace

JointHistogram JointHistogram::build(const FeaturePairs& pairs,
                                     const BinningConfig& config) {
  config.validate();
  if (pairs.size() == 0) {
    throw std::invalid_argument("JointHistogram: no feature pairs to bin");
  }
  JointHistogram h;
  h.config_ = config;
  const int bins = config.bin_count;
  h.counts_.assign(static_cast<size_t>(bins) * bins, 0.0);
  for (size_t i = 0; i < pairs.size(); ++i) {
    const int row = bin_index(pairs.lidar[i], config.lidar_lo, config.lidar_hi, bins);
    const int col = bin_index(pairs.camera[i], config.camera_lo, config.camera_hi, bins);
    h.counts_[static_cast<size_t>(row) * bins + col] += 1.0;
  }
  h.total_ = static_cast<double>(pairs.size());
  return h;
}

std::vector<double> JointHistogram::marginal_lidar() const {
  const int bins = config_.bin_count;
  std::vector<double> m(bins, 0.0);
  for (int r = 0; r < bins; ++r) {
    for (int c = 0; c < bins; ++c) {
      m[r] += count(r, c);
    }
  }
  return m;
}

std::vector<double> JointHistogram::marginal_camera() const {
  const int bins = config_.bin_count;
  std::vector<double> m(bins, 0.0);
  for (int r = 0; r < bins; ++r) {
    for (int c = 0; c < bins; ++c) {
      m[c] += count(r, c);
    }
  }
  return m;
}

void JointHistogram::write_csv(std::ostream& os) const {
  const int bins = config_.bin_count;
  auto edges = [&](double lo, double hi) {
    os << lo;
    for (int i = 1; i <= bins; ++i) {
      os << ',' << lo + (hi - lo) * i / bins;
    }
    os << '\n';
  };
  os << "# lidar_bin_edges\n";
  edges(config_.lidar_lo, config_.lidar_hi);
  os << "# camera_bin_edges\n";
  edges(config_.camera_lo, config_.camera_hi);
  os << "# counts (rows = lidar bins, cols = camera bins)\n";
  for (int r = 0; r < bins; ++r) {
    for (int c = 0; c < bins; ++c) {
      if (c) os << ',';
      os << count(r, c);
    }
    os << '\n';
  }
}

double entropy(std::span<const double> probs) {
  double sum = 0.0;
  for (double p : probs) {
    if (p < 0.0 || !std::isfinite(p)) {
      throw std::invalid_argument("entropy: entries must be finite and >= 0");
    }
    sum += p;
  }
  if (std::abs(sum - 1.0) > 1e-9) {
    throw std::invalid_argument("entropy: input must sum to 1");
  }
  double h = 0.0;
  for (double p : probs) {
    if (p > 0.0) h -= p * std::log(p);
  }
  return h;
}

namespace {
// Entropy of raw counts with total n: ln(n) - (1/n) sum c ln c.
double count_entropy(std::span<const double> counts, double n) {
  double s = 0.0;
  for (double c : counts) {
    if (c > 0.0) s += c * std::log(c);
  }
  return std::log(n) - s / n;
}
}  // namespace

double mutual_information(const JointHistogram& joint) {
  const double n = joint.total();
  const auto ml = joint.marginal_lidar();
  const auto mc = joint.marginal_camera();
  const double hx = count_entropy(ml, n);
  const double hy = count_entropy(mc, n);
  const double hxy = count_entropy(joint.counts(), n);
  return hx + hy - hxy;
}

std::optional<double> calc_frame_mi(const RigidTransform& t,
                                    const Frame& frame,
                                    const MIObjectiveContext& ctx) {
  const FeaturePairs pairs = get_matches(t, ctx.cam, frame, ctx.mode, ctx.match);
  if (pairs.size() < static_cast<size_t>(ctx.min_matches)) {
    return std::nullopt;
  }
  return mutual_information(JointHistogram::build(pairs, ctx.binning));
}

double objective(const ExtrinsicParams& params, const MIObjectiveContext& ctx) {
  if (ctx.frames == nullptr || ctx.frames->empty()) {
    throw std::invalid_argument("objective: context has no frames");
  }
  const RigidTransform t = params_to_transform(params);
  const size_t n = ctx.frames->size();
  std::vector<std::optional<double>> per_frame(n);
  detail::parallel_for(n, ctx.threads, [&](size_t i) {
    per_frame[i] = calc_frame_mi(t, (*ctx.frames)[i], ctx);
  });

  // Fixed-order reduction keeps the result identical across thread counts.
  double sum = 0.0;
  size_t populated = 0;
  for (size_t i = 0; i < n; ++i) {
    if (per_frame[i]) {
      sum += *per_frame[i];
      ++populated;
    }
  }
  if (populated == 0) {
    return kDegenerateObjective;
  }
  return sum / static_cast<double>(populated);
}

}  // namespace micalib
