#pragma once

#include <iosfwd>
#include <optional>
#include <span>
#include <vector>

#include "micalib/features.hpp"

namespace micalib {

/// Histogram axes: one range per variable, shared bin count.
struct BinningConfig {
  int bin_count = 64;
  double lidar_lo = 0.5, lidar_hi = 80.0;
  double camera_lo = 0.5, camera_hi = 80.0;

  void validate() const;

  /// Default ranges for a feature mode and image kind: metric depth uses
  /// the LiDAR depth range on both axes, relative depth uses [0,1] on the
  /// camera axis, intensity uses [0,1] on both.
  static BinningConfig for_mode(FeatureMode mode, FeatureKind kind,
                                int bin_count = 64, double max_depth = 80.0);
};

/// Normalizable 2D histogram of matched feature pairs. Rows index the
/// LiDAR feature axis, columns the camera feature axis.
class JointHistogram {
 public:
  /// Bin the pairs; out-of-range values are clamped into the boundary
  /// bins. Throws std::invalid_argument when pairs is empty.
  static JointHistogram build(const FeaturePairs& pairs,
                              const BinningConfig& config);

  double count(int row, int col) const {
    return counts_[static_cast<size_t>(row) * config_.bin_count + col];
  }
  double total() const { return total_; }
  const BinningConfig& config() const { return config_; }
  std::span<const double> counts() const { return counts_; }

  std::vector<double> marginal_lidar() const;   // row sums
  std::vector<double> marginal_camera() const;  // column sums

  /// CSV export: bin edges for both axes, then the count matrix.
  void write_csv(std::ostream& os) const;

 private:
  JointHistogram() = default;

  BinningConfig config_;
  std::vector<double> counts_;
  double total_ = 0.0;
};

/// Shannon entropy -sum p ln p in nats, with 0 ln 0 = 0. The input must
/// be normalized (sum 1 within 1e-9, entries >= 0) or
/// std::invalid_argument is thrown.
double entropy(std::span<const double> probs);

/// I(X,Y) = H(X) + H(Y) - H(X,Y) in nats from the normalized joint.
double mutual_information(const JointHistogram& joint);

/// Everything a full objective evaluation needs.
struct MIObjectiveContext {
  const FrameSet* frames = nullptr;
  CameraModel cam;
  FeatureMode mode = FeatureMode::D2D;
  BinningConfig binning;
  MatchOptions match;
  int min_matches = 100;
  int threads = 1;
};

/// Objective value when every frame is degenerate; low enough that the
/// optimizer retreats toward populated regions.
constexpr double kDegenerateObjective = -1e6;

/// Per-frame MI at transform t, or nullopt when fewer than
/// ctx.min_matches points land in view.
std::optional<double> calc_frame_mi(const RigidTransform& t,
                                    const Frame& frame,
                                    const MIObjectiveContext& ctx);

/// Average per-frame MI over the non-degenerate frames of ctx.frames;
/// kDegenerateObjective if all frames are degenerate. Deterministic and
/// independent of ctx.threads (fixed-order reduction).
double objective(const ExtrinsicParams& params, const MIObjectiveContext& ctx);

}  // namespace micalib
