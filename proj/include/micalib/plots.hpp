#pragma once

#include <filesystem>
#include <string>
#include <utility>
#include <vector>

#include "micalib/experiments.hpp"

namespace micalib::plots {

/// One row per run: index, hit flag, evaluation count, best MI, then
/// initial / optimized / ground-truth parameter sextets.
void write_records_csv(const std::filesystem::path& path,
                       const std::vector<RunRecord>& records);

/// One row per labeled batch (label is typically the error level);
/// absent statistics are written as "-".
void write_statistics_csv(
    const std::filesystem::path& path,
    const std::vector<std::pair<std::string, BatchStatistics>>& rows);

/// Sweep grid as offset_a, offset_b, mi rows (steps^2 of them).
void write_sweep_csv(const std::filesystem::path& path,
                     const SweepResult& sweep);

/// Heat-map rendering of a sweep grid; self-contained SVG.
void write_sweep_svg(const std::filesystem::path& path,
                     const SweepResult& sweep);

/// Residual endpoints in the chosen two-parameter projection, two rows
/// per record (initial and optimized).
void write_bullseye_csv(const std::filesystem::path& path,
                        const std::vector<RunRecord>& records, int axis_a,
                        int axis_b);

/// Bull's-eye rendering: ground truth at the origin, one line per
/// record from the initial residual (x marker) to the optimized
/// residual (dot), concentric reference rings. Self-contained SVG; the
/// only <line> elements are the per-record segments.
void write_bullseye_svg(const std::filesystem::path& path,
                        const std::vector<RunRecord>& records, int axis_a,
                        int axis_b);

}  // namespace micalib::plots
