#include "micalib/plots.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <stdexcept>

namespace micalib::plots {

namespace {

// Full-precision decimal form. CSV bytes must not vary across runs or
// thread counts, so formatting goes through snprintf in the default
// "C" locale (nothing in the library calls setlocale).
std::string fmt(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

std::string fmt2(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.2f", v);
  return buf;
}

std::ofstream open_out(const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) {
    throw std::runtime_error("cannot open '" + path.string() +
                             "' for writing");
  }
  return out;
}

void append_params(std::ofstream& out, const ExtrinsicParams& p) {
  const Vector6 v = p.to_vector();
  for (int k = 0; k < 6; ++k) out << "," << fmt(v(k));
}

}  // namespace

void write_records_csv(const std::filesystem::path& path,
                       const std::vector<RunRecord>& records) {
  auto out = open_out(path);
  out << "run_index,hit,evaluations,best_mi";
  for (const char* prefix : {"init_", "opt_", "gt_"}) {
    for (int k = 0; k < 6; ++k) out << "," << prefix << param_name(k);
  }
  out << "\n";
  for (size_t i = 0; i < records.size(); ++i) {
    const RunRecord& rec = records[i];
    out << i << "," << (rec.hit ? 1 : 0) << "," << rec.evaluations << ","
        << fmt(rec.best_mi);
    append_params(out, rec.initial);
    append_params(out, rec.optimized);
    append_params(out, rec.ground_truth);
    out << "\n";
  }
}

void write_statistics_csv(
    const std::filesystem::path& path,
    const std::vector<std::pair<std::string, BatchStatistics>>& rows) {
  auto out = open_out(path);
  out << "label,total,hits,hit_rate";
  for (int k = 0; k < 6; ++k) {
    out << ",mean_" << param_name(k) << ",std_" << param_name(k);
  }
  out << "\n";
  for (const auto& [label, stats] : rows) {
    out << label << "," << stats.total << "," << stats.hits << ","
        << fmt(stats.hit_rate);
    for (int k = 0; k < 6; ++k) {
      out << ",";
      if (stats.mean) out << fmt((*stats.mean)[k]);
      else out << "-";
      out << ",";
      if (stats.stddev) out << fmt((*stats.stddev)[k]);
      else out << "-";
    }
    out << "\n";
  }
}

void write_sweep_csv(const std::filesystem::path& path,
                     const SweepResult& sweep) {
  auto out = open_out(path);
  out << "offset_" << param_name(sweep.axis_a) << ",offset_"
      << param_name(sweep.axis_b) << ",mi\n";
  const size_t steps = sweep.offsets.size();
  for (size_t ia = 0; ia < steps; ++ia) {
    for (size_t ib = 0; ib < steps; ++ib) {
      out << fmt(sweep.offsets[ia]) << "," << fmt(sweep.offsets[ib]) << ","
          << fmt(sweep.values[ia * steps + ib]) << "\n";
    }
  }
}

void write_sweep_svg(const std::filesystem::path& path,
                     const SweepResult& sweep) {
  const int steps = static_cast<int>(sweep.offsets.size());
  const double cell = std::max(8.0, 480.0 / steps);
  const double margin = 60.0;
  const double plot = cell * steps;
  const double width = plot + 2 * margin;
  const double height = plot + 2 * margin;

  double lo = std::numeric_limits<double>::infinity();
  double hi = -std::numeric_limits<double>::infinity();
  for (double v : sweep.values) {
    if (!std::isfinite(v)) continue;
    lo = std::min(lo, v);
    hi = std::max(hi, v);
  }
  const bool flat = !(hi > lo);

  auto out = open_out(path);
  out << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << fmt2(width)
      << "\" height=\"" << fmt2(height) << "\" viewBox=\"0 0 " << fmt2(width)
      << " " << fmt2(height) << "\">\n";
  out << "<rect x=\"0\" y=\"0\" width=\"" << fmt2(width) << "\" height=\""
      << fmt2(height) << "\" fill=\"white\"/>\n";

  for (int ia = 0; ia < steps; ++ia) {
    for (int ib = 0; ib < steps; ++ib) {
      const double v = sweep.values[static_cast<size_t>(ia) * steps + ib];
      std::string fill = "rgb(120,120,120)";
      if (std::isfinite(v)) {
        // Dark blue (low) to yellow (high).
        const double s = flat ? 0.5 : (v - lo) / (hi - lo);
        const int r = static_cast<int>(20 + 235 * s);
        const int g = static_cast<int>(30 + 200 * s);
        const int b = static_cast<int>(140 - 110 * s);
        char buf[32];
        std::snprintf(buf, sizeof(buf), "rgb(%d,%d,%d)", r, g, b);
        fill = buf;
      }
      // Row index ia runs along offsets of axis_a (vertical, upward).
      const double x = margin + ib * cell;
      const double y = margin + (steps - 1 - ia) * cell;
      out << "<rect x=\"" << fmt2(x) << "\" y=\"" << fmt2(y) << "\" width=\""
          << fmt2(cell) << "\" height=\"" << fmt2(cell) << "\" fill=\"" << fill
          << "\"/>\n";
    }
  }

  out << "<text x=\"" << fmt2(margin + plot / 2) << "\" y=\""
      << fmt2(height - 18) << "\" text-anchor=\"middle\" font-size=\"14\">"
      << param_name(sweep.axis_b) << " offset [" << fmt2(sweep.offsets.front())
      << ", " << fmt2(sweep.offsets.back()) << "]</text>\n";
  out << "<text x=\"18\" y=\"" << fmt2(margin + plot / 2)
      << "\" text-anchor=\"middle\" font-size=\"14\" transform=\"rotate(-90 18 "
      << fmt2(margin + plot / 2) << ")\">" << param_name(sweep.axis_a)
      << " offset</text>\n";
  if (!flat) {
    out << "<text x=\"" << fmt2(margin) << "\" y=\"" << fmt2(margin - 12)
        << "\" font-size=\"12\">MI range [" << fmt(lo) << ", " << fmt(hi)
        << "] nats</text>\n";
  }
  out << "</svg>\n";
}

namespace {

// Residual of `p` against `gt` along one parameter axis.
double axis_residual(const ExtrinsicParams& p, const ExtrinsicParams& gt,
                     int axis) {
  return p.to_vector()(axis) - gt.to_vector()(axis);
}

}  // namespace

void write_bullseye_csv(const std::filesystem::path& path,
                        const std::vector<RunRecord>& records, int axis_a,
                        int axis_b) {
  auto out = open_out(path);
  out << "run_index,endpoint,residual_" << param_name(axis_a) << ",residual_"
      << param_name(axis_b) << ",hit\n";
  for (size_t i = 0; i < records.size(); ++i) {
    const RunRecord& rec = records[i];
    out << i << ",initial," << fmt(axis_residual(rec.initial, rec.ground_truth, axis_a))
        << "," << fmt(axis_residual(rec.initial, rec.ground_truth, axis_b))
        << "," << (rec.hit ? 1 : 0) << "\n";
    out << i << ",optimized,"
        << fmt(axis_residual(rec.optimized, rec.ground_truth, axis_a)) << ","
        << fmt(axis_residual(rec.optimized, rec.ground_truth, axis_b)) << ","
        << (rec.hit ? 1 : 0) << "\n";
  }
}

void write_bullseye_svg(const std::filesystem::path& path,
                        const std::vector<RunRecord>& records, int axis_a,
                        int axis_b) {
  const double size = 560.0;
  const double center = size / 2.0;
  const double plot_radius = center - 50.0;

  // Scale so every endpoint fits inside the outer ring.
  double max_r = 1e-9;
  for (const RunRecord& rec : records) {
    const double ia = axis_residual(rec.initial, rec.ground_truth, axis_a);
    const double ib = axis_residual(rec.initial, rec.ground_truth, axis_b);
    const double oa = axis_residual(rec.optimized, rec.ground_truth, axis_a);
    const double ob = axis_residual(rec.optimized, rec.ground_truth, axis_b);
    max_r = std::max({max_r, std::hypot(ia, ib), std::hypot(oa, ob)});
  }
  const double scale = plot_radius / max_r;

  auto x_of = [&](double v) { return center + v * scale; };
  auto y_of = [&](double v) { return center - v * scale; };

  auto out = open_out(path);
  out << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << fmt2(size)
      << "\" height=\"" << fmt2(size) << "\" viewBox=\"0 0 " << fmt2(size)
      << " " << fmt2(size) << "\">\n";
  out << "<rect x=\"0\" y=\"0\" width=\"" << fmt2(size) << "\" height=\""
      << fmt2(size) << "\" fill=\"white\"/>\n";

  // Reference rings at quarter fractions of the data radius, plus the
  // center mark for the ground truth.
  for (int k = 1; k <= 4; ++k) {
    const double rv = max_r * k / 4.0;
    out << "<circle cx=\"" << fmt2(center) << "\" cy=\"" << fmt2(center)
        << "\" r=\"" << fmt2(rv * scale)
        << "\" fill=\"none\" stroke=\"#cccccc\" stroke-width=\"1\"/>\n";
    out << "<text x=\"" << fmt2(center + rv * scale + 3) << "\" y=\""
        << fmt2(center - 3) << "\" font-size=\"10\" fill=\"#888888\">"
        << fmt2(rv) << "</text>\n";
  }
  // Axes drawn as paths so the only <line> elements are record segments.
  out << "<path d=\"M " << fmt2(center - plot_radius) << " " << fmt2(center)
      << " H " << fmt2(center + plot_radius) << " M " << fmt2(center) << " "
      << fmt2(center - plot_radius) << " V " << fmt2(center + plot_radius)
      << "\" stroke=\"#eeeeee\" stroke-width=\"1\" fill=\"none\"/>\n";
  out << "<circle cx=\"" << fmt2(center) << "\" cy=\"" << fmt2(center)
      << "\" r=\"3\" fill=\"black\"/>\n";

  for (const RunRecord& rec : records) {
    const double xi = x_of(axis_residual(rec.initial, rec.ground_truth, axis_a));
    const double yi = y_of(axis_residual(rec.initial, rec.ground_truth, axis_b));
    const double xo = x_of(axis_residual(rec.optimized, rec.ground_truth, axis_a));
    const double yo = y_of(axis_residual(rec.optimized, rec.ground_truth, axis_b));
    const char* color = rec.hit ? "#2a7fff" : "#d04040";
    out << "<line x1=\"" << fmt2(xi) << "\" y1=\"" << fmt2(yi) << "\" x2=\""
        << fmt2(xo) << "\" y2=\"" << fmt2(yo) << "\" stroke=\"" << color
        << "\" stroke-width=\"1\" stroke-opacity=\"0.6\"/>\n";
    const double m = 3.5;
    out << "<path d=\"M " << fmt2(xi - m) << " " << fmt2(yi - m) << " L "
        << fmt2(xi + m) << " " << fmt2(yi + m) << " M " << fmt2(xi - m) << " "
        << fmt2(yi + m) << " L " << fmt2(xi + m) << " " << fmt2(yi - m)
        << "\" stroke=\"" << color << "\" stroke-width=\"1.5\" fill=\"none\"/>\n";
    out << "<circle cx=\"" << fmt2(xo) << "\" cy=\"" << fmt2(yo)
        << "\" r=\"2.5\" fill=\"" << color << "\"/>\n";
  }

  out << "<text x=\"" << fmt2(size - 10) << "\" y=\"" << fmt2(center - 6)
      << "\" text-anchor=\"end\" font-size=\"12\">" << param_name(axis_a)
      << " residual</text>\n";
  out << "<text x=\"" << fmt2(center + 6) << "\" y=\"16\" font-size=\"12\">"
      << param_name(axis_b) << " residual</text>\n";
  out << "</svg>\n";
}

}  // namespace micalib::plots
