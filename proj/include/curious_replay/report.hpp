#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "curious_replay/errors.hpp"
#include "curious_replay/harness.hpp"
#include "curious_replay/metrics.hpp"
#include "curious_replay/stats.hpp"
#include "curious_replay/textio.hpp"

namespace cr {

namespace detail {

struct Series {
  std::string label;
  std::vector<double> x;
  std::vector<double> y;
};

inline const char* series_color(std::size_t i) {
  static const char* palette[] = {"#1f6feb", "#d1242f", "#1a7f37", "#9a6700",
                                  "#8250df", "#bf3989", "#57606a"};
  return palette[i % (sizeof palette / sizeof palette[0])];
}

/// Minimal line plot. Fixed 720x420 canvas with margins, linear axes, five
/// ticks per axis, and a legend keyed by series label.
inline std::string render_svg_plot(const std::string& title, const std::string& x_label,
                                   const std::string& y_label, const std::vector<Series>& series) {
  constexpr double width = 720, height = 420;
  constexpr double left = 70, right = 20, top = 40, bottom = 50;
  double xmin = 0, xmax = 1, ymin = 0, ymax = 1;
  bool any = false;
  for (const auto& s : series) {
    for (std::size_t i = 0; i < s.x.size(); ++i) {
      if (!std::isfinite(s.x[i]) || !std::isfinite(s.y[i])) continue;
      if (!any) {
        xmin = xmax = s.x[i];
        ymin = ymax = s.y[i];
        any = true;
      } else {
        xmin = std::min(xmin, s.x[i]);
        xmax = std::max(xmax, s.x[i]);
        ymin = std::min(ymin, s.y[i]);
        ymax = std::max(ymax, s.y[i]);
      }
    }
  }
  if (xmax == xmin) xmax = xmin + 1;
  if (ymax == ymin) ymax = ymin + 1;
  const auto sx = [&](double x) {
    return left + (x - xmin) / (xmax - xmin) * (width - left - right);
  };
  const auto sy = [&](double y) {
    return height - bottom - (y - ymin) / (ymax - ymin) * (height - top - bottom);
  };
  const auto tick_text = [](double v) {
    std::ostringstream o;
    o.precision(4);
    o << v;
    return o.str();
  };

  std::ostringstream out;
  out << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << width << "\" height=\"" << height
      << "\" viewBox=\"0 0 " << width << " " << height << "\">\n";
  out << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  out << "<text x=\"" << width / 2 << "\" y=\"20\" text-anchor=\"middle\" font-size=\"15\">"
      << title << "</text>\n";
  out << "<rect x=\"" << left << "\" y=\"" << top << "\" width=\"" << width - left - right
      << "\" height=\"" << height - top - bottom << "\" fill=\"none\" stroke=\"#444\"/>\n";
  for (int i = 0; i <= 4; ++i) {
    const double fx = xmin + (xmax - xmin) * i / 4.0;
    const double fy = ymin + (ymax - ymin) * i / 4.0;
    out << "<text x=\"" << sx(fx) << "\" y=\"" << height - bottom + 18
        << "\" text-anchor=\"middle\" font-size=\"11\">" << tick_text(fx) << "</text>\n";
    out << "<text x=\"" << left - 6 << "\" y=\"" << sy(fy) + 4
        << "\" text-anchor=\"end\" font-size=\"11\">" << tick_text(fy) << "</text>\n";
    out << "<line x1=\"" << left << "\" y1=\"" << sy(fy) << "\" x2=\"" << width - right
        << "\" y2=\"" << sy(fy) << "\" stroke=\"#ddd\" stroke-width=\"0.5\"/>\n";
  }
  out << "<text x=\"" << width / 2 << "\" y=\"" << height - 12
      << "\" text-anchor=\"middle\" font-size=\"12\">" << x_label << "</text>\n";
  out << "<text x=\"16\" y=\"" << height / 2
      << "\" text-anchor=\"middle\" font-size=\"12\" transform=\"rotate(-90 16 " << height / 2
      << ")\">" << y_label << "</text>\n";

  std::map<std::string, std::size_t> color_of;
  for (const auto& s : series)
    if (!color_of.count(s.label)) color_of.emplace(s.label, color_of.size());
  for (const auto& s : series) {
    out << "<polyline fill=\"none\" stroke=\"" << series_color(color_of[s.label])
        << "\" stroke-width=\"1.2\" points=\"";
    for (std::size_t i = 0; i < s.x.size(); ++i) {
      if (!std::isfinite(s.x[i]) || !std::isfinite(s.y[i])) continue;
      out << sx(s.x[i]) << "," << sy(s.y[i]) << " ";
    }
    out << "\"/>\n";
  }
  double ly = top + 14;
  for (const auto& [label, idx] : color_of) {
    out << "<line x1=\"" << left + 8 << "\" y1=\"" << ly - 4 << "\" x2=\"" << left + 28
        << "\" y2=\"" << ly - 4 << "\" stroke=\"" << series_color(idx)
        << "\" stroke-width=\"2\"/>\n";
    out << "<text x=\"" << left + 34 << "\" y=\"" << ly << "\" font-size=\"11\">" << label
        << "</text>\n";
    ly += 16;
  }
  out << "</svg>\n";
  return out.str();
}

struct LoadedRun {
  std::string label;
  RunMetrics metrics;
};

/// Finds every metrics.txt under root. The run label is the directory level
/// under root (the strategy directory written by compare), or the strategy
/// from the header for loose files.
inline std::vector<LoadedRun> load_runs(const std::string& root) {
  namespace fs = std::filesystem;
  std::vector<LoadedRun> runs;
  if (!fs::exists(root)) throw IoError("report: runs directory '" + root + "' does not exist");
  std::vector<fs::path> files;
  for (const auto& entry : fs::recursive_directory_iterator(root))
    if (entry.is_regular_file() && entry.path().filename() == "metrics.txt")
      files.push_back(entry.path());
  std::sort(files.begin(), files.end());
  for (const auto& path : files) {
    LoadedRun run;
    run.metrics = load_metrics_file(path.string());
    const fs::path rel = fs::relative(path, root);
    run.label = rel.begin() != rel.end() && std::distance(rel.begin(), rel.end()) > 2
                    ? rel.begin()->string()
                    : run.metrics.header.strategy;
    runs.push_back(std::move(run));
  }
  if (runs.empty()) throw IoError("report: no metrics.txt found under '" + root + "'");
  return runs;
}

}  // namespace detail

/// Builds a human-readable summary of a directory of runs: a text table of
/// per-label medians, cumulative-interaction curves, and post-change
/// held-out loss curves.
inline void write_report(const std::string& runs_dir, const std::string& out_dir,
                         const std::string& metric = "interaction:5") {
  namespace fs = std::filesystem;
  const auto runs = detail::load_runs(runs_dir);
  std::error_code ec;
  fs::create_directories(out_dir, ec);
  if (ec) throw IoError("report: cannot create '" + out_dir + "': " + ec.message());

  std::map<std::string, std::vector<std::optional<double>>> by_label;
  for (const auto& r : runs) by_label[r.label].push_back(extract_metric(r.metrics, metric));

  std::ostringstream table;
  table << "runs: " << runs.size() << "  metric: " << metric << "\n\n";
  table << "label                            n  censored  median\n";
  for (const auto& [label, values] : by_label) {
    std::size_t censored = 0;
    for (const auto& v : values)
      if (!v) ++censored;
    const Quartiles q = quartiles(detail::censored_as_inf(values));
    table << label << std::string(label.size() < 32 ? 32 - label.size() : 1, ' ') << values.size()
          << "  " << censored << "  "
          << (std::isfinite(q.median) ? format_double(q.median) : std::string("censored")) << "\n";
  }
  write_text_file(out_dir + "/tables.txt", table.str());

  std::vector<detail::Series> interaction_series;
  std::vector<detail::Series> holdout_series;
  for (const auto& r : runs) {
    detail::Series s;
    s.label = r.label;
    s.x.push_back(0);
    s.y.push_back(0);
    for (std::size_t i = 0; i < r.metrics.interaction_steps.size(); ++i) {
      s.x.push_back(static_cast<double>(r.metrics.interaction_steps[i]));
      s.y.push_back(static_cast<double>(i + 1));
    }
    interaction_series.push_back(std::move(s));

    detail::Series h;
    h.label = r.label;
    const std::size_t probe_phase = r.metrics.header.phase_count > 1 ? 1 : 0;
    for (const auto& rec : r.metrics.intervals) {
      if (probe_phase < rec.holdout_loss.size()) {
        h.x.push_back(static_cast<double>(rec.step));
        h.y.push_back(rec.holdout_loss[probe_phase]);
      }
    }
    holdout_series.push_back(std::move(h));
  }
  write_text_file(out_dir + "/interactions.svg",
                  detail::render_svg_plot("cumulative object interactions", "environment step",
                                          "interactions", interaction_series));
  write_text_file(out_dir + "/holdout.svg",
                  detail::render_svg_plot("post-change held-out loss", "environment step",
                                          "held-out loss", holdout_series));
}

}  // namespace cr
