#pragma once

// Histograms of data distributions and aggregation of prediction errors into
// the benchmark's budget x horizon x method tables.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <map>
#include <set>
#include <span>
#include <string>
#include <tuple>
#include <utility>
#include <vector>

#include "bootbench/datagen.hpp"
#include "bootbench/envs.hpp"
#include "bootbench/errors.hpp"
#include "bootbench/text.hpp"

namespace bootbench {

struct Histogram {
  std::string dim_label;
  std::vector<double> bin_edges;   // n_bins + 1, ascending
  std::vector<long long> counts;   // n_bins
  long long overflow = 0;          // samples outside [low, high]

  long long total_in_range() const {
    long long t = 0;
    for (long long c : counts) t += c;
    return t;
  }
};

// Equal-width bins over [low, high]; the last bin includes its right edge.
// Out-of-range (or non-finite) samples land in the overflow tally.
inline Histogram histogram(std::span<const double> samples, int n_bins,
                           double low, double high,
                           const std::string& label = "") {
  if (n_bins < 1) throw ConfigError("histogram: n_bins must be >= 1");
  if (!(low < high)) throw ConfigError("histogram: need low < high");
  Histogram h;
  h.dim_label = label;
  h.bin_edges.resize(n_bins + 1);
  const double width = (high - low) / n_bins;
  for (int i = 0; i <= n_bins; ++i) h.bin_edges[i] = low + width * i;
  h.bin_edges.back() = high;
  h.counts.assign(n_bins, 0);
  for (double x : samples) {
    if (!(x >= low && x <= high)) {
      ++h.overflow;
      continue;
    }
    int bin = static_cast<int>((x - low) / width);
    if (bin >= n_bins) bin = n_bins - 1;  // x == high
    ++h.counts[bin];
  }
  return h;
}

// Share of actions with any coordinate within fraction * range of either box
// edge. Rows are action_dim wide.
inline double boundary_mass(const double* actions, std::size_t n_rows,
                            const EnvSpec& spec, double fraction) {
  if (!(fraction > 0.0 && fraction < 0.5))
    throw UsageError("boundary_mass: fraction must be in (0, 0.5)");
  if (n_rows == 0) return 0.0;
  const int dim = spec.action_dim;
  std::size_t hits = 0;
  for (std::size_t i = 0; i < n_rows; ++i) {
    const double* row = actions + i * dim;
    for (int d = 0; d < dim; ++d) {
      const double margin = fraction * (spec.action_high[d] - spec.action_low[d]);
      if (row[d] <= spec.action_low[d] + margin ||
          row[d] >= spec.action_high[d] - margin) {
        ++hits;
        break;
      }
    }
  }
  return static_cast<double>(hits) / static_cast<double>(n_rows);
}

inline double boundary_mass(const Dataset& dataset, const EnvSpec& spec,
                            double fraction) {
  return boundary_mass(dataset.actions.data(), dataset.size(), spec, fraction);
}

struct AggregateResult {
  double mean = 0.0;
  double stddev = 0.0;  // population convention across repetitions
};

// Per repetition, the mean over its trajectory errors; then mean and
// population std across repetitions.
inline AggregateResult aggregate(
    const std::vector<std::vector<double>>& per_repetition) {
  if (per_repetition.empty()) throw UsageError("aggregate: no repetitions");
  std::vector<double> rep_means;
  rep_means.reserve(per_repetition.size());
  for (const auto& rep : per_repetition) {
    if (rep.empty()) throw UsageError("aggregate: empty repetition");
    double sum = 0.0;
    for (double v : rep) sum += v;
    rep_means.push_back(sum / static_cast<double>(rep.size()));
  }
  AggregateResult out;
  for (double v : rep_means) out.mean += v;
  out.mean /= static_cast<double>(rep_means.size());
  double sq = 0.0;
  for (double v : rep_means) {
    const double c = v - out.mean;
    sq += c * c;
  }
  out.stddev = std::sqrt(sq / static_cast<double>(rep_means.size()));
  return out;
}

// One aggregated table cell.
struct MetricsRecord {
  std::string environment;
  Method method = Method::RandomPolicy;
  int budget = 0;
  int horizon = 0;
  double mean_error = 0.0;
  double std_error = 0.0;
  int n_repetitions = 0;
  long long divergence_count = 0;
};

struct RenderedTable {
  std::string text;
  std::string csv;
};

namespace detail {

inline std::string method_column_label(Method m) {
  switch (m) {
    case Method::RandomPolicy: return "Random policies";
    case Method::RandomActions: return "Random actions";
    case Method::Rarph: return "RARPH";
  }
  return "?";
}

inline int method_order(Method m) { return static_cast<int>(m); }

}  // namespace detail

// Renders records as the benchmark table: rows are budget x horizon, one
// column per method, cells "mean +/- std" to 3 decimals. The record set must
// cover the full budget x horizon x method grid.
inline RenderedTable render_table(const std::vector<MetricsRecord>& records) {
  if (records.empty()) throw ReportError("render_table: no records");

  std::set<std::string> envs;
  std::set<int> budgets, horizons;
  std::set<int> method_ids;
  for (const auto& r : records) {
    envs.insert(r.environment);
    budgets.insert(r.budget);
    horizons.insert(r.horizon);
    method_ids.insert(detail::method_order(r.method));
  }
  std::vector<Method> methods;
  for (int id : method_ids) methods.push_back(static_cast<Method>(id));

  std::map<std::tuple<std::string, int, int, int>, const MetricsRecord*> cells;
  for (const auto& r : records) {
    auto key = std::make_tuple(r.environment, r.budget, r.horizon,
                               detail::method_order(r.method));
    if (cells.count(key))
      throw ReportError("render_table: duplicate cell: env=" + r.environment +
                        " budget=" + std::to_string(r.budget) +
                        " horizon=" + std::to_string(r.horizon) +
                        " method=" + to_string(r.method));
    cells[key] = &r;
  }
  for (const auto& env : envs)
    for (int b : budgets)
      for (int h : horizons)
        for (Method m : methods)
          if (!cells.count(std::make_tuple(env, b, h, detail::method_order(m))))
            throw ReportError("render_table: missing cell: env=" + env +
                              " budget=" + std::to_string(b) +
                              " horizon=" + std::to_string(h) +
                              " method=" + to_string(m));

  std::string text, csv;
  csv = "env,budget,horizon,method,mean,std\n";
  for (const auto& env : envs) {
    text += "=== " + env + " ===\n";
    text += "Initialization episodes | Prediction horizon";
    for (Method m : methods) text += " | " + detail::method_column_label(m);
    text += "\n";
    for (int b : budgets) {
      for (int h : horizons) {
        char head[64];
        std::snprintf(head, sizeof(head), "%23d | %18d", b, h);
        text += head;
        for (Method m : methods) {
          const MetricsRecord& r =
              *cells[std::make_tuple(env, b, h, detail::method_order(m))];
          char cell[96];
          std::snprintf(cell, sizeof(cell), " | %.3f +- %.3f", r.mean_error,
                        r.std_error);
          text += cell;
          csv += env + "," + std::to_string(b) + "," + std::to_string(h) +
                 "," + to_string(m) + "," +
                 format_double(r.mean_error) + "," +
                 format_double(r.std_error) + "\n";
        }
        text += "\n";
      }
    }
    text += "\n";
  }
  return {text, csv};
}

// Plain-text SVG writer: one grouped-bar chart per dimension, one bar color
// per method. No plotting dependency.
inline std::string svg_histogram(
    const std::string& title,
    const std::vector<std::pair<std::string, Histogram>>& by_method) {
  if (by_method.empty()) throw UsageError("svg_histogram: nothing to draw");
  const int width = 900, height = 420;
  const int margin_left = 60, margin_bottom = 50, margin_top = 40,
            margin_right = 20;
  const double plot_w = width - margin_left - margin_right;
  const double plot_h = height - margin_top - margin_bottom;
  const std::size_t n_bins = by_method.front().second.counts.size();
  long long max_count = 1;
  for (const auto& [name, h] : by_method)
    for (long long c : h.counts) max_count = std::max(max_count, c);
  const char* colors[] = {"#4878d0", "#ee854a", "#6acc64", "#d65f5f"};

  std::string svg;
  char buf[512];
  std::snprintf(buf, sizeof(buf),
                "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"%d\" "
                "height=\"%d\" viewBox=\"0 0 %d %d\">\n",
                width, height, width, height);
  svg += buf;
  std::snprintf(buf, sizeof(buf),
                "<text x=\"%d\" y=\"24\" font-size=\"16\" "
                "font-family=\"sans-serif\">%s</text>\n",
                margin_left, title.c_str());
  svg += buf;
  // axes
  std::snprintf(buf, sizeof(buf),
                "<line x1=\"%d\" y1=\"%d\" x2=\"%d\" y2=\"%d\" "
                "stroke=\"black\"/>\n",
                margin_left, height - margin_bottom, width - margin_right,
                height - margin_bottom);
  svg += buf;
  std::snprintf(buf, sizeof(buf),
                "<line x1=\"%d\" y1=\"%d\" x2=\"%d\" y2=\"%d\" "
                "stroke=\"black\"/>\n",
                margin_left, margin_top, margin_left, height - margin_bottom);
  svg += buf;

  const double bin_w = plot_w / static_cast<double>(n_bins);
  const double bar_w = bin_w / static_cast<double>(by_method.size());
  for (std::size_t mi = 0; mi < by_method.size(); ++mi) {
    const Histogram& h = by_method[mi].second;
    for (std::size_t b = 0; b < n_bins; ++b) {
      if (h.counts[b] == 0) continue;
      const double bh =
          plot_h * static_cast<double>(h.counts[b]) / static_cast<double>(max_count);
      const double x = margin_left + bin_w * b + bar_w * mi;
      const double y = height - margin_bottom - bh;
      std::snprintf(buf, sizeof(buf),
                    "<rect x=\"%.2f\" y=\"%.2f\" width=\"%.2f\" "
                    "height=\"%.2f\" fill=\"%s\"/>\n",
                    x, y, bar_w, bh, colors[mi % 4]);
      svg += buf;
    }
    // legend
    std::snprintf(buf, sizeof(buf),
                  "<rect x=\"%d\" y=\"%d\" width=\"12\" height=\"12\" "
                  "fill=\"%s\"/><text x=\"%d\" y=\"%d\" font-size=\"12\" "
                  "font-family=\"sans-serif\">%s</text>\n",
                  width - 200, margin_top + static_cast<int>(mi) * 18,
                  colors[mi % 4], width - 182,
                  margin_top + static_cast<int>(mi) * 18 + 10,
                  by_method[mi].first.c_str());
    svg += buf;
  }
  // x-axis labels: low, mid, high
  const Histogram& h0 = by_method.front().second;
  const double lo = h0.bin_edges.front(), hi = h0.bin_edges.back();
  for (int i = 0; i <= 2; ++i) {
    const double frac = i / 2.0;
    std::snprintf(buf, sizeof(buf),
                  "<text x=\"%.1f\" y=\"%d\" font-size=\"12\" "
                  "font-family=\"sans-serif\" text-anchor=\"middle\">%.3g"
                  "</text>\n",
                  margin_left + plot_w * frac, height - margin_bottom + 18,
                  lo + (hi - lo) * frac);
    svg += buf;
  }
  std::snprintf(buf, sizeof(buf),
                "<text x=\"%d\" y=\"%d\" font-size=\"12\" "
                "font-family=\"sans-serif\">max count %lld</text>\n",
                margin_left + 4, margin_top - 6, max_count);
  svg += buf;
  svg += "</svg>\n";
  return svg;
}

}  // namespace bootbench
