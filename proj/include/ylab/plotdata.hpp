#pragma once

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>
#include <vector>

#include "ylab/report_io.hpp"

namespace ylab {

inline const std::vector<std::string>& plot_kinds() {
  static const std::vector<std::string> kinds = {"boxplot", "overlay", "weights", "histogram"};
  return kinds;
}

namespace detail {

inline double quantile(Vector sorted, double q) {
  if (sorted.empty()) throw std::invalid_argument("quantile: empty input");
  const double pos = q * static_cast<double>(sorted.size() - 1);
  const std::size_t lo = static_cast<std::size_t>(std::floor(pos));
  const std::size_t hi = static_cast<std::size_t>(std::ceil(pos));
  const double frac = pos - static_cast<double>(lo);
  return sorted[lo] * (1.0 - frac) + sorted[hi] * frac;
}

inline Json boxplot_data(const ForecastReport& r) {
  Json per_step = Json::array();
  Json per_run = Json::array();
  for (const ForecastCell& c : r.cells) {
    Vector sorted = c.norm_sq_errors;
    std::sort(sorted.begin(), sorted.end());
    per_step.push_back(Json{{"model", c.model},
                            {"horizon", c.horizon},
                            {"min", sorted.front()},
                            {"q1", quantile(sorted, 0.25)},
                            {"median", quantile(sorted, 0.5)},
                            {"q3", quantile(sorted, 0.75)},
                            {"max", sorted.back()},
                            {"mean", c.mean_mse}});
    per_run.push_back(Json{{"model", c.model},
                           {"horizon", c.horizon},
                           {"median_mse", c.median_mse},
                           {"seed", r.seed}});
  }
  return Json{{"plot", "boxplot"},
              {"x_label", "model"},
              {"y_label", "normalized squared error"},
              {"aggregations",
               Json{{"per_step",
                     Json{{"population", "squared errors over test steps within one run"},
                          {"boxes", per_step}}},
                    {"per_run",
                     Json{{"population",
                           "one point per seeded run; concatenate several reports to build a "
                           "distribution over seeds"},
                          {"points", per_run}}}}}};
}

inline Json overlay_data(const Json& trace_json) {
  const SignalTrace trace = trace_from_json(trace_json);
  Json series = Json::array();
  for (const std::string& loc : signal_location_names()) {
    const Matrix& m = signal_by_name(trace, loc);
    for (std::size_t u = 0; u < trace.units(); ++u) {
      Vector values(trace.steps());
      for (std::size_t t = 0; t < trace.steps(); ++t) values[t] = m(t, u);
      series.push_back(Json{{"location", loc}, {"unit", u}, {"values", values}});
    }
  }
  Json j{{"plot", "overlay"},
         {"x_label", "time"},
         {"y_label", "signal value"},
         {"timestamps", trace.timestamps},
         {"series", series}};
  if (trace_json.contains("target")) {
    j["target"] = trace_json.at("target");
    j["target_name"] = trace_json.value("target_name", "target");
  }
  return j;
}

inline Json weights_data(const ExplanationReport& r) {
  Json panels = Json::array();
  for (const ExplanationEntry& e : r.entries) {
    std::vector<ActiveWeight> sorted = e.solution.active_set;
    std::sort(sorted.begin(), sorted.end(), [](const ActiveWeight& a, const ActiveWeight& b) {
      return std::abs(a.weight) > std::abs(b.weight);
    });
    Json bars = Json::array();
    for (const ActiveWeight& a : sorted) {
      bars.push_back(Json{{"label", a.column}, {"weight", a.weight}});
    }
    panels.push_back(Json{{"state", e.state}, {"unit", e.unit}, {"bars", bars}});
  }
  return Json{{"plot", "weights"},
              {"x_label", "feature@lag"},
              {"y_label", "lasso weight"},
              {"gamma", r.gamma},
              {"panels", panels}};
}

inline Json histogram_data(const SignificanceReport& r, std::size_t bins = 20) {
  Vector sorted = r.random_mses;
  std::sort(sorted.begin(), sorted.end());
  const double lo = std::min(sorted.front(), r.real_mse);
  const double hi = std::max(sorted.back(), r.real_mse);
  const double width = (hi - lo) == 0.0 ? 1.0 : (hi - lo) / static_cast<double>(bins);
  std::vector<std::size_t> counts(bins, 0);
  for (const double v : r.random_mses) {
    std::size_t b = static_cast<std::size_t>((v - lo) / width);
    if (b >= bins) b = bins - 1;
    counts[b] += 1;
  }
  Vector edges(bins + 1);
  for (std::size_t i = 0; i <= bins; ++i) edges[i] = lo + width * static_cast<double>(i);
  return Json{{"plot", "histogram"},
              {"x_label", "explanation mse"},
              {"y_label", "count"},
              {"edges", edges},
              {"counts", counts},
              {"real_mse", r.real_mse},
              {"percentile", r.percentile}};
}

}  // namespace detail

// Turns a report/trace artifact into render-ready series. The artifact tag
// must match the requested kind.
inline Json make_plot_data(const Json& artifact, const std::string& kind) {
  auto supported = [&]() {
    std::string all;
    for (const std::string& k : plot_kinds()) {
      if (!all.empty()) all += ", ";
      all += k;
    }
    return all;
  };
  const std::string tag = artifact.value("artifact", "");
  if (kind == "boxplot") {
    if (tag != "forecast_report") {
      throw std::invalid_argument("make_plot_data: boxplot needs a forecast_report, got '" +
                                  tag + "'");
    }
    return detail::boxplot_data(forecast_report_from_json(artifact));
  }
  if (kind == "overlay") {
    if (tag != "signal_trace") {
      throw std::invalid_argument("make_plot_data: overlay needs a signal_trace, got '" + tag +
                                  "'");
    }
    return detail::overlay_data(artifact);
  }
  if (kind == "weights") {
    if (tag != "explanation_report") {
      throw std::invalid_argument("make_plot_data: weights needs an explanation_report, got '" +
                                  tag + "'");
    }
    return detail::weights_data(explanation_report_from_json(artifact));
  }
  if (kind == "histogram") {
    if (tag != "significance_report") {
      throw std::invalid_argument("make_plot_data: histogram needs a significance_report, got '" +
                                  tag + "'");
    }
    return detail::histogram_data(significance_report_from_json(artifact));
  }
  throw std::invalid_argument("make_plot_data: unknown kind '" + kind + "'; supported kinds: " +
                              supported());
}

}  // namespace ylab
