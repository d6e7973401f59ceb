#pragma once

#include <fstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "ylab/experiments.hpp"
#include "ylab/serialize.hpp"
#include "ylab/signals.hpp"

namespace ylab {

// Every artifact JSON carries an "artifact" tag so downstream tools can
// dispatch without guessing.

inline Json forecast_report_to_json(const ForecastReport& r) {
  Json cells = Json::array();
  for (const ForecastCell& c : r.cells) {
    cells.push_back(Json{{"model", c.model},
                         {"horizon", c.horizon},
                         {"origins", c.origins},
                         {"norm_sq_errors", c.norm_sq_errors},
                         {"predictions_norm", c.predictions_norm},
                         {"actuals_norm", c.actuals_norm},
                         {"predictions_raw", c.predictions_raw},
                         {"actuals_raw", c.actuals_raw},
                         {"median_mse", c.median_mse},
                         {"mean_mse", c.mean_mse},
                         {"std_mse", c.std_mse},
                         {"note", c.note}});
  }
  return Json{{"artifact", "forecast_report"},
              {"n_rows", r.n_rows},
              {"split_index", r.split_index},
              {"window", r.window},
              {"retrain_every", r.retrain_every},
              {"cold_start", r.cold_start},
              {"epochs_initial", r.epochs_initial},
              {"epochs_update", r.epochs_update},
              {"seed", r.seed},
              {"horizons", r.horizons},
              {"model_names", r.model_names},
              {"config_hash", r.config_hash},
              {"cells", cells}};
}

inline ForecastReport forecast_report_from_json(const Json& j) {
  if (j.value("artifact", "") != "forecast_report") {
    throw std::runtime_error("forecast_report_from_json: wrong artifact tag");
  }
  ForecastReport r;
  r.n_rows = j.at("n_rows").get<std::size_t>();
  r.split_index = j.at("split_index").get<std::size_t>();
  r.window = j.at("window").get<std::size_t>();
  r.retrain_every = j.at("retrain_every").get<std::size_t>();
  r.cold_start = j.at("cold_start").get<bool>();
  r.epochs_initial = j.at("epochs_initial").get<std::size_t>();
  r.epochs_update = j.at("epochs_update").get<std::size_t>();
  r.seed = j.at("seed").get<std::uint64_t>();
  r.horizons = j.at("horizons").get<std::vector<std::size_t>>();
  r.model_names = j.at("model_names").get<std::vector<std::string>>();
  r.config_hash = j.at("config_hash").get<std::string>();
  for (const Json& cj : j.at("cells")) {
    ForecastCell c;
    c.model = cj.at("model").get<std::string>();
    c.horizon = cj.at("horizon").get<std::size_t>();
    c.origins = cj.at("origins").get<std::vector<std::size_t>>();
    c.norm_sq_errors = cj.at("norm_sq_errors").get<Vector>();
    c.predictions_norm = cj.at("predictions_norm").get<Vector>();
    c.actuals_norm = cj.at("actuals_norm").get<Vector>();
    c.predictions_raw = cj.at("predictions_raw").get<Vector>();
    c.actuals_raw = cj.at("actuals_raw").get<Vector>();
    c.median_mse = cj.at("median_mse").get<double>();
    c.mean_mse = cj.at("mean_mse").get<double>();
    c.std_mse = cj.at("std_mse").get<double>();
    c.note = cj.value("note", "");
    r.cells.push_back(std::move(c));
  }
  return r;
}

inline void save_forecast_csv(const std::string& path, const ForecastReport& r) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("save_forecast_csv: cannot open " + path);
  out.precision(17);
  out << "model,horizon,step,origin,norm_sq_error,prediction_norm,actual_norm,"
         "prediction_raw,actual_raw\n";
  for (const ForecastCell& c : r.cells) {
    for (std::size_t i = 0; i < c.origins.size(); ++i) {
      out << c.model << ',' << c.horizon << ',' << i << ',' << c.origins[i] << ','
          << c.norm_sq_errors[i] << ',' << c.predictions_norm[i] << ',' << c.actuals_norm[i]
          << ',' << c.predictions_raw[i] << ',' << c.actuals_raw[i] << '\n';
    }
  }
}

inline Json explanation_report_to_json(const ExplanationReport& r) {
  Json entries = Json::array();
  for (const ExplanationEntry& e : r.entries) {
    Json active = Json::array();
    for (const ActiveWeight& a : e.solution.active_set) {
      active.push_back(Json{{"column", a.column},
                            {"feature", a.feature},
                            {"lag", a.lag},
                            {"weight", a.weight}});
    }
    entries.push_back(Json{{"state", e.state},
                           {"unit", e.unit},
                           {"gamma", e.solution.gamma},
                           {"objective", e.solution.objective},
                           {"fit_mse", e.fit_mse},
                           {"active_set", active},
                           {"actual", e.actual},
                           {"fitted", e.fitted},
                           {"note", e.note}});
  }
  return Json{{"artifact", "explanation_report"},
              {"units", r.units},
              {"k", r.k},
              {"gamma", r.gamma},
              {"entries", entries},
              {"hidden_features", r.hidden_features},
              {"cell_features", r.cell_features},
              {"hidden_cell_common", r.hidden_cell_common},
              {"hidden_pairwise", r.hidden_counts.pairwise},
              {"hidden_all_units", r.hidden_counts.all_units},
              {"cell_pairwise", r.cell_counts.pairwise},
              {"cell_all_units", r.cell_counts.all_units},
              {"any_active", r.any_active},
              {"dropped_columns", r.dropped_columns},
              {"note", r.note},
              {"config_hash", r.config_hash}};
}

inline ExplanationReport explanation_report_from_json(const Json& j) {
  if (j.value("artifact", "") != "explanation_report") {
    throw std::runtime_error("explanation_report_from_json: wrong artifact tag");
  }
  ExplanationReport r;
  r.units = j.at("units").get<std::size_t>();
  r.k = j.at("k").get<std::size_t>();
  r.gamma = j.at("gamma").get<double>();
  for (const Json& ej : j.at("entries")) {
    ExplanationEntry e;
    e.state = ej.at("state").get<std::string>();
    e.unit = ej.at("unit").get<std::size_t>();
    e.solution.gamma = ej.at("gamma").get<double>();
    e.solution.objective = ej.at("objective").get<double>();
    for (const Json& aj : ej.at("active_set")) {
      ActiveWeight a;
      a.column = aj.at("column").get<std::string>();
      a.feature = aj.at("feature").get<std::string>();
      a.lag = aj.at("lag").get<std::size_t>();
      a.weight = aj.at("weight").get<double>();
      e.solution.active_set.push_back(std::move(a));
    }
    e.fit_mse = ej.at("fit_mse").get<double>();
    e.actual = ej.at("actual").get<Vector>();
    e.fitted = ej.at("fitted").get<Vector>();
    e.note = ej.value("note", "");
    r.entries.push_back(std::move(e));
  }
  r.hidden_features = j.at("hidden_features").get<std::vector<std::vector<std::string>>>();
  r.cell_features = j.at("cell_features").get<std::vector<std::vector<std::string>>>();
  r.hidden_cell_common = j.at("hidden_cell_common").get<std::vector<std::size_t>>();
  r.hidden_counts.pairwise =
      j.at("hidden_pairwise").get<std::vector<std::vector<std::size_t>>>();
  r.hidden_counts.all_units = j.at("hidden_all_units").get<std::size_t>();
  r.cell_counts.pairwise = j.at("cell_pairwise").get<std::vector<std::vector<std::size_t>>>();
  r.cell_counts.all_units = j.at("cell_all_units").get<std::size_t>();
  r.any_active = j.at("any_active").get<bool>();
  r.dropped_columns = j.at("dropped_columns").get<std::vector<std::string>>();
  r.note = j.value("note", "");
  r.config_hash = j.value("config_hash", "");
  return r;
}

inline void save_explanation_csv(const std::string& path, const ExplanationReport& r) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("save_explanation_csv: cannot open " + path);
  out.precision(17);
  out << "state,unit,feature,lag,weight\n";
  for (const ExplanationEntry& e : r.entries) {
    for (const ActiveWeight& a : e.solution.active_set) {
      out << e.state << ',' << e.unit << ',' << a.feature << ',' << a.lag << ',' << a.weight
          << '\n';
    }
  }
}

inline Json significance_report_to_json(const SignificanceReport& r) {
  return Json{{"artifact", "significance_report"},
              {"real_mse", r.real_mse},
              {"random_mses", r.random_mses},
              {"percentile", r.percentile},
              {"n_runs", r.n_runs},
              {"seed", r.seed},
              {"gamma", r.gamma},
              {"k", r.k},
              {"config_hash", r.config_hash}};
}

inline SignificanceReport significance_report_from_json(const Json& j) {
  if (j.value("artifact", "") != "significance_report") {
    throw std::runtime_error("significance_report_from_json: wrong artifact tag");
  }
  SignificanceReport r;
  r.real_mse = j.at("real_mse").get<double>();
  r.random_mses = j.at("random_mses").get<Vector>();
  r.percentile = j.at("percentile").get<double>();
  r.n_runs = j.at("n_runs").get<std::size_t>();
  r.seed = j.at("seed").get<std::uint64_t>();
  r.gamma = j.at("gamma").get<double>();
  r.k = j.at("k").get<std::size_t>();
  r.config_hash = j.value("config_hash", "");
  return r;
}

inline void save_significance_csv(const std::string& path, const SignificanceReport& r) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("save_significance_csv: cannot open " + path);
  out.precision(17);
  out << "run,mse\n";
  for (std::size_t i = 0; i < r.random_mses.size(); ++i) {
    out << i << ',' << r.random_mses[i] << '\n';
  }
}

// Trace JSON keeps an optional copy of the target series so overlay plots can
// show signals against the quantity being forecast.
inline Json trace_to_json(const SignalTrace& trace, const Vector& target = {},
                          const std::string& target_name = "") {
  Json locations;
  for (const std::string& loc : signal_location_names()) {
    const Matrix& m = signal_by_name(trace, loc);
    Json units = Json::array();
    for (std::size_t u = 0; u < trace.units(); ++u) {
      Vector series(trace.steps());
      for (std::size_t t = 0; t < trace.steps(); ++t) series[t] = m(t, u);
      units.push_back(series);
    }
    locations[loc] = units;
  }
  Json j{{"artifact", "signal_trace"},
         {"timestamps", trace.timestamps},
         {"anchors", trace.anchors},
         {"units", trace.units()},
         {"locations", locations}};
  if (!target.empty()) {
    if (target.size() != trace.steps()) {
      throw std::invalid_argument("trace_to_json: target length must match trace steps");
    }
    j["target"] = target;
    j["target_name"] = target_name;
  }
  return j;
}

inline SignalTrace trace_from_json(const Json& j) {
  if (j.value("artifact", "") != "signal_trace") {
    throw std::runtime_error("trace_from_json: wrong artifact tag");
  }
  SignalTrace trace;
  trace.timestamps = j.at("timestamps").get<std::vector<std::string>>();
  trace.anchors = j.at("anchors").get<std::vector<std::size_t>>();
  const std::size_t units = j.at("units").get<std::size_t>();
  const std::size_t steps = trace.anchors.size();
  const Json& locations = j.at("locations");
  auto load = [&](const std::string& name, Matrix& m) {
    m = Matrix(steps, units);
    const Json& arr = locations.at(name);
    for (std::size_t u = 0; u < units; ++u) {
      const Vector series = arr.at(u).get<Vector>();
      for (std::size_t t = 0; t < steps; ++t) m(t, u) = series[t];
    }
  };
  load("forget", trace.forget);
  load("input_times_node", trace.input_times_node);
  load("output_gate", trace.output_gate);
  load("cell_state", trace.cell_state);
  load("hidden_state", trace.hidden_state);
  return trace;
}

}  // namespace ylab
