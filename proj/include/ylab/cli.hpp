#pragma once

#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <string>
#include <vector>

#include "ylab/config.hpp"
#include "ylab/experiments.hpp"
#include "ylab/gradcheck.hpp"
#include "ylab/plotdata.hpp"
#include "ylab/report_io.hpp"
#include "ylab/serialize.hpp"
#include "ylab/synth.hpp"

namespace ylab {

namespace fs = std::filesystem;

// Relative output directories resolve under $YLAB_OUTPUT_ROOT when it is set.
inline fs::path resolve_output_dir(const std::string& configured) {
  fs::path p = configured;
  const char* root = std::getenv("YLAB_OUTPUT_ROOT");
  if (root != nullptr && *root != '\0' && p.is_relative()) {
    p = fs::path(root) / p;
  }
  fs::create_directories(p);
  return p;
}

inline TimeSeriesTable load_or_synthesize(const ExperimentConfig& cfg) {
  if (!cfg.csv_path.empty()) {
    TimeSeriesTable t = load_csv(cfg.csv_path);
    if (!cfg.target.empty()) {
      t.col_index(cfg.target);  // throws with the column name if absent
      t.target_name = cfg.target;
    }
    return t;
  }
  Rng rng(cfg.synth.seed);
  return synth_generate(cfg.synth, rng);
}

namespace detail {

inline TimeSeriesTable exogenous_columns(const TimeSeriesTable& table) {
  std::vector<std::string> names;
  for (const std::string& name : table.column_names) {
    if (name != table.target_name) names.push_back(name);
  }
  if (names.empty()) {
    throw std::invalid_argument("study needs exogenous columns besides the target '" +
                                table.target_name + "'");
  }
  return select_columns(table, names);
}

inline Vector target_at_anchors(const TimeSeriesTable& table, const SignalTrace& trace) {
  const Vector& target = table.target();
  Vector out(trace.steps());
  for (std::size_t i = 0; i < trace.steps(); ++i) out[i] = target[trace.anchors[i]];
  return out;
}

inline Json activity_to_json(const UnitActivitySummary& summary) {
  Json per_unit = Json::array();
  for (std::size_t u = 0; u < summary.inactive_spans.size(); ++u) {
    Json spans = Json::array();
    for (const Span& s : summary.inactive_spans[u]) {
      spans.push_back(Json{{"begin", s.begin}, {"end", s.end}});
    }
    Vector mean_abs(summary.mean_abs.rows()), variance(summary.variance.rows());
    for (std::size_t i = 0; i < summary.mean_abs.rows(); ++i) {
      mean_abs[i] = summary.mean_abs(i, u);
      variance[i] = summary.variance(i, u);
    }
    per_unit.push_back(Json{{"unit", u},
                            {"inactive_spans", spans},
                            {"rolling_mean_abs", mean_abs},
                            {"rolling_variance", variance}});
  }
  return Json{{"artifact", "activity_summary"},
              {"window", summary.window},
              {"eps_weight", summary.eps_weight},
              {"eps_var", summary.eps_var},
              {"units", per_unit}};
}

inline void run_forecast(const ExperimentConfig& cfg, const TimeSeriesTable& table,
                         const fs::path& out) {
  std::vector<ModelSpec> roster;
  for (const std::string& name : cfg.roster) {
    roster.push_back(model_spec_from_name(name, cfg.lstm_units, cfg.mlp_hidden));
  }
  ForecastReport report = walk_forward(roster, table, cfg.horizons, cfg.wf);
  report.config_hash = cfg.config_hash;
  save_json((out / "forecast_report.json").string(), forecast_report_to_json(report));
  save_forecast_csv((out / "forecast_report.csv").string(), report);
  save_json((out / "plot_boxplot.json").string(),
            make_plot_data(forecast_report_to_json(report), "boxplot"));

  bool has_baseline = false;
  for (const std::string& name : cfg.roster) has_baseline |= (name == "Persistence");
  if (has_baseline) {
    std::ofstream cmp((out / "relative_mse.csv").string());
    cmp << "model,horizon,median_ratio,std_ratio\n";
    for (const RelativeMseRow& row : compare_models(report, "Persistence")) {
      cmp << row.model << ',' << row.horizon << ',' << row.median_ratio << ','
          << row.std_ratio << '\n';
    }
  }
}

inline void run_signals(const ExperimentConfig& cfg, const TimeSeriesTable& table,
                        const fs::path& out) {
  const TrainedSignalModel model = train_signal_model(table, cfg.signal_model);
  SignalTrace trace;
  if (cfg.trace_mode == "stitched") {
    StitchedTraceConfig sc;
    sc.model = cfg.signal_model;
    sc.window = cfg.stitch_window;
    sc.epochs_update = cfg.stitch_epochs_update;
    sc.retrain_every = cfg.stitch_retrain_every;
    trace = stitched_trace(table, sc);
  } else {
    trace = extract_trace(model.params, model.normalized_inputs, cfg.signal_model.seq_in,
                          cfg.carry);
  }

  Json trace_json = trace_to_json(trace, target_at_anchors(table, trace), table.target_name);
  trace_json["trace_mode"] = cfg.trace_mode;
  trace_json["state_carry"] =
      cfg.carry == StateCarry::kZeroPerSequence ? "zero" : "continuous";
  trace_json["config_hash"] = cfg.config_hash;
  save_json((out / "trace.json").string(), trace_json);
  save_trace_csv((out / "trace.csv").string(), trace);
  save_json((out / "plot_overlay.json").string(), make_plot_data(trace_json, "overlay"));
  save_json((out / "model.json").string(), lstm_to_json(model.params));
  save_loss_curve((out / "loss_curve.csv").string(), model.loss_curve);

  if (trace.steps() >= cfg.activity_window) {
    const UnitActivitySummary summary =
        summarize_activity(trace, cfg.activity_window, cfg.eps_weight, cfg.eps_var);
    save_json((out / "activity.json").string(), activity_to_json(summary));
  }
}

inline void run_laglasso(const ExperimentConfig& cfg, const TimeSeriesTable& table,
                         const fs::path& out) {
  const TrainedSignalModel model = train_signal_model(table, cfg.signal_model);
  const TimeSeriesTable exogenous = exogenous_columns(table);
  ExplanationReport report =
      lstm_laglasso(model.params, model.normalized_inputs, exogenous, cfg.signal_model.seq_in,
                    cfg.k, cfg.gamma, cfg.carry);
  report.config_hash = cfg.config_hash;
  save_json((out / "explanation_report.json").string(), explanation_report_to_json(report));
  save_explanation_csv((out / "explanation_report.csv").string(), report);
  save_json((out / "plot_weights.json").string(),
            make_plot_data(explanation_report_to_json(report), "weights"));
  save_json((out / "model.json").string(), lstm_to_json(model.params));

  // regularization paths so the gamma choice can be inspected per signal
  const AlignedSignals aligned = align_signals(model.params, model.normalized_inputs, exogenous,
                                               cfg.signal_model.seq_in, cfg.k, cfg.carry);
  std::ofstream path_csv((out / "lasso_path.csv").string());
  path_csv << "state,unit,gamma,n_active,objective,mse\n";
  auto emit = [&](const std::string& state, std::size_t unit, const Matrix& signals) {
    Vector s(signals.rows());
    for (std::size_t r = 0; r < s.size(); ++r) s[r] = signals(r, unit);
    double m = 0.0;
    for (const double v : s) m += v;
    m /= static_cast<double>(s.size());
    double var = 0.0;
    for (const double v : s) var += (v - m) * (v - m);
    const double sd = std::sqrt(var / static_cast<double>(s.size()));
    if (sd == 0.0) return;
    for (double& v : s) v = (v - m) / sd;
    const StandardizedDesign sd_design = standardize(aligned.design, s);
    const double g_max = gamma_max(sd_design.X, sd_design.s);
    if (g_max <= 0.0) return;
    const LassoPath path = lasso_path(sd_design.X, sd_design.s,
                                      default_gamma_grid(g_max, cfg.grid_points, cfg.grid_floor),
                                      sd_design.column_names);
    for (std::size_t i = 0; i < path.gammas.size(); ++i) {
      path_csv << state << ',' << unit << ',' << path.gammas[i] << ',' << path.n_active[i]
               << ',' << path.objectives[i] << ',' << path.fit_mse[i] << '\n';
    }
  };
  for (std::size_t u = 0; u < model.params.units; ++u) emit("hidden", u, aligned.hidden);
  for (std::size_t u = 0; u < model.params.units; ++u) emit("cell", u, aligned.cell);
}

inline void run_significance(const ExperimentConfig& cfg, const TimeSeriesTable& table,
                             const fs::path& out) {
  const TrainedSignalModel model = train_signal_model(table, cfg.signal_model);
  const TimeSeriesTable exogenous = exogenous_columns(table);
  Rng rng(cfg.seed ^ fnv1a64("significance"));
  SignificanceReport report =
      significance_test(model.params, model.normalized_inputs, exogenous,
                        cfg.signal_model.seq_in, cfg.k, cfg.gamma, cfg.n_runs, rng, cfg.carry);
  report.config_hash = cfg.config_hash;
  save_json((out / "significance_report.json").string(), significance_report_to_json(report));
  save_significance_csv((out / "significance_report.csv").string(), report);
  save_json((out / "plot_histogram.json").string(),
            make_plot_data(significance_report_to_json(report), "histogram"));
  save_json((out / "model.json").string(), lstm_to_json(model.params));
}

}  // namespace detail

// run <config>: execute the configured study, artifacts under its output dir.
inline int cmd_run(const std::string& config_path) {
  const ExperimentConfig cfg = ExperimentConfig::load(config_path);
  const TimeSeriesTable table = load_or_synthesize(cfg);
  const fs::path out = resolve_output_dir(cfg.output_dir);
  if (cfg.csv_path.empty()) {
    save_csv(table, (out / "input_data.csv").string());
  }
  if (cfg.study == "forecast") {
    detail::run_forecast(cfg, table, out);
  } else if (cfg.study == "signals") {
    detail::run_signals(cfg, table, out);
  } else if (cfg.study == "laglasso") {
    detail::run_laglasso(cfg, table, out);
  } else {
    detail::run_significance(cfg, table, out);
  }
  std::cout << "wrote artifacts to " << out.string() << "\n";
  return 0;
}

// plot <artifact> --kind <k> [--out <path>]
inline int cmd_plot(const std::string& artifact_path, const std::string& kind,
                    std::string out_path) {
  const Json artifact = load_json(artifact_path);
  const Json plot = make_plot_data(artifact, kind);
  if (out_path.empty()) {
    fs::path p(artifact_path);
    out_path = (p.parent_path() / (p.stem().string() + "_" + kind + ".json")).string();
  }
  save_json(out_path, plot);
  std::cout << "wrote " << out_path << "\n";
  return 0;
}

// synth <config>: generate the configured synthetic dataset only.
inline int cmd_synth(const std::string& config_path) {
  const ExperimentConfig cfg = ExperimentConfig::load(config_path);
  Rng rng(cfg.synth.seed);
  const TimeSeriesTable table = synth_generate(cfg.synth, rng);
  const fs::path out = resolve_output_dir(cfg.output_dir);
  const fs::path file = out / "synthetic.csv";
  save_csv(table, file.string());
  std::cout << "wrote " << file.string() << " (" << table.n_rows() << " rows, "
            << table.n_cols() << " columns)\n";
  return 0;
}

// check: fast invariant self-tests, one line each.
inline int cmd_check() {
  int failures = 0;
  auto report = [&](const std::string& name, bool ok, const std::string& why = "") {
    std::cout << (ok ? "[PASS] " : "[FAIL] ") << name;
    if (!ok && !why.empty()) std::cout << ": " << why;
    std::cout << "\n";
    if (!ok) ++failures;
  };

  try {
    Rng rng(99);
    const LstmParameters p = init_params(3, 2, rng);
    LstmState st = LstmState::zeros(3);
    bool ranges = true, consistent = true;
    for (int t = 0; t < 200; ++t) {
      const Vector x = {rng.gaussian(), rng.gaussian()};
      auto [next, sig] = step(p, x, st);
      st = next;
      for (std::size_t u = 0; u < 3; ++u) {
        ranges &= sig.forget[u] > 0.0 && sig.forget[u] < 1.0;
        ranges &= sig.output_gate[u] > 0.0 && sig.output_gate[u] < 1.0;
        ranges &= sig.hidden_state[u] > -1.0 && sig.hidden_state[u] < 1.0;
        consistent &= std::abs(sig.hidden_state[u] -
                               sig.output_gate[u] * std::tanh(sig.cell_state[u])) <= 1e-12;
      }
    }
    report("gate ranges on random 200-step replay", ranges);
    report("hidden = output_gate * tanh(cell) at every step", consistent);
  } catch (const std::exception& e) {
    report("gate range replay", false, e.what());
  }

  try {
    AdamState adam = AdamState::zeros(2);
    Vector params = {1.0, -2.0};
    adam_step(adam, params, {0.0, 0.0});
    report("adam: zero gradient leaves parameters unchanged",
           params[0] == 1.0 && params[1] == -2.0 && adam.t == 1);
    adam_step(adam, params, {0.5, -0.5});
    const bool signs = params[0] < 1.0 && params[1] > -2.0;
    report("adam: first real step moves against the gradient sign", signs);
  } catch (const std::exception& e) {
    report("adam self-test", false, e.what());
  }

  try {
    Rng rng(7);
    Matrix X(20, 5);
    Vector s(20);
    for (double& v : X.data()) v = rng.gaussian();
    for (double& v : s) v = rng.gaussian();
    const double g_max = gamma_max(X, s);
    const LassoSolution at_max = lasso_fit(X, s, g_max * 1.5);
    report("lasso: gamma above the threshold zeroes every weight",
           at_max.active_set.empty());
    const LassoSolution mid = lasso_fit(X, s, g_max / 4.0);
    const KktReport kkt = check_kkt(X, s, mid);
    report("lasso: optimality certificate at convergence", kkt.ok);
  } catch (const std::exception& e) {
    report("lasso self-test", false, e.what());
  }

  try {
    TimeSeriesTable t;
    t.target_name = "y";
    t.column_names = {"y"};
    t.columns = {Vector(20)};
    for (std::size_t i = 0; i < 20; ++i) {
      t.columns[0][i] = static_cast<double>(i + 1);
      t.timestamps.push_back("r" + std::to_string(i));
    }
    WindowSpec spec;
    spec.seq_in = 6;
    spec.seq_out = 6;
    spec.horizon = 5;
    const auto samples = make_sequences(t, spec);
    const bool first_ok = !samples.empty() && samples[0].inputs[0][0] == 1.0 &&
                          samples[0].inputs[5][0] == 6.0 && samples[0].labels[0] == 7.0 &&
                          samples[0].labels[5] == 12.0;
    report("sequence geometry: labels trail inputs by horizon+1", first_ok);
  } catch (const std::exception& e) {
    report("sequence geometry", false, e.what());
  }

  try {
    Rng rng(3);
    const LstmParameters p = init_params(2, 3, rng);
    const LstmParameters q = lstm_from_json(lstm_to_json(p));
    report("parameter json round trip is bit-identical", p.flatten() == q.flatten());
  } catch (const std::exception& e) {
    report("parameter json round trip", false, e.what());
  }

  std::cout << (failures == 0 ? "all checks passed\n"
                              : std::to_string(failures) + " check(s) failed\n");
  return failures == 0 ? 0 : 1;
}

}  // namespace ylab
