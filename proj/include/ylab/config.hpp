#pragma once

#include <cstdint>
#include <fstream>
#include <map>
#include <set>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "ylab/experiments.hpp"
#include "ylab/rng.hpp"
#include "ylab/signals.hpp"
#include "ylab/synth.hpp"
#include "ylab/timeseries.hpp"

namespace ylab {

// Flat [section] key = value files. '#' and ';' start comments; keys are
// addressed as "section.key".
class ConfigFile {
 public:
  static ConfigFile parse_string(const std::string& text) {
    ConfigFile cfg;
    cfg.raw_ = text;
    std::istringstream in(text);
    std::string line, section;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
      ++line_no;
      const std::size_t comment = line.find_first_of("#;");
      if (comment != std::string::npos) line = line.substr(0, comment);
      line = detail::trim(line);
      if (line.empty()) continue;
      if (line.front() == '[') {
        if (line.back() != ']' || line.size() < 3) {
          throw std::invalid_argument("config line " + std::to_string(line_no) +
                                      ": malformed section header '" + line + "'");
        }
        section = detail::trim(line.substr(1, line.size() - 2));
        continue;
      }
      const std::size_t eq = line.find('=');
      if (eq == std::string::npos) {
        throw std::invalid_argument("config line " + std::to_string(line_no) +
                                    ": expected key = value, got '" + line + "'");
      }
      const std::string key = detail::trim(line.substr(0, eq));
      const std::string value = detail::trim(line.substr(eq + 1));
      if (key.empty()) {
        throw std::invalid_argument("config line " + std::to_string(line_no) + ": empty key");
      }
      const std::string full = section.empty() ? key : section + "." + key;
      if (cfg.values_.count(full)) {
        throw std::invalid_argument("config line " + std::to_string(line_no) +
                                    ": duplicate key '" + full + "'");
      }
      cfg.values_[full] = value;
    }
    return cfg;
  }

  static ConfigFile parse_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("config: cannot open '" + path + "'");
    std::ostringstream buf;
    buf << in.rdbuf();
    return parse_string(buf.str());
  }

  bool has(const std::string& key) const { return values_.count(key) > 0; }

  std::string get_string(const std::string& key, const std::string& def) const {
    const auto it = values_.find(key);
    return it == values_.end() ? def : it->second;
  }

  std::string require(const std::string& key) const {
    const auto it = values_.find(key);
    if (it == values_.end()) {
      throw std::invalid_argument("config: missing required key '" + key + "'");
    }
    return it->second;
  }

  double get_double(const std::string& key, double def) const {
    const auto it = values_.find(key);
    if (it == values_.end()) return def;
    try {
      std::size_t used = 0;
      const double v = std::stod(it->second, &used);
      if (used != it->second.size()) throw std::invalid_argument("trailing characters");
      return v;
    } catch (const std::exception&) {
      throw std::invalid_argument("config: key '" + key + "' is not a number: '" + it->second +
                                  "'");
    }
  }

  long long get_int(const std::string& key, long long def) const {
    const auto it = values_.find(key);
    if (it == values_.end()) return def;
    try {
      std::size_t used = 0;
      const long long v = std::stoll(it->second, &used);
      if (used != it->second.size()) throw std::invalid_argument("trailing characters");
      return v;
    } catch (const std::exception&) {
      throw std::invalid_argument("config: key '" + key + "' is not an integer: '" +
                                  it->second + "'");
    }
  }

  std::size_t get_size(const std::string& key, std::size_t def) const {
    const long long v = get_int(key, static_cast<long long>(def));
    if (v < 0) throw std::invalid_argument("config: key '" + key + "' must be >= 0");
    return static_cast<std::size_t>(v);
  }

  std::uint64_t get_u64(const std::string& key, std::uint64_t def) const {
    const auto it = values_.find(key);
    if (it == values_.end()) return def;
    try {
      return std::stoull(it->second);
    } catch (const std::exception&) {
      throw std::invalid_argument("config: key '" + key + "' is not an integer: '" +
                                  it->second + "'");
    }
  }

  bool get_bool(const std::string& key, bool def) const {
    const auto it = values_.find(key);
    if (it == values_.end()) return def;
    const std::string& v = it->second;
    if (v == "true" || v == "1" || v == "yes" || v == "on") return true;
    if (v == "false" || v == "0" || v == "no" || v == "off") return false;
    throw std::invalid_argument("config: key '" + key + "' is not a boolean: '" + v + "'");
  }

  std::vector<std::string> get_list(const std::string& key,
                                    const std::vector<std::string>& def) const {
    const auto it = values_.find(key);
    if (it == values_.end()) return def;
    std::vector<std::string> out;
    std::string item;
    std::istringstream ss(it->second);
    while (std::getline(ss, item, ',')) {
      item = detail::trim(item);
      if (!item.empty()) out.push_back(item);
    }
    return out;
  }

  std::vector<std::size_t> get_size_list(const std::string& key,
                                         const std::vector<std::size_t>& def) const {
    if (!has(key)) return def;
    std::vector<std::size_t> out;
    for (const std::string& item : get_list(key, {})) {
      try {
        out.push_back(static_cast<std::size_t>(std::stoull(item)));
      } catch (const std::exception&) {
        throw std::invalid_argument("config: key '" + key + "' must list integers, got '" +
                                    item + "'");
      }
    }
    return out;
  }

  // reject typos loudly: every present key must be expected
  void check_known_keys(const std::set<std::string>& known) const {
    for (const auto& [key, value] : values_) {
      if (!known.count(key)) {
        throw std::invalid_argument("config: unknown key '" + key + "'");
      }
    }
  }

  const std::string& raw() const { return raw_; }

 private:
  std::map<std::string, std::string> values_;
  std::string raw_;
};

inline std::string hex_hash(const std::string& text) {
  const std::uint64_t h = fnv1a64(text);
  std::ostringstream out;
  out << std::hex << h;
  return out.str();
}

struct ExperimentConfig {
  // data
  std::string csv_path;  // empty = synthesize
  std::string target;    // optional explicit target column
  SynthConfig synth;
  // study
  std::string study = "forecast";  // forecast | signals | laglasso | significance
  std::uint64_t seed = 42;
  std::string output_dir = "out";
  // forecast roster
  std::vector<std::string> roster = {"LSTM06",     "LSTM21",     "LSTM61",
                                     "NN TgtOnly", "NN RelFeat", "Persistence"};
  std::size_t lstm_units = 4;
  std::size_t mlp_hidden = 10;
  std::vector<std::size_t> horizons = {0, 5, 10, 15, 20};
  WalkForwardConfig wf;
  // signal model (signals/laglasso/significance studies)
  SignalModelConfig signal_model;
  std::string trace_mode = "final";  // final | stitched
  StateCarry carry = StateCarry::kZeroPerSequence;
  std::size_t activity_window = 60;
  double eps_weight = 0.05;
  double eps_var = 1e-4;
  // stitched trace mode
  std::size_t stitch_window = 300;
  std::size_t stitch_epochs_update = 50;
  std::size_t stitch_retrain_every = 1;
  // lasso
  std::size_t k = 6;
  double gamma = 1.0;
  std::size_t grid_points = 50;
  double grid_floor = 1e-3;
  std::size_t n_runs = 100;

  std::string config_hash;  // hex digest of the raw config text

  void validate() const {
    static const std::set<std::string> studies = {"forecast", "signals", "laglasso",
                                                  "significance"};
    if (!studies.count(study)) {
      throw std::invalid_argument("config: study '" + study +
                                  "' must be one of forecast, signals, laglasso, significance");
    }
    if (output_dir.empty()) throw std::invalid_argument("config: output dir must not be empty");
    if (study == "forecast") {
      if (roster.empty()) throw std::invalid_argument("config: models.roster is empty");
      if (horizons.empty()) throw std::invalid_argument("config: models.horizons is empty");
      if (wf.window < 2) throw std::invalid_argument("config: training.window must be >= 2");
      if (wf.train_fraction <= 0.0 || wf.train_fraction >= 1.0) {
        throw std::invalid_argument("config: training.train_fraction must be in (0,1)");
      }
    } else {
      signal_model.validate();
    }
    if (trace_mode != "final" && trace_mode != "stitched") {
      throw std::invalid_argument("config: signals.trace_mode must be final or stitched");
    }
    if (k < 1 || k > 6) {
      throw std::invalid_argument("config: lasso.k must be in [1,6]");
    }
    if (gamma < 0.0) throw std::invalid_argument("config: lasso.gamma must be >= 0");
    if (study == "significance" && n_runs < 30) {
      throw std::invalid_argument("config: lasso.n_runs must be >= 30 for significance");
    }
    if (activity_window < 2) {
      throw std::invalid_argument("config: signals.activity_window must be >= 2");
    }
  }

  static ExperimentConfig from_config(const ConfigFile& file) {
    static const std::set<std::string> known = {
        "data.csv",           "data.target",          "data.synth_length",
        "data.synth_decoys",  "data.synth_driver_lag", "data.synth_driver_coef",
        "data.synth_regimes", "data.synth_regime_shift", "data.synth_mean_reversion",
        "data.synth_noise_std", "data.synth_seed",
        "study.kind",         "study.seed",           "study.output",
        "models.roster",      "models.lstm_units",    "models.mlp_hidden",
        "models.horizons",
        "training.window",    "training.train_fraction", "training.max_test_steps",
        "training.retrain_every", "training.cold_start", "training.epochs_initial",
        "training.epochs_update", "training.lr",       "training.batch_size",
        "training.clip_norm", "training.relfeat_k",   "training.relfeat_gamma",
        "signal_model.units", "signal_model.seq_in",  "signal_model.seq_out",
        "signal_model.horizon", "signal_model.epochs", "signal_model.lr",
        "signal_model.clip_norm", "signal_model.train_fraction",
        "signals.trace_mode", "signals.state_carry",  "signals.activity_window",
        "signals.eps_weight", "signals.eps_var",      "signals.window",
        "signals.epochs_update", "signals.retrain_every",
        "lasso.k",            "lasso.gamma",          "lasso.grid_points",
        "lasso.grid_floor",   "lasso.n_runs",
    };
    file.check_known_keys(known);

    ExperimentConfig c;
    c.csv_path = file.get_string("data.csv", "");
    c.target = file.get_string("data.target", "");
    c.synth.length = file.get_size("data.synth_length", c.synth.length);
    c.synth.decoys = file.get_size("data.synth_decoys", c.synth.decoys);
    c.synth.driver_lag = file.get_size("data.synth_driver_lag", c.synth.driver_lag);
    c.synth.driver_coef = file.get_double("data.synth_driver_coef", c.synth.driver_coef);
    c.synth.regimes = file.get_size("data.synth_regimes", c.synth.regimes);
    c.synth.regime_shift = file.get_double("data.synth_regime_shift", c.synth.regime_shift);
    c.synth.mean_reversion =
        file.get_double("data.synth_mean_reversion", c.synth.mean_reversion);
    c.synth.noise_std = file.get_double("data.synth_noise_std", c.synth.noise_std);
    c.synth.seed = file.get_u64("data.synth_seed", c.synth.seed);

    c.study = file.get_string("study.kind", c.study);
    c.seed = file.get_u64("study.seed", c.seed);
    c.output_dir = file.get_string("study.output", c.output_dir);

    c.roster = file.get_list("models.roster", c.roster);
    c.lstm_units = file.get_size("models.lstm_units", c.lstm_units);
    c.mlp_hidden = file.get_size("models.mlp_hidden", c.mlp_hidden);
    c.horizons = file.get_size_list("models.horizons", c.horizons);

    c.wf.window = file.get_size("training.window", c.wf.window);
    c.wf.train_fraction = file.get_double("training.train_fraction", c.wf.train_fraction);
    c.wf.max_test_steps = file.get_size("training.max_test_steps", c.wf.max_test_steps);
    c.wf.retrain_every = file.get_size("training.retrain_every", c.wf.retrain_every);
    c.wf.cold_start = file.get_bool("training.cold_start", c.wf.cold_start);
    c.wf.epochs_initial = file.get_size("training.epochs_initial", c.wf.epochs_initial);
    c.wf.epochs_update = file.get_size("training.epochs_update", c.wf.epochs_update);
    c.wf.train.lr = file.get_double("training.lr", c.wf.train.lr);
    c.wf.train.batch_size = file.get_size("training.batch_size", c.wf.train.batch_size);
    c.wf.train.clip_norm = file.get_double("training.clip_norm", c.wf.train.clip_norm);
    c.wf.relfeat_k = file.get_size("training.relfeat_k", c.wf.relfeat_k);
    c.wf.relfeat_gamma = file.get_double("training.relfeat_gamma", c.wf.relfeat_gamma);
    c.wf.seed = c.seed;

    c.signal_model.units = file.get_size("signal_model.units", c.signal_model.units);
    c.signal_model.seq_in = file.get_size("signal_model.seq_in", c.signal_model.seq_in);
    c.signal_model.seq_out = file.get_bool("signal_model.seq_out", c.signal_model.seq_out);
    c.signal_model.horizon = file.get_size("signal_model.horizon", c.signal_model.horizon);
    c.signal_model.epochs = file.get_size("signal_model.epochs", c.signal_model.epochs);
    c.signal_model.lr = file.get_double("signal_model.lr", c.signal_model.lr);
    c.signal_model.clip_norm =
        file.get_double("signal_model.clip_norm", c.signal_model.clip_norm);
    c.signal_model.train_fraction =
        file.get_double("signal_model.train_fraction", c.signal_model.train_fraction);
    c.signal_model.seed = c.seed;

    c.trace_mode = file.get_string("signals.trace_mode", c.trace_mode);
    const std::string carry = file.get_string("signals.state_carry", "zero");
    if (carry == "zero") {
      c.carry = StateCarry::kZeroPerSequence;
    } else if (carry == "continuous") {
      c.carry = StateCarry::kContinuous;
    } else {
      throw std::invalid_argument("config: signals.state_carry must be zero or continuous");
    }
    c.activity_window = file.get_size("signals.activity_window", c.activity_window);
    c.eps_weight = file.get_double("signals.eps_weight", c.eps_weight);
    c.eps_var = file.get_double("signals.eps_var", c.eps_var);
    c.stitch_window = file.get_size("signals.window", c.stitch_window);
    c.stitch_epochs_update = file.get_size("signals.epochs_update", c.stitch_epochs_update);
    c.stitch_retrain_every = file.get_size("signals.retrain_every", c.stitch_retrain_every);

    c.k = file.get_size("lasso.k", c.k);
    c.gamma = file.get_double("lasso.gamma", c.gamma);
    c.grid_points = file.get_size("lasso.grid_points", c.grid_points);
    c.grid_floor = file.get_double("lasso.grid_floor", c.grid_floor);
    c.n_runs = file.get_size("lasso.n_runs", c.n_runs);

    c.config_hash = hex_hash(file.raw());
    c.validate();
    return c;
  }

  static ExperimentConfig load(const std::string& path) {
    return from_config(ConfigFile::parse_file(path));
  }
};

// Maps a roster entry to its architecture. "LSTM<nn>" takes its sequence
// length from the digits; the two net names and Persistence are fixed.
inline ModelSpec model_spec_from_name(const std::string& name, std::size_t lstm_units,
                                      std::size_t mlp_hidden) {
  if (name.rfind("LSTM", 0) == 0 && name.size() > 4) {
    const std::string digits = name.substr(4);
    if (digits.find_first_not_of("0123456789") == std::string::npos) {
      const std::size_t seq = static_cast<std::size_t>(std::stoull(digits));
      if (seq < 1) throw std::invalid_argument("config: model '" + name + "' has zero lags");
      return {name, ModelKind::kLstm, lstm_units, seq, false};
    }
  }
  if (name == "NN TgtOnly") return {name, ModelKind::kMlpTargetLags, mlp_hidden, 6, false};
  if (name == "NN RelFeat") {
    return {name, ModelKind::kMlpRelevantFeatures, mlp_hidden, 6, false};
  }
  if (name == "Persistence") return {name, ModelKind::kPersistence, 0, 1, false};
  throw std::invalid_argument("config: unknown model name '" + name +
                              "' (expected LSTM<n>, NN TgtOnly, NN RelFeat, Persistence)");
}

}  // namespace ylab
