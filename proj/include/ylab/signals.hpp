#pragma once

#include <array>
#include <cmath>
#include <cstddef>
#include <fstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "ylab/lstm.hpp"
#include "ylab/matrix.hpp"
#include "ylab/timeseries.hpp"

namespace ylab {

// How cell memory behaves while tracing overlapping sequences.
enum class StateCarry {
  kZeroPerSequence,  // each anchor replays its window from a zero state
  kContinuous,       // one stateful pass over the whole table
};

// Per-step, per-unit values at the five instrumented cell locations. Row t of
// each matrix belongs to timestamps[t]/anchors[t]; columns are units.
struct SignalTrace {
  std::vector<std::string> timestamps;
  std::vector<std::size_t> anchors;  // source-table row each record describes
  Matrix forget;
  Matrix input_times_node;
  Matrix output_gate;
  Matrix cell_state;
  Matrix hidden_state;
  // filled only when factor recording is on
  Matrix input_gate;
  Matrix input_node;

  std::size_t steps() const { return anchors.size(); }
  std::size_t units() const { return forget.cols(); }
};

inline const std::array<std::string, 5>& signal_location_names() {
  static const std::array<std::string, 5> names = {
      "forget", "input_times_node", "output_gate", "cell_state", "hidden_state"};
  return names;
}

inline const Matrix& signal_by_name(const SignalTrace& trace, const std::string& name) {
  if (name == "forget") return trace.forget;
  if (name == "input_times_node") return trace.input_times_node;
  if (name == "output_gate") return trace.output_gate;
  if (name == "cell_state") return trace.cell_state;
  if (name == "hidden_state") return trace.hidden_state;
  throw std::invalid_argument("signal_by_name: unknown location '" + name + "'");
}

// Replays the model over the table and records the value at each tap for
// every admissible anchor (rows with seq_in history). The recorded value at
// time t is the final step of the sequence ending at t, i.e. the state that
// feeds the forecast made at t.
inline SignalTrace extract_trace(const LstmParameters& params, const TimeSeriesTable& table,
                                 std::size_t seq_in,
                                 StateCarry carry = StateCarry::kZeroPerSequence,
                                 bool record_factors = false) {
  if (seq_in < 1) throw std::invalid_argument("extract_trace: seq_in must be >= 1");
  if (table.n_cols() != params.inputs) {
    throw std::invalid_argument("extract_trace: table has " + std::to_string(table.n_cols()) +
                                " columns but the model expects " +
                                std::to_string(params.inputs));
  }
  if (table.n_rows() < seq_in) {
    throw std::invalid_argument("extract_trace: table shorter than seq_in");
  }
  const std::size_t n_anchors = table.n_rows() - seq_in + 1;

  SignalTrace trace;
  trace.anchors.reserve(n_anchors);
  trace.forget = Matrix(n_anchors, params.units);
  trace.input_times_node = Matrix(n_anchors, params.units);
  trace.output_gate = Matrix(n_anchors, params.units);
  trace.cell_state = Matrix(n_anchors, params.units);
  trace.hidden_state = Matrix(n_anchors, params.units);
  if (record_factors) {
    trace.input_gate = Matrix(n_anchors, params.units);
    trace.input_node = Matrix(n_anchors, params.units);
  }

  auto record = [&](std::size_t out_row, const LstmStepSignals& sig, const LstmState& state,
                    const Vector& x) {
    for (std::size_t u = 0; u < params.units; ++u) {
      trace.forget(out_row, u) = sig.forget[u];
      trace.input_times_node(out_row, u) = sig.input_times_node[u];
      trace.output_gate(out_row, u) = sig.output_gate[u];
      trace.cell_state(out_row, u) = sig.cell_state[u];
      trace.hidden_state(out_row, u) = sig.hidden_state[u];
    }
    if (record_factors) {
      // recover i and g from the recorded product via one extra gate pass
      const Vector i =
          sigmoid(detail::gate_preact(params.W_ix, x, params.W_ih, state.h, params.b_i));
      for (std::size_t u = 0; u < params.units; ++u) {
        trace.input_gate(out_row, u) = i[u];
        trace.input_node(out_row, u) = i[u] != 0.0 ? sig.input_times_node[u] / i[u] : 0.0;
      }
    }
  };

  if (carry == StateCarry::kContinuous) {
    LstmState state = LstmState::zeros(params.units);
    for (std::size_t t = 0; t < table.n_rows(); ++t) {
      const Vector x = table.row(t);
      const LstmState prev = state;
      auto [next, sig] = step(params, x, state);
      state = next;
      if (t + 1 >= seq_in) {
        const std::size_t out_row = t + 1 - seq_in;
        trace.anchors.push_back(t);
        trace.timestamps.push_back(table.timestamps[t]);
        record(out_row, sig, prev, x);
      }
    }
  } else {
    for (std::size_t anchor = seq_in - 1; anchor < table.n_rows(); ++anchor) {
      LstmState state = LstmState::zeros(params.units);
      LstmStepSignals last;
      LstmState prev = state;
      Vector last_x;
      for (std::size_t t = anchor + 1 - seq_in; t <= anchor; ++t) {
        last_x = table.row(t);
        prev = state;
        auto [next, sig] = step(params, last_x, state);
        state = next;
        last = std::move(sig);
      }
      const std::size_t out_row = anchor + 1 - seq_in;
      trace.anchors.push_back(anchor);
      trace.timestamps.push_back(table.timestamps[anchor]);
      record(out_row, last, prev, last_x);
    }
  }
  return trace;
}

struct Span {
  std::size_t begin = 0;  // inclusive trace row
  std::size_t end = 0;    // exclusive
};

struct UnitActivitySummary {
  std::size_t window = 0;
  double eps_weight = 0.0;
  double eps_var = 0.0;
  // rolling statistics, one row per window start, one column per unit
  Matrix mean_abs;
  Matrix variance;
  std::vector<std::vector<Span>> inactive_spans;  // per unit, disjoint, ordered
};

// A unit counts as dormant over a rolling window when both the mean absolute
// hidden value and its variance sit under the thresholds. Flagged windows are
// merged into maximal spans of trace rows.
inline UnitActivitySummary summarize_activity(const SignalTrace& trace, std::size_t window = 60,
                                              double eps_weight = 0.05,
                                              double eps_var = 1e-4) {
  if (window < 2) throw std::invalid_argument("summarize_activity: window must be >= 2");
  const std::size_t T = trace.steps();
  if (T < window) {
    throw std::invalid_argument("summarize_activity: trace shorter than window");
  }
  const std::size_t n_units = trace.units();
  const std::size_t n_windows = T - window + 1;
  const double inv_w = 1.0 / static_cast<double>(window);

  UnitActivitySummary sum;
  sum.window = window;
  sum.eps_weight = eps_weight;
  sum.eps_var = eps_var;
  sum.mean_abs = Matrix(n_windows, n_units);
  sum.variance = Matrix(n_windows, n_units);
  sum.inactive_spans.resize(n_units);

  for (std::size_t u = 0; u < n_units; ++u) {
    std::vector<Span>& spans = sum.inactive_spans[u];
    for (std::size_t i = 0; i < n_windows; ++i) {
      double mean = 0.0, mean_abs = 0.0;
      for (std::size_t t = i; t < i + window; ++t) {
        const double h = trace.hidden_state(t, u);
        mean += h;
        mean_abs += std::abs(h);
      }
      mean *= inv_w;
      mean_abs *= inv_w;
      double var = 0.0;
      for (std::size_t t = i; t < i + window; ++t) {
        const double d = trace.hidden_state(t, u) - mean;
        var += d * d;
      }
      var *= inv_w;
      sum.mean_abs(i, u) = mean_abs;
      sum.variance(i, u) = var;
      if (mean_abs < eps_weight && var < eps_var) {
        if (!spans.empty() && spans.back().end >= i) {
          spans.back().end = i + window;
        } else {
          spans.push_back({i, i + window});
        }
      }
    }
  }
  return sum;
}

// Overlap between detected spans and a reference span, computed on row sets.
inline double span_jaccard(const std::vector<Span>& spans, const Span& reference) {
  if (reference.end <= reference.begin) {
    throw std::invalid_argument("span_jaccard: empty reference span");
  }
  std::size_t detected = 0, inter = 0;
  for (const Span& s : spans) {
    detected += s.end - s.begin;
    const std::size_t lo = std::max(s.begin, reference.begin);
    const std::size_t hi = std::min(s.end, reference.end);
    if (hi > lo) inter += hi - lo;
  }
  const std::size_t uni = detected + (reference.end - reference.begin) - inter;
  return uni == 0 ? 0.0 : static_cast<double>(inter) / static_cast<double>(uni);
}

// Long-format export: timestamp, location, unit, value.
inline void save_trace_csv(const std::string& file, const SignalTrace& trace) {
  std::ofstream out(file);
  if (!out) throw std::runtime_error("save_trace_csv: cannot open " + file);
  out.precision(17);
  out << "timestamp,location,unit,value\n";
  for (const std::string& loc : signal_location_names()) {
    const Matrix& m = signal_by_name(trace, loc);
    for (std::size_t t = 0; t < trace.steps(); ++t) {
      for (std::size_t u = 0; u < trace.units(); ++u) {
        out << trace.timestamps[t] << ',' << loc << ',' << u << ',' << m(t, u) << '\n';
      }
    }
  }
}

}  // namespace ylab
