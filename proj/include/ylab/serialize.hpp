#pragma once

#include <fstream>
#include <stdexcept>
#include <string>

#include <json.hpp>

#include "ylab/lstm.hpp"
#include "ylab/matrix.hpp"
#include "ylab/mlp.hpp"

namespace ylab {

using Json = nlohmann::json;

inline Json matrix_to_json(const Matrix& m) {
  return Json{{"rows", m.rows()}, {"cols", m.cols()}, {"data", m.data()}};
}

inline Matrix matrix_from_json(const Json& j) {
  Matrix m(j.at("rows").get<std::size_t>(), j.at("cols").get<std::size_t>());
  const auto data = j.at("data").get<std::vector<double>>();
  if (data.size() != m.size()) {
    throw std::runtime_error("matrix_from_json: data length does not match shape");
  }
  m.data() = data;
  return m;
}

inline Json lstm_to_json(const LstmParameters& p) {
  Json j;
  j["format"] = "ylab-tensors-v1";
  j["kind"] = "lstm";
  j["units"] = p.units;
  j["inputs"] = p.inputs;
  j["tensors"] = Json{
      {"W_fx", matrix_to_json(p.W_fx)}, {"W_fh", matrix_to_json(p.W_fh)}, {"b_f", p.b_f},
      {"W_ix", matrix_to_json(p.W_ix)}, {"W_ih", matrix_to_json(p.W_ih)}, {"b_i", p.b_i},
      {"W_gx", matrix_to_json(p.W_gx)}, {"W_gh", matrix_to_json(p.W_gh)}, {"b_g", p.b_g},
      {"W_ox", matrix_to_json(p.W_ox)}, {"W_oh", matrix_to_json(p.W_oh)}, {"b_o", p.b_o},
      {"w_out", p.w_out},               {"b_out", p.b_out},
  };
  return j;
}

inline LstmParameters lstm_from_json(const Json& j) {
  if (j.value("format", "") != "ylab-tensors-v1" || j.value("kind", "") != "lstm") {
    throw std::runtime_error("lstm_from_json: not an ylab-tensors-v1 lstm document");
  }
  LstmParameters p = LstmParameters::zeros(j.at("units").get<std::size_t>(),
                                           j.at("inputs").get<std::size_t>());
  const Json& t = j.at("tensors");
  p.W_fx = matrix_from_json(t.at("W_fx"));
  p.W_fh = matrix_from_json(t.at("W_fh"));
  p.b_f = t.at("b_f").get<Vector>();
  p.W_ix = matrix_from_json(t.at("W_ix"));
  p.W_ih = matrix_from_json(t.at("W_ih"));
  p.b_i = t.at("b_i").get<Vector>();
  p.W_gx = matrix_from_json(t.at("W_gx"));
  p.W_gh = matrix_from_json(t.at("W_gh"));
  p.b_g = t.at("b_g").get<Vector>();
  p.W_ox = matrix_from_json(t.at("W_ox"));
  p.W_oh = matrix_from_json(t.at("W_oh"));
  p.b_o = t.at("b_o").get<Vector>();
  p.w_out = t.at("w_out").get<Vector>();
  p.b_out = t.at("b_out").get<double>();
  return p;
}

inline Json mlp_to_json(const MlpParameters& p) {
  Json j;
  j["format"] = "ylab-tensors-v1";
  j["kind"] = "mlp";
  j["hidden"] = p.hidden;
  j["inputs"] = p.inputs;
  j["identity_hidden"] = p.identity_hidden;
  j["tensors"] = Json{
      {"W1", matrix_to_json(p.W1)},
      {"b1", p.b1},
      {"w2", p.w2},
      {"b2", p.b2},
  };
  return j;
}

inline MlpParameters mlp_from_json(const Json& j) {
  if (j.value("format", "") != "ylab-tensors-v1" || j.value("kind", "") != "mlp") {
    throw std::runtime_error("mlp_from_json: not an ylab-tensors-v1 mlp document");
  }
  MlpParameters p = MlpParameters::zeros(j.at("hidden").get<std::size_t>(),
                                         j.at("inputs").get<std::size_t>());
  p.identity_hidden = j.value("identity_hidden", false);
  const Json& t = j.at("tensors");
  p.W1 = matrix_from_json(t.at("W1"));
  p.b1 = t.at("b1").get<Vector>();
  p.w2 = t.at("w2").get<Vector>();
  p.b2 = t.at("b2").get<double>();
  return p;
}

inline void save_json(const std::string& path, const Json& j) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("save_json: cannot open " + path);
  out << j.dump(2) << '\n';
}

inline Json load_json(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("load_json: cannot open " + path);
  Json j;
  in >> j;
  return j;
}

}  // namespace ylab
