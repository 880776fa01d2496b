#include "spmpc/gp_model.hpp"

#include <json.hpp>

#include <fstream>
#include <sstream>

namespace spmpc::gp {

namespace {

using nlohmann::json;

constexpr const char* kFormat = "spmpc.gp_model";
constexpr int kVersion = 1;

json rows_to_json(const Mat& m) {
  json rows = json::array();
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    json row = json::array();
    for (Eigen::Index j = 0; j < m.cols(); ++j) row.push_back(m(i, j));
    rows.push_back(std::move(row));
  }
  return rows;
}

Mat rows_from_json(const json& j, Eigen::Index cols) {
  Mat m(static_cast<Eigen::Index>(j.size()), cols);
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    const auto& row = j.at(static_cast<std::size_t>(i));
    if (static_cast<Eigen::Index>(row.size()) != cols) throw std::invalid_argument("model file: ragged matrix row");
    for (Eigen::Index c = 0; c < cols; ++c) m(i, c) = row.at(static_cast<std::size_t>(c)).get<double>();
  }
  return m;
}

}  // namespace

std::string serialize_model(const GPModel& model) {
  const Dataset& data = model.training_data();
  json j;
  j["format"] = kFormat;
  j["version"] = kVersion;
  j["state_dim"] = data.state_dim();
  j["control_dim"] = data.control_dim();
  j["output_dim"] = data.output_dim();
  j["target_mode"] = to_string(model.target_mode());
  j["sparse"] = model.is_sparse();
  json hp = json::array();
  for (const auto& o : model.hyperparams().outputs) {
    hp.push_back({{"signal_var", o.signal_var},
                  {"noise_var", o.noise_var},
                  {"length_scales", std::vector<double>(o.length_scales.data(),
                                                        o.length_scales.data() + o.length_scales.size())}});
  }
  j["hyperparams"] = std::move(hp);
  j["dataset"] = {{"inputs", rows_to_json(data.inputs())}, {"targets", rows_to_json(data.targets())}};
  j["pseudo_inputs"] = model.is_sparse() ? rows_to_json(model.support()) : json(nullptr);
  return j.dump(1);
}

GPModel deserialize_model(const std::string& text) {
  const json j = json::parse(text);
  if (j.value("format", "") != kFormat) throw std::invalid_argument("model file: unrecognized format");
  if (j.at("version").get<int>() != kVersion) throw std::invalid_argument("model file: unsupported version");
  const int sd = j.at("state_dim").get<int>();
  const int cd = j.at("control_dim").get<int>();
  const int od = j.at("output_dim").get<int>();

  GPHyperparams hp;
  for (const auto& o : j.at("hyperparams")) {
    const auto ls = o.at("length_scales").get<std::vector<double>>();
    hp.outputs.push_back({o.at("signal_var").get<double>(), Eigen::Map<const Vec>(ls.data(), static_cast<Eigen::Index>(ls.size())),
                          o.at("noise_var").get<double>()});
  }
  Dataset data(sd, cd, od);
  const Mat inputs = rows_from_json(j.at("dataset").at("inputs"), sd + cd);
  const Mat targets = rows_from_json(j.at("dataset").at("targets"), od);
  if (inputs.rows() != targets.rows()) throw std::invalid_argument("model file: inputs/targets length mismatch");
  for (Eigen::Index i = 0; i < inputs.rows(); ++i) data.add(Vec(inputs.row(i).transpose()), Vec(targets.row(i).transpose()));

  const TargetMode mode = target_mode_from_string(j.at("target_mode").get<std::string>());
  if (j.at("sparse").get<bool>()) {
    return sparsify_with_inputs(data, hp, rows_from_json(j.at("pseudo_inputs"), sd + cd), mode);
  }
  return GPModel::build(data, hp, mode);
}

void save_model(const GPModel& model, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write model file: " + path);
  out << serialize_model(model) << '\n';
}

GPModel load_model(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot read model file: " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return deserialize_model(ss.str());
}

}  // namespace spmpc::gp
