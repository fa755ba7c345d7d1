#include "onda/model_io.hpp"

#include <stdexcept>

#include <json.hpp>

#include "onda/csv.hpp"

namespace onda {

namespace {

using nlohmann::json;

json stats_to_json(const StatsSource& stats) {
  json arr = json::array();
  for (const ChannelStats& s : stats) arr.push_back({{"mu", s.mu}, {"sigma2", s.sigma2}});
  return arr;
}

StatsSource stats_from_json(const json& arr) {
  StatsSource stats;
  for (const json& s : arr)
    stats.push_back({s.at("mu").get<std::vector<double>>(),
                     s.at("sigma2").get<std::vector<double>>()});
  return stats;
}

}  // namespace

void save_model(const std::string& path, const Params& params, const DomainBNBank* bank) {
  json j;
  j["format"] = "onda-model-v1";
  j["spec"] = {{"input_dim", params.spec.input_dim},
               {"hidden_dims", params.spec.hidden_dims},
               {"num_classes", params.spec.num_classes}};
  json layers = json::array();
  for (const DenseLayer& layer : params.fc)
    layers.push_back({{"in", layer.w.rows()},
                      {"out", layer.w.cols()},
                      {"w", layer.w.data},
                      {"b", layer.b}});
  j["layers"] = layers;
  json bn = json::array();
  for (const BNState& s : params.bn)
    bn.push_back({{"gamma", s.gamma},
                  {"beta", s.beta},
                  {"mu", s.mu},
                  {"sigma2", s.sigma2},
                  {"eps", s.eps},
                  {"momentum", s.train_momentum}});
  j["bn"] = bn;
  if (bank) {
    json b = json::object();
    for (const auto& [domain, stats] : bank->stats) b[domain] = stats_to_json(stats);
    j["bank"] = b;
  }
  write_file_atomic(path, j.dump() + "\n");
}

LoadedModel load_model(const std::string& path) {
  const json j = json::parse(read_file(path));
  if (j.value("format", "") != "onda-model-v1")
    throw std::runtime_error("unrecognized model format in '" + path + "'");

  LoadedModel out;
  out.params.spec.input_dim = j.at("spec").at("input_dim").get<std::size_t>();
  out.params.spec.hidden_dims = j.at("spec").at("hidden_dims").get<std::vector<std::size_t>>();
  out.params.spec.num_classes = j.at("spec").at("num_classes").get<std::size_t>();

  for (const json& layer : j.at("layers")) {
    DenseLayer dl;
    dl.w = Tensor::matrix(layer.at("in").get<std::size_t>(), layer.at("out").get<std::size_t>());
    dl.w.data = layer.at("w").get<std::vector<double>>();
    if (dl.w.data.size() != dl.w.numel())
      throw std::runtime_error("model layer size mismatch in '" + path + "'");
    dl.b = layer.at("b").get<std::vector<double>>();
    out.params.fc.push_back(std::move(dl));
  }
  for (const json& s : j.at("bn")) {
    BNState bn;
    bn.gamma = s.at("gamma").get<std::vector<double>>();
    bn.beta = s.at("beta").get<std::vector<double>>();
    bn.mu = s.at("mu").get<std::vector<double>>();
    bn.sigma2 = s.at("sigma2").get<std::vector<double>>();
    bn.eps = s.at("eps").get<double>();
    bn.train_momentum = s.at("momentum").get<double>();
    if (bn.eps <= 0.0) throw std::runtime_error("model bn eps must be positive");
    for (double v : bn.sigma2)
      if (v < 0.0) throw std::runtime_error("model bn variance must be nonnegative");
    out.params.bn.push_back(std::move(bn));
  }
  if (j.contains("bank")) {
    DomainBNBank bank;
    for (const auto& [domain, stats] : j.at("bank").items())
      bank.stats[domain] = stats_from_json(stats);
    out.bank = std::move(bank);
  }
  return out;
}

}  // namespace onda
