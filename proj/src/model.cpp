#include "edfa/model.hpp"

#include <fstream>

namespace edfa {

nlohmann::json Provenance::to_json() const {
  return {{"seed", seed},
          {"kind", kind},
          {"source_device", source_device},
          {"target_device", target_device},
          {"pretrain_epochs_per_layer", pretrain_epochs_per_layer},
          {"finetune_epochs", finetune_epochs},
          {"transfer_epochs", transfer_epochs},
          {"learning_rate", learning_rate},
          {"lr_multipliers", lr_multipliers}};
}

Provenance Provenance::from_json(const nlohmann::json& j) {
  Provenance p;
  p.seed = j.at("seed").get<std::uint64_t>();
  p.kind = j.at("kind").get<std::string>();
  p.source_device = j.at("source_device").get<std::string>();
  p.target_device = j.at("target_device").get<std::string>();
  p.pretrain_epochs_per_layer = j.at("pretrain_epochs_per_layer").get<std::size_t>();
  p.finetune_epochs = j.at("finetune_epochs").get<std::size_t>();
  p.transfer_epochs = j.at("transfer_epochs").get<std::size_t>();
  p.learning_rate = j.at("learning_rate").get<double>();
  p.lr_multipliers = j.at("lr_multipliers").get<std::vector<double>>();
  return p;
}

Spectrum GainModel::predict(const MeasurementRecord& record) const {
  const FeatureVector x = features.encode(record);
  const Eigen::VectorXd y = nn::forward(network, x.values);
  Spectrum g = labels.destandardize(y);
  for (std::size_t i = 0; i < kChannels; ++i) {
    if (!record.plan.on(i)) g[i] = kOffChannelDbm;
  }
  return g;
}

std::vector<Spectrum> GainModel::predict(std::span<const MeasurementRecord> records) const {
  std::vector<Spectrum> out;
  out.reserve(records.size());
  if (records.empty()) return out;
  const Eigen::MatrixXd y = nn::forward(network, features.encode_batch(records));
  for (std::size_t j = 0; j < records.size(); ++j) {
    Spectrum g = labels.destandardize(y.col(static_cast<Eigen::Index>(j)));
    for (std::size_t i = 0; i < kChannels; ++i) {
      if (!records[j].plan.on(i)) g[i] = kOffChannelDbm;
    }
    out.push_back(g);
  }
  return out;
}

nlohmann::json network_to_json(const nn::Network& net) {
  nlohmann::json layers = nlohmann::json::array();
  for (const auto& l : net.layers()) {
    // Row-major weights.
    std::vector<double> w;
    w.reserve(static_cast<std::size_t>(l.weights.size()));
    for (Eigen::Index i = 0; i < l.weights.rows(); ++i) {
      for (Eigen::Index j = 0; j < l.weights.cols(); ++j) w.push_back(l.weights(i, j));
    }
    layers.push_back({{"in", l.in_dim()},
                      {"out", l.out_dim()},
                      {"activation", l.activation == nn::Activation::Selu ? "selu" : "linear"},
                      {"lr_multiplier", l.lr_multiplier},
                      {"weights", w},
                      {"biases", std::vector<double>(l.biases.data(), l.biases.data() + l.biases.size())}});
  }
  return layers;
}

nn::Network network_from_json(const nlohmann::json& j) {
  std::vector<nn::DenseLayer> layers;
  for (const auto& lj : j) {
    const auto in = lj.at("in").get<std::size_t>();
    const auto out = lj.at("out").get<std::size_t>();
    const auto act = lj.at("activation").get<std::string>();
    if (act != "selu" && act != "linear") throw ParseError("unknown activation '" + act + "'");
    nn::DenseLayer l(in, out, act == "selu" ? nn::Activation::Selu : nn::Activation::Linear);
    l.lr_multiplier = lj.at("lr_multiplier").get<double>();
    const auto w = lj.at("weights").get<std::vector<double>>();
    const auto b = lj.at("biases").get<std::vector<double>>();
    if (w.size() != in * out || b.size() != out) throw ParseError("layer parameter count mismatch");
    for (std::size_t i = 0; i < out; ++i) {
      for (std::size_t k = 0; k < in; ++k) {
        l.weights(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(k)) = w[i * in + k];
      }
      l.biases[static_cast<Eigen::Index>(i)] = b[i];
    }
    layers.push_back(std::move(l));
  }
  return nn::Network(std::move(layers));
}

nlohmann::json to_json(const GainModel& model) {
  return {{"format", "edfa-ssnn-checkpoint"},
          {"version", kCheckpointVersion},
          {"use_internal", model.use_internal()},
          {"input_dim", model.network.input_dim()},
          {"output_dim", model.network.output_dim()},
          {"layers", network_to_json(model.network)},
          {"feature_standardizer", model.features.to_json()},
          {"label_scaler", model.labels.to_json()},
          {"provenance", model.provenance.to_json()}};
}

GainModel model_from_json(const nlohmann::json& j) {
  if (j.value("format", "") != "edfa-ssnn-checkpoint") throw ParseError("not a model checkpoint");
  if (j.at("version").get<int>() != kCheckpointVersion) throw ParseError("unsupported checkpoint version");
  GainModel m{network_from_json(j.at("layers")), Standardizer::from_json(j.at("feature_standardizer")),
              LabelScaler::from_json(j.at("label_scaler")), Provenance::from_json(j.at("provenance"))};
  if (m.network.input_dim() != m.features.dim()) throw ParseError("checkpoint input width does not match features");
  if (m.network.output_dim() != kChannels) throw ParseError("checkpoint output width is not 95");
  if (j.at("use_internal").get<bool>() != m.use_internal()) throw ParseError("checkpoint feature flag mismatch");
  return m;
}

void save_checkpoint(const GainModel& model, const std::filesystem::path& path) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ConfigError("cannot write checkpoint " + path.string());
  out << to_json(model).dump() << '\n';
}

GainModel load_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open checkpoint " + path.string());
  try {
    return model_from_json(nlohmann::json::parse(in));
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(path.string() + ": " + e.what());
  }
}

}  // namespace edfa
