#include "bqr/checkpoint.hpp"

#include <fstream>

#include "bqr/error.hpp"

namespace bqr {

namespace {

const char* kind_name(LossKind kind) {
  return kind == LossKind::kBce ? "bce" : "bqr";
}

LossKind kind_from_name(const std::string& name) {
  if (name == "bqr") return LossKind::kBqr;
  if (name == "bce") return LossKind::kBce;
  throw SchemaError("unknown loss kind '" + name + "' in checkpoint");
}

}  // namespace

nlohmann::json checkpoint_to_json(const Checkpoint& ckpt) {
  const QuantileNet& net = ckpt.net;
  nlohmann::json doc;
  doc["format"] = "bqr-checkpoint";
  doc["version"] = kCheckpointVersion;
  doc["kind"] = kind_name(ckpt.loss.kind);
  doc["lambda"] = ckpt.loss.lambda;
  doc["input_dim"] = net.input_dim();
  doc["trunk_widths"] = std::vector<std::size_t>(net.trunk_widths().begin(),
                                                 net.trunk_widths().end());
  doc["grid"] = std::vector<double>(net.grid().levels().begin(),
                                    net.grid().levels().end());
  doc["param_count"] = net.param_count();
  const auto& p = net.params();
  doc["params"] = std::vector<double>(p.data(), p.data() + p.size());
  doc["metadata"] = ckpt.metadata;
  return doc;
}

Checkpoint checkpoint_from_json(const nlohmann::json& doc) {
  try {
    if (doc.at("format").get<std::string>() != "bqr-checkpoint") {
      throw SchemaError("not a bqr checkpoint");
    }
    const int version = doc.at("version").get<int>();
    if (version != kCheckpointVersion) {
      throw SchemaError("unsupported checkpoint version " +
                        std::to_string(version));
    }
    TauGrid grid(doc.at("grid").get<std::vector<double>>());
    QuantileNet net(doc.at("input_dim").get<std::size_t>(),
                    doc.at("trunk_widths").get<std::vector<std::size_t>>(),
                    grid);
    const auto params = doc.at("params").get<std::vector<double>>();
    if (params.size() != doc.at("param_count").get<std::size_t>()) {
      throw SchemaError("param_count does not match the params array");
    }
    net.set_params(Eigen::Map<const Eigen::VectorXd>(
        params.data(), static_cast<Eigen::Index>(params.size())));
    LossSpec loss{grid, doc.at("lambda").get<double>(),
                  kind_from_name(doc.at("kind").get<std::string>())};
    loss.validate();
    return Checkpoint{std::move(net), std::move(loss),
                      doc.value("metadata", nlohmann::json::object())};
  } catch (const nlohmann::json::exception& e) {
    throw SchemaError(std::string("malformed checkpoint: ") + e.what());
  } catch (const SchemaError&) {
    throw;
  } catch (const Error& e) {
    // Bad grid, architecture or parameter values are all schema problems here.
    throw SchemaError(std::string("inconsistent checkpoint: ") + e.what());
  }
}

void save_checkpoint(const Checkpoint& ckpt, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write checkpoint " + path.string());
  out << checkpoint_to_json(ckpt).dump(1) << '\n';
  if (!out) throw IoError("failed writing checkpoint " + path.string());
}

Checkpoint load_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open checkpoint " + path.string());
  nlohmann::json doc;
  try {
    in >> doc;
  } catch (const nlohmann::json::parse_error& e) {
    throw SchemaError("checkpoint " + path.string() +
                      " is not valid JSON: " + e.what());
  }
  return checkpoint_from_json(doc);
}

}  // namespace bqr
