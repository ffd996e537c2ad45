#pragma once

#include <filesystem>

#include <nlohmann/json.hpp>

#include "bqr/loss.hpp"
#include "bqr/net.hpp"

namespace bqr {

/// A trained network together with the loss it was trained under.
///
/// On disk this is one JSON document:
///
///   {
///     "format": "bqr-checkpoint",
///     "version": 1,
///     "kind": "bqr" | "bce",
///     "lambda": <crossing weight>,
///     "input_dim": <d>,
///     "trunk_widths": [w1, ..., wL],
///     "grid": [tau_1, ..., tau_m],
///     "param_count": <W>,
///     "params": [W doubles in QuantileNet::params() order],
///     "metadata": { ...free-form provenance... }
///   }
///
/// Doubles are written with round-trip precision, so save/load is exact.
struct Checkpoint {
  QuantileNet net;
  LossSpec loss;
  nlohmann::json metadata = nlohmann::json::object();
};

inline constexpr int kCheckpointVersion = 1;

nlohmann::json checkpoint_to_json(const Checkpoint& ckpt);
Checkpoint checkpoint_from_json(const nlohmann::json& doc);

void save_checkpoint(const Checkpoint& ckpt, const std::filesystem::path& path);
Checkpoint load_checkpoint(const std::filesystem::path& path);

}  // namespace bqr
