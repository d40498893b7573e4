#pragma once

#include <string>

#include "driftkill/dataset.hpp"
#include "driftkill/neuralnet.hpp"
#include "json.hpp"

namespace driftkill::io {

using Json = nlohmann::json;

/// Versioned network document: layer sizes, activation and the flat parameter
/// vector. Doubles are written in shortest round-trip form, so reading a
/// document back reproduces every parameter exactly.
Json to_json(const nn::DenseNet& net);
nn::DenseNet dense_net_from_json(const Json& doc);

Json to_json(const nn::TrainConfig& config);
nn::TrainConfig train_config_from_json(const Json& doc);

Json to_json(const dataset::ScalerParams& params);
dataset::ScalerParams scaler_from_json(const Json& doc);

/// Pretty-printed with a trailing newline; stable for identical inputs.
std::string dump(const Json& doc);
/// Throws Error(Format) with the parser's message.
Json parse(const std::string& text);

}  // namespace driftkill::io
