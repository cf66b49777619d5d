#pragma once

#include "fairtrain/data.hpp"
#include "fairtrain/net.hpp"

#include <json.hpp>

#include <optional>
#include <string>
#include <vector>

namespace fairtrain {

/// Trained network plus what is needed to score raw CSV rows with it.
struct ModelCheckpoint {
  NetworkSpec network;
  Vector parameters;
  std::optional<CsvSchema> schema;
  std::optional<Scaler> scaler;
};

/// Base64 (RFC 4648, padded) of the little-endian IEEE-754 bytes of `values`.
std::string encode_f64_base64(const Vector& values);
Vector decode_f64_base64(const std::string& text);

nlohmann::json to_json(const ModelCheckpoint& model);
ModelCheckpoint checkpoint_from_json(const nlohmann::json& j);

void save_checkpoint(const ModelCheckpoint& model, const std::string& path);
ModelCheckpoint load_checkpoint(const std::string& path);

}  // namespace fairtrain
