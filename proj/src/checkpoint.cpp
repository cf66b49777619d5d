#include "fairtrain/checkpoint.hpp"

#include "fairtrain/config.hpp"

#include <array>
#include <cstring>
#include <fstream>

namespace fairtrain {

using nlohmann::json;

namespace {

constexpr char kAlphabet[] = "ABCDEFGHIJKLMNOPQRSTUVWXYZabcdefghijklmnopqrstuvwxyz0123456789+/";

int decode_char(char c) {
  if (c >= 'A' && c <= 'Z') return c - 'A';
  if (c >= 'a' && c <= 'z') return c - 'a' + 26;
  if (c >= '0' && c <= '9') return c - '0' + 52;
  if (c == '+') return 62;
  if (c == '/') return 63;
  return -1;
}

std::vector<double> vec(const Vector& v) { return std::vector<double>(v.data(), v.data() + v.size()); }

Vector from_list(const json& j, const char* what) {
  if (!j.is_array()) throw std::runtime_error(std::string("checkpoint field '") + what + "' must be an array");
  Vector v(static_cast<Index>(j.size()));
  for (std::size_t i = 0; i < j.size(); ++i) v(static_cast<Index>(i)) = j[i].get<double>();
  return v;
}

}  // namespace

std::string encode_f64_base64(const Vector& values) {
  std::vector<unsigned char> bytes;
  bytes.reserve(static_cast<std::size_t>(values.size()) * 8);
  for (Index i = 0; i < values.size(); ++i) {
    std::uint64_t bits;
    const double v = values(i);
    std::memcpy(&bits, &v, sizeof bits);
    for (int b = 0; b < 8; ++b) bytes.push_back(static_cast<unsigned char>(bits >> (8 * b)));
  }
  std::string out;
  out.reserve((bytes.size() + 2) / 3 * 4);
  for (std::size_t i = 0; i < bytes.size(); i += 3) {
    const std::size_t rest = std::min<std::size_t>(3, bytes.size() - i);
    std::uint32_t chunk = static_cast<std::uint32_t>(bytes[i]) << 16;
    if (rest > 1) chunk |= static_cast<std::uint32_t>(bytes[i + 1]) << 8;
    if (rest > 2) chunk |= bytes[i + 2];
    out += kAlphabet[(chunk >> 18) & 63];
    out += kAlphabet[(chunk >> 12) & 63];
    out += rest > 1 ? kAlphabet[(chunk >> 6) & 63] : '=';
    out += rest > 2 ? kAlphabet[chunk & 63] : '=';
  }
  return out;
}

Vector decode_f64_base64(const std::string& text) {
  if (text.size() % 4 != 0) throw std::runtime_error("base64 payload length is not a multiple of 4");
  std::vector<unsigned char> bytes;
  bytes.reserve(text.size() / 4 * 3);
  for (std::size_t i = 0; i < text.size(); i += 4) {
    std::array<int, 4> q{};
    int pad = 0;
    for (int k = 0; k < 4; ++k) {
      const char c = text[i + static_cast<std::size_t>(k)];
      if (c == '=' && i + 4 == text.size() && k >= 2) {
        q[static_cast<std::size_t>(k)] = 0;
        ++pad;
        continue;
      }
      if (pad > 0) throw std::runtime_error("misplaced base64 padding");
      q[static_cast<std::size_t>(k)] = decode_char(c);
      if (q[static_cast<std::size_t>(k)] < 0) throw std::runtime_error("invalid base64 character");
    }
    const std::uint32_t chunk = (static_cast<std::uint32_t>(q[0]) << 18) | (static_cast<std::uint32_t>(q[1]) << 12) |
                                (static_cast<std::uint32_t>(q[2]) << 6) | static_cast<std::uint32_t>(q[3]);
    bytes.push_back(static_cast<unsigned char>(chunk >> 16));
    if (pad < 2) bytes.push_back(static_cast<unsigned char>(chunk >> 8));
    if (pad < 1) bytes.push_back(static_cast<unsigned char>(chunk));
  }
  if (bytes.size() % 8 != 0) throw std::runtime_error("payload is not a whole number of 64-bit floats");
  Vector out(static_cast<Index>(bytes.size() / 8));
  for (Index i = 0; i < out.size(); ++i) {
    std::uint64_t bits = 0;
    for (int b = 0; b < 8; ++b) bits |= static_cast<std::uint64_t>(bytes[static_cast<std::size_t>(i) * 8 + b]) << (8 * b);
    double v;
    std::memcpy(&v, &bits, sizeof v);
    out(i) = v;
  }
  return out;
}

json to_json(const ModelCheckpoint& model) {
  json j = {{"format", "fairtrain-model"},
            {"version", 1},
            {"network",
             {{"input_dim", model.network.input_dim},
              {"hidden", model.network.hidden_dims},
              {"activation", to_string(model.network.activation)}}},
            {"parameters",
             {{"encoding", "base64-f64le"},
              {"count", model.parameters.size()},
              {"data", encode_f64_base64(model.parameters)}}}};
  if (model.schema) j["schema"] = to_json(*model.schema);
  if (model.scaler) j["scaler"] = {{"mean", vec(model.scaler->mean)}, {"std", vec(model.scaler->std)}};
  return j;
}

ModelCheckpoint checkpoint_from_json(const json& j) {
  if (!j.is_object() || j.value("format", "") != "fairtrain-model") throw std::runtime_error("not a fairtrain model file");
  ModelCheckpoint m;
  const auto& net = j.at("network");
  m.network.input_dim = net.at("input_dim").get<std::size_t>();
  m.network.hidden_dims = net.at("hidden").get<std::vector<std::size_t>>();
  m.network.activation = activation_from_string(net.at("activation").get<std::string>());
  m.network.validate();
  const auto& params = j.at("parameters");
  if (params.value("encoding", "") != "base64-f64le") throw std::runtime_error("unsupported parameter encoding");
  m.parameters = decode_f64_base64(params.at("data").get<std::string>());
  if (static_cast<std::size_t>(m.parameters.size()) != m.network.parameter_count() ||
      params.at("count").get<std::size_t>() != m.network.parameter_count()) {
    throw ShapeError("parameter payload does not match the network");
  }
  if (j.contains("schema")) m.schema = parse_schema(j.at("schema"), "/schema");
  if (j.contains("scaler")) {
    Scaler s;
    s.mean = from_list(j.at("scaler").at("mean"), "mean");
    s.std = from_list(j.at("scaler").at("std"), "std");
    if (static_cast<std::size_t>(s.mean.size()) != m.network.input_dim || s.std.size() != s.mean.size()) {
      throw ShapeError("scaler does not match the network input width");
    }
    m.scaler = s;
  }
  return m;
}

void save_checkpoint(const ModelCheckpoint& model, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write '" + path + "'");
  out << to_json(model).dump(2) << '\n';
}

ModelCheckpoint load_checkpoint(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open '" + path + "'");
  return checkpoint_from_json(json::parse(in));
}

}  // namespace fairtrain
