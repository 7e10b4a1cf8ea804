#include "redistrib/mechanism_io.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "redistrib/errors.hpp"

namespace redistrib {

namespace {

using nlohmann::json;

void write_row(std::string& out, const double* values, std::size_t count) {
  out += '[';
  for (std::size_t i = 0; i < count; ++i) {
    if (i) out += ", ";
    out += format_real(values[i]);
  }
  out += ']';
}

std::string quote(std::string_view s) { return json(std::string(s)).dump(); }

double as_real(const json& node, const char* what) {
  if (!node.is_number()) throw ParseError(std::string("mechanism file: ") + what + " must be a number", 0);
  const double v = node.get<double>();
  if (!std::isfinite(v)) throw ParseError(std::string("mechanism file: ") + what + " must be finite", 0);
  return v;
}

std::vector<double> as_reals(const json& node, const char* what) {
  if (!node.is_array()) throw ParseError(std::string("mechanism file: ") + what + " must be an array", 0);
  std::vector<double> out;
  out.reserve(node.size());
  for (const json& v : node) out.push_back(as_real(v, what));
  return out;
}

const json& field(const json& doc, const char* key) {
  auto it = doc.find(key);
  if (it == doc.end()) throw ParseError(std::string("mechanism file: missing field '") + key + "'", 0);
  return *it;
}

json parse_document(std::string_view text) {
  try {
    json doc = json::parse(text.begin(), text.end());
    if (!doc.is_object()) throw ParseError("mechanism file: top level must be an object", 0);
    return doc;
  } catch (const json::parse_error& e) {
    throw ParseError(std::string("mechanism file: ") + e.what(), e.byte);
  }
}

}  // namespace

std::string format_real(double value) {
  if (value == 0.0) return "0";  // also folds -0
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", value);
  return buf;
}

std::string serialize(const Mechanism& mech, std::string_view name) {
  const Mlp& net = mech.net;
  std::string out = "{\n";
  if (!name.empty()) out += "  \"name\": " + quote(name) + ",\n";
  out += "  \"n\": " + std::to_string(mech.n) + ",\n";
  out += "  \"input_dim\": " + std::to_string(net.input_dim()) + ",\n";
  out += "  \"hidden_sizes\": [";
  for (std::size_t i = 0; i < net.hidden_sizes().size(); ++i) {
    if (i) out += ", ";
    out += std::to_string(net.hidden_sizes()[i]);
  }
  out += "],\n  \"weights\": [\n";
  for (std::size_t l = 0; l < net.layer_count(); ++l) {
    const Matrix& w = net.weights(l);
    out += "    [";
    for (std::size_t r = 0; r < w.rows; ++r) {
      if (r) out += ", ";
      write_row(out, &w.data[r * w.cols], w.cols);
    }
    out += l + 1 < net.layer_count() ? "],\n" : "]\n";
  }
  out += "  ],\n  \"biases\": [\n";
  for (std::size_t l = 0; l < net.layer_count(); ++l) {
    out += "    ";
    write_row(out, net.biases(l).data(), net.biases(l).size());
    out += l + 1 < net.layer_count() ? ",\n" : "\n";
  }
  out += "  ],\n";
  if (net.has_skip()) {
    out += "  \"skip_weights\": ";
    write_row(out, net.skip().data(), net.skip().size());
    out += ",\n";
  }
  out += "  \"shift\": " + format_real(mech.shift) + "\n}\n";
  return out;
}

std::string serialize(const Mlp& net) { return serialize(Mechanism(net.input_dim() + 1, net, 0.0)); }

Mechanism deserialize(std::string_view text) {
  const json doc = parse_document(text);
  const json& n_node = field(doc, "n");
  const json& dim_node = field(doc, "input_dim");
  if (!n_node.is_number_unsigned() || !dim_node.is_number_unsigned())
    throw ParseError("mechanism file: n and input_dim must be non-negative integers", 0);
  const auto n = n_node.get<std::size_t>();
  const auto input_dim = dim_node.get<std::size_t>();

  const json& sizes_node = field(doc, "hidden_sizes");
  if (!sizes_node.is_array()) throw ParseError("mechanism file: hidden_sizes must be an array", 0);
  std::vector<std::size_t> hidden;
  for (const json& s : sizes_node) {
    if (!s.is_number_unsigned() || s.get<std::size_t>() == 0)
      throw ParseError("mechanism file: hidden sizes must be positive integers", 0);
    hidden.push_back(s.get<std::size_t>());
  }

  Mlp net;
  try {
    net = Mlp(input_dim, hidden);
  } catch (const ContractError& e) {
    throw ParseError(std::string("mechanism file: ") + e.what(), 0);
  }

  const json& weights = field(doc, "weights");
  const json& biases = field(doc, "biases");
  if (!weights.is_array() || weights.size() != net.layer_count() || !biases.is_array() ||
      biases.size() != net.layer_count())
    throw ParseError("mechanism file: weights/biases must have one entry per layer", 0);
  for (std::size_t l = 0; l < net.layer_count(); ++l) {
    Matrix& w = net.weights(l);
    const json& rows = weights[l];
    if (!rows.is_array() || rows.size() != w.rows)
      throw ParseError("mechanism file: weight matrix " + std::to_string(l) + " has wrong row count", 0);
    for (std::size_t r = 0; r < w.rows; ++r) {
      std::vector<double> row = as_reals(rows[r], "weight");
      if (row.size() != w.cols)
        throw ParseError("mechanism file: weight matrix " + std::to_string(l) + " has wrong column count", 0);
      std::copy(row.begin(), row.end(), w.data.begin() + static_cast<std::ptrdiff_t>(r * w.cols));
    }
    std::vector<double> b = as_reals(biases[l], "bias");
    if (b.size() != w.rows) throw ParseError("mechanism file: bias vector " + std::to_string(l) + " has wrong length", 0);
    net.biases(l) = std::move(b);
  }
  if (auto it = doc.find("skip_weights"); it != doc.end()) {
    std::vector<double> skip = as_reals(*it, "skip weight");
    if (skip.size() != input_dim) throw ParseError("mechanism file: skip_weights must have input_dim entries", 0);
    net.enable_skip();
    net.skip() = std::move(skip);
  }
  const double shift = as_real(field(doc, "shift"), "shift");
  try {
    return Mechanism(n, std::move(net), shift);
  } catch (const ContractError& e) {
    throw ParseError(std::string("mechanism file: ") + e.what(), 0);
  }
}

std::string mechanism_name(std::string_view text) {
  const json doc = parse_document(text);
  auto it = doc.find("name");
  return it != doc.end() && it->is_string() ? it->get<std::string>() : std::string{};
}

Mechanism load_mechanism(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ParseError("cannot open mechanism file " + path.string(), 0);
  std::ostringstream buf;
  buf << in.rdbuf();
  return deserialize(buf.str());
}

void save_mechanism(const std::filesystem::path& path, const Mechanism& mech, std::string_view name) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << serialize(mech, name);
}

}  // namespace redistrib
