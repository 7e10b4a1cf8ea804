#pragma once

#include <filesystem>
#include <string>
#include <string_view>

#include "redistrib/mechanism.hpp"

namespace redistrib {

/// Mechanism file: a JSON document with fields n, input_dim, hidden_sizes,
/// weights (per layer, row-major nested arrays), biases, optional skip_weights,
/// optional name, and shift. Reals are written with 17 significant digits so
/// reading a file back reproduces every parameter bit for bit.
std::string serialize(const Mechanism& mech, std::string_view name = {});

/// A bare net is written as a mechanism with n = input_dim + 1 and shift 0.
std::string serialize(const Mlp& net);

/// Throws ParseError (with byte position where known) on malformed input.
Mechanism deserialize(std::string_view text);

/// The `name` field, or an empty string.
std::string mechanism_name(std::string_view text);

Mechanism load_mechanism(const std::filesystem::path& path);
void save_mechanism(const std::filesystem::path& path, const Mechanism& mech, std::string_view name = {});

/// %.17g formatting used by every text output of the library.
std::string format_real(double value);

}  // namespace redistrib
