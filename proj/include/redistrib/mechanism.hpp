#pragma once

#include <cstddef>
#include <initializer_list>
#include <span>
#include <string>
#include <vector>

#include "redistrib/mlp.hpp"

namespace redistrib {

/// Agent valuations, each in [0,1], kept sorted ascending.
class TypeProfile {
 public:
  TypeProfile() = default;
  /// Sorts the values; throws ContractError on values outside [0,1] or NaN.
  explicit TypeProfile(std::vector<double> values);
  TypeProfile(std::initializer_list<double> values) : TypeProfile(std::vector<double>(values)) {}

  std::size_t size() const noexcept { return values_.size(); }
  double operator[](std::size_t i) const { return values_[i]; }
  std::span<const double> values() const noexcept { return values_; }
  double sum() const noexcept;

  /// The other agents' sorted valuations when agent `i` is removed.
  std::vector<double> without(std::size_t i) const;

  /// Comma-separated decimals, 17 significant digits.
  std::string to_text() const;
  static TypeProfile from_text(const std::string& text);

  friend bool operator==(const TypeProfile&, const TypeProfile&) = default;

 private:
  std::vector<double> values_;
};

/// Groves term h'(x) = net(x) + shift for n agents.
struct Mechanism {
  std::size_t n = 0;
  Mlp net;
  double shift = 0.0;

  Mechanism() = default;
  Mechanism(std::size_t agents, Mlp groves, double shift_amount = 0.0);

  double groves(std::span<const double> others) const { return forward(net, others) + shift; }

  /// The same function as a bare net: the shift folded into the output bias.
  Mlp effective_net() const;

  friend bool operator==(const Mechanism&, const Mechanism&) = default;
};

struct Violations {
  double left = 0.0;   // non-deficit
  double right = 0.0;  // efficiency-ratio goal
};

/// Signed left/right slacks of the mechanism inequality; positive means violated.
struct Margins {
  double left = 0.0;
  double right = 0.0;
};

struct Payments {
  bool built = false;
  std::vector<double> received;  // per agent, in profile order
};

/// max(sum of valuations, 1): the first-best total utility.
double s_value(const TypeProfile& profile);

double sum_h(const Mechanism& mech, const TypeProfile& profile);

Margins margins(const Mechanism& mech, const TypeProfile& profile, double alpha);
Violations violations(const Mechanism& mech, const TypeProfile& profile, double alpha);

Payments payments(const Mechanism& mech, const TypeProfile& profile);

/// Adds eps_left / n to h so that the non-deficit side holds everywhere.
Mechanism shift_to_feasible(const Mlp& net, double eps_left, std::size_t n);

}  // namespace redistrib
