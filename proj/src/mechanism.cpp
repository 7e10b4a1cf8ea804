#include "redistrib/mechanism.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <numeric>

#include "redistrib/errors.hpp"

namespace redistrib {

TypeProfile::TypeProfile(std::vector<double> values) : values_(std::move(values)) {
  for (double v : values_)
    if (!(v >= 0.0 && v <= 1.0)) throw ContractError("TypeProfile: valuation outside [0,1]");
  std::sort(values_.begin(), values_.end());
}

double TypeProfile::sum() const noexcept { return std::accumulate(values_.begin(), values_.end(), 0.0); }

std::vector<double> TypeProfile::without(std::size_t i) const {
  if (i >= values_.size()) throw ContractError("TypeProfile::without: index out of range");
  std::vector<double> rest;
  rest.reserve(values_.size() - 1);
  for (std::size_t j = 0; j < values_.size(); ++j)
    if (j != i) rest.push_back(values_[j]);
  return rest;
}

std::string TypeProfile::to_text() const {
  std::string out;
  char buf[32];
  for (std::size_t i = 0; i < values_.size(); ++i) {
    if (i) out += ',';
    std::snprintf(buf, sizeof buf, "%.17g", values_[i]);
    out += buf;
  }
  return out;
}

TypeProfile TypeProfile::from_text(const std::string& text) {
  std::vector<double> values;
  std::size_t pos = 0;
  while (pos <= text.size()) {
    std::size_t end = text.find(',', pos);
    if (end == std::string::npos) end = text.size();
    std::size_t first = pos;
    while (first < end && (text[first] == ' ' || text[first] == '\t')) ++first;
    std::size_t last = end;
    while (last > first && (text[last - 1] == ' ' || text[last - 1] == '\t' || text[last - 1] == '\r')) --last;
    double value = 0.0;
    auto [ptr, ec] = std::from_chars(text.data() + first, text.data() + last, value);
    if (ec != std::errc() || ptr != text.data() + last || first == last)
      throw ParseError("TypeProfile: malformed number", first);
    values.push_back(value);
    pos = end + 1;
  }
  try {
    return TypeProfile(std::move(values));
  } catch (const ContractError& e) {
    throw ParseError(e.what(), 0);
  }
}

Mechanism::Mechanism(std::size_t agents, Mlp groves, double shift_amount)
    : n(agents), net(std::move(groves)), shift(shift_amount) {
  if (n < 2 || net.input_dim() != n - 1) throw ContractError("Mechanism: net input_dim must equal n - 1");
  if (!std::isfinite(shift)) throw ContractError("Mechanism: shift must be finite");
}

Mlp Mechanism::effective_net() const {
  Mlp folded = net;
  folded.biases(folded.layer_count() - 1)[0] += shift;
  return folded;
}

double s_value(const TypeProfile& profile) { return std::max(profile.sum(), 1.0); }

double sum_h(const Mechanism& mech, const TypeProfile& profile) {
  if (profile.size() != mech.n) throw ContractError("sum_h: profile length must equal n");
  double total = 0.0;
  for (std::size_t i = 0; i < mech.n; ++i) total += mech.groves(profile.without(i));
  return total;
}

Margins margins(const Mechanism& mech, const TypeProfile& profile, double alpha) {
  const double s = s_value(profile);
  const double h = sum_h(mech, profile);
  const double n = static_cast<double>(mech.n);
  return {(n - 1.0) * s - h, h - (n - alpha) * s};
}

Violations violations(const Mechanism& mech, const TypeProfile& profile, double alpha) {
  if (!(alpha >= 0.0 && alpha <= 1.0)) throw ContractError("violations: alpha must lie in [0,1]");
  const Margins m = margins(mech, profile, alpha);
  return {std::max(0.0, m.left), std::max(0.0, m.right)};
}

Payments payments(const Mechanism& mech, const TypeProfile& profile) {
  if (profile.size() != mech.n) throw ContractError("payments: profile length must equal n");
  Payments out;
  const double total = profile.sum();
  out.built = total >= 1.0;
  const double n = static_cast<double>(mech.n);
  out.received.reserve(mech.n);
  for (std::size_t i = 0; i < mech.n; ++i) {
    const double h = mech.groves(profile.without(i));
    out.received.push_back(out.built ? (total - profile[i]) - h : (n - 1.0) / n - h);
  }
  return out;
}

Mechanism shift_to_feasible(const Mlp& net, double eps_left, std::size_t n) {
  if (!(eps_left >= 0.0) || !std::isfinite(eps_left)) throw ContractError("shift_to_feasible: eps_left must be >= 0");
  if (n == 0) throw ContractError("shift_to_feasible: n must be positive");
  return Mechanism(n, net, eps_left / static_cast<double>(n));
}

}  // namespace redistrib
