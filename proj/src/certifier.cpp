#include "redistrib/certifier.hpp"

#include <algorithm>
#include <cmath>
#include <future>

#include "redistrib/errors.hpp"

namespace redistrib {

namespace {

TypeProfile profile_of(const MipResult& r, std::size_t n) {
  if (r.theta.size() != n) return TypeProfile(std::vector<double>(n, 0.0));
  return TypeProfile(r.theta);
}

}  // namespace

Certificate certify(const Mlp& net, std::size_t n, double alpha_goal, const CertifyOptions& options) {
  const MipProblem left = build_left_mip(net, n, options.big_m);
  const MipProblem right = build_right_mip(net, n, alpha_goal, options.big_m);

  MipResult left_result;
  MipResult right_result;
  if (options.threads > 1) {
    auto pending = std::async(std::launch::async, [&] { return solve_mip(right, options.node_budget); });
    left_result = solve_mip(left, options.node_budget);
    right_result = pending.get();
  } else {
    left_result = solve_mip(left, options.node_budget);
    right_result = solve_mip(right, options.node_budget);
  }
  if (left_result.status == MipStatus::infeasible || right_result.status == MipStatus::infeasible)
    throw SolverError("certify: worst-case MIP reported infeasible");

  Certificate cert;
  cert.alpha_goal = alpha_goal;
  cert.eps_left = std::max(0.0, left_result.optimum);
  cert.eps_right = std::max(0.0, right_result.optimum);
  cert.theta_left = profile_of(left_result, n);
  cert.theta_right = profile_of(right_result, n);
  cert.nodes_left = left_result.nodes;
  cert.nodes_right = right_result.nodes;
  cert.exact = left_result.exact() && right_result.exact();
  return cert;
}

Certificate certify(const Mechanism& mech, double alpha_goal, const CertifyOptions& options) {
  return certify(mech.effective_net(), mech.n, alpha_goal, options);
}

std::uint64_t sorted_grid_size(std::size_t n, std::size_t resolution) {
  // C(resolution + n - 1, n), saturating.
  long double value = 1.0L;
  for (std::size_t k = 1; k <= n; ++k) value = value * static_cast<long double>(resolution - 1 + k) / k;
  if (value > 1e18L) return UINT64_MAX;
  return static_cast<std::uint64_t>(std::llround(static_cast<double>(value)));
}

GridResult grid_oracle(const Mlp& net, std::size_t n, double alpha, std::size_t resolution) {
  if (resolution < 2) throw ContractError("grid_oracle: resolution must be at least 2");
  if (n < 2 || net.input_dim() != n - 1) throw ContractError("grid_oracle: net input_dim must equal n - 1");
  if (sorted_grid_size(n, resolution) > kGridPointLimit)
    throw ContractError("grid_oracle: grid too large (more than 1e7 sorted profiles)");

  const double step = 1.0 / static_cast<double>(resolution - 1);
  const double nn = static_cast<double>(n);
  GridResult out;
  out.left = -kInfinity;
  out.right = -kInfinity;

  std::vector<std::size_t> idx(n, 0);
  std::vector<double> theta(n), others(n - 1);
  for (;;) {
    double total = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      theta[i] = idx[i] == resolution - 1 ? 1.0 : static_cast<double>(idx[i]) * step;
      total += theta[i];
    }
    const double s = std::max(total, 1.0);
    double sum_h = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      for (std::size_t c = 0; c + 1 < n; ++c) others[c] = theta[c < i ? c : c + 1];
      sum_h += forward(net, others);
    }
    const double left = (nn - 1.0) * s - sum_h;
    const double right = sum_h - (nn - alpha) * s;
    if (left > out.left) {
      out.left = left;
      out.left_argmax = TypeProfile(theta);
    }
    if (right > out.right) {
      out.right = right;
      out.right_argmax = TypeProfile(theta);
    }
    ++out.points;

    // Next non-decreasing index vector.
    std::size_t pos = n;
    while (pos > 0 && idx[pos - 1] == resolution - 1) --pos;
    if (pos == 0) break;
    const std::size_t v = idx[pos - 1] + 1;
    for (std::size_t i = pos - 1; i < n; ++i) idx[i] = v;
  }
  return out;
}

}  // namespace redistrib
