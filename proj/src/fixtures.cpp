#include "redistrib/fixtures.hpp"

#include <algorithm>
#include <cmath>

#include "redistrib/certifier.hpp"
#include "redistrib/errors.hpp"

namespace redistrib {

namespace {

struct ReluTerm {
  double out;                  // coefficient on ReLU(...)
  std::vector<double> weights;
  double bias;
};

/// sum_k out_k ReLU(w_k . x + b_k) + skip . x + constant, as a [terms.size()] net.
Mlp relu_sum(std::size_t input_dim, const std::vector<ReluTerm>& terms, std::vector<double> skip, double constant) {
  Mlp net(input_dim, {terms.size()});
  for (std::size_t k = 0; k < terms.size(); ++k) {
    for (std::size_t c = 0; c < input_dim; ++c) net.weights(0)(k, c) = terms[k].weights.at(c);
    net.biases(0)[k] = terms[k].bias;
    net.weights(1)(0, k) = terms[k].out;
  }
  net.biases(1)[0] = constant;
  if (!skip.empty()) {
    net.enable_skip();
    net.skip() = std::move(skip);
  }
  return net;
}

KnownMechanism make(std::string name, std::size_t n, Mlp net, std::string provenance) {
  return {std::move(name), n, Mechanism(n, std::move(net)), std::move(provenance)};
}

// Inputs (x, y) with x <= y. max{a, b} is written b + ReLU(a - b).
std::vector<KnownMechanism> three_agents() {
  constexpr double t = 1.0 / 3.0;
  std::vector<KnownMechanism> out;
  out.push_back(make("two_node_optimal", 3,
                     relu_sum(2, {{2 * t, {1, 1}, -1}, {1.0 / 6, {5, 3}, -2}}, {}, 2 * t),
                     "h = 2/3 ReLU(x+y-1) + 1/6 ReLU(5x+3y-2) + 2/3 (2-hidden-node mechanism found by lottery training)"));
  // 5/6 max{x+y,1} + 2/3 max{x+y,1/2} - 1/3 max{y,1/2} - 1/3
  out.push_back(make("naroditskiy_optimal", 3,
                     relu_sum(2, {{5.0 / 6, {1, 1}, -1}, {2 * t, {1, 1}, -0.5}, {-t, {0, 1}, -0.5}}, {},
                              5.0 / 6 + 2 * t * 0.5 - t * 0.5 - t),
                     "prior work: 5/6 max{x+y,1} + 2/3 max{x+y,1/2} - 1/3 max{y,1/2} - 1/3"));
  // max{x+y,2/3} + 1/2 max{x+y,1} - 1/2 max{y,2/3} - 1/6
  out.push_back(make("guo_optimal", 3,
                     relu_sum(2, {{1, {1, 1}, -2 * t}, {0.5, {1, 1}, -1}, {-0.5, {0, 1}, -2 * t}}, {},
                              2 * t + 0.5 - 0.5 * 2 * t - 1.0 / 6),
                     "prior work: max{x+y,2/3} + 1/2 max{x+y,1} - 1/2 max{y,2/3} - 1/6"));
  out.push_back(make("relu_optimal_a", 3,
                     relu_sum(2, {{0.5, {1, 1}, -2 * t}, {2 * t, {1, 1}, -1}}, {t, 0}, 2 * t),
                     "1/2 ReLU(x+y-2/3) + 2/3 ReLU(x+y-1) + x/3 + 2/3"));
  out.push_back(make("relu_optimal_b", 3,
                     relu_sum(2, {{0.5, {1, 1}, -2 * t}, {2 * t, {-1, -1}, 1}}, {1, 2 * t}, 0),
                     "1/2 ReLU(x+y-2/3) + 2/3 ReLU(1-x-y) + x + 2y/3"));
  out.push_back(make("relu_optimal_c", 3,
                     relu_sum(2, {{2 * t, {1, 1}, -1}, {1, {0.7, 0.5}, -t}}, {2.0 / 15, 0}, 2 * t),
                     "2/3 ReLU(x+y-1) + ReLU(7/10 x + 1/2 y - 1/3) + 2/15 x + 2/3"));
  out.push_back(make("relu_optimal_d", 3,
                     relu_sum(2, {{1, {-5.0 / 6, -0.5}, t}, {2 * t, {1, 1}, -1}}, {5.0 / 6, 0.5}, t),
                     "5/6 x + 1/2 y + ReLU(-5/6 x - 1/2 y + 1/3) + 2/3 ReLU(x+y-1) + 1/3"));
  out.push_back(make("relu_optimal_e", 3,
                     relu_sum(2, {{2 * t, {-1, -1}, 1}, {1, {-5.0 / 6, -0.5}, t}}, {1.5, 7.0 / 6}, -t),
                     "3/2 x + 7/6 y + 2/3 ReLU(1-x-y) + ReLU(-5/6 x - 1/2 y + 1/3) - 1/3"));
  out.push_back(make("relu_optimal_f", 3,
                     relu_sum(2, {{2 * t, {1, 1}, -1}, {1, {-0.5, -0.5}, t}}, {5.0 / 6, 0.5}, t),
                     "2/3 ReLU(x+y-1) + ReLU(-1/2 x - 1/2 y + 1/3) + 5/6 x + 1/2 y + 1/3"));
  return out;
}

// The affine tail a0..a2 has positive coefficients and a positive constant, so it
// is an always-active fifth hidden node with output weight 1.
std::vector<KnownMechanism> four_agents() {
  const std::vector<ReluTerm> terms = {
      {1, {-0.72198910, -0.59272164, -0.59252590}, 0.59262365},
      {1, {-0.44851873, -0.59390205, -0.38576084}, 0.38560897},
      {1, {0.19248982, 0.45704255, 0.44363350}, -0.22181663},
      {-1, {-0.48196214, -0.30973950, -0.09149375}, 0.36671883},
      {1, {0.91974893, 0.65584177, 0.66457125}, 0.22181873},
  };
  return {make("five_node_near_optimal", 4, relu_sum(3, terms, {}, 0.0),
               "printed 4-agent mechanism (5 hidden nodes, 8-decimal weights); goal 2/3")};
}

std::vector<KnownMechanism> five_agents() {
  const std::vector<ReluTerm> terms = {
      {1, {0.07415187, 0.07656296, -0.01386362, -0.02645663}, 0.04038201},
      {1, {-0.02817636, -0.02131834, 0.15407732, 0.10997507}, 0.0},
      {1, {-0.00030150, -0.19296961, -0.14009516, -0.13931695}, 0.21839742},
      {1, {0.09233555, 0.11879063, 0.22207867, 0.05774284}, -0.09739726},
      {1, {-0.02110755, -0.16953833, -0.08211072, -0.15426219}, 0.07712195},
      {-1, {-0.09167415, -0.16804517, 0.01678468, -0.37599716}, 0.12932928},
      {1, {0.06884780, 0.04966597, 0.05180322, 0.01322317}, -0.00402523},
      {1, {-0.06963717, -0.05677436, 0.09816764, -0.03466703}, -0.06411558},
      {1, {-0.45287389, -0.43648976, -0.43619680, -0.43692699}, 0.43656296},
      {1, {0.25219166, 0.41010812, 0.28310004, 0.23790778}, -0.23790598},
      {1, {-0.22243375, -0.15597281, -0.21871096, -0.13584307}, 0.12931196},
      {1, {-0.01024520, 0.09695699, 0.10965593, 0.11288858}, 0.06615839},
      {1, {0.30046332, 0.24649654, 0.24621379, 0.24596024}, -0.24610433},
      {-1, {-0.08688652, -0.07597235, -0.10597801, 0.04476466}, 0.03060341},
      {1, {0.36045450, 0.23456469, 0.14923730, 0.36828747}, -0.18414603},
      {1, {-0.00403373, 0.03397270, 0.09138362, 0.03633371}, 0.05691386},
      {-1, {0.79493202, 0.54317321, 0.42426067, 0.36043567}, -0.61394592},
  };
  return {make("near_optimal", 5,
               relu_sum(4, terms, {0.40339699, 0.48773447, 0.15870629, 0.27166277}, -0.00777263),
               "printed 5-agent mechanism (17 ReLU terms plus affine tail); stated gap 5.8159e-05 to 5/7")};
}

}  // namespace

std::vector<KnownMechanism> known_mechanisms(std::size_t n) {
  switch (n) {
    case 3: return three_agents();
    case 4: return four_agents();
    case 5: return five_agents();
    default: throw ContractError("known_mechanisms: only n = 3, 4, 5 have published mechanisms");
  }
}

std::vector<std::vector<double>> distinctness_check(const std::vector<KnownMechanism>& mechanisms,
                                                    std::size_t resolution) {
  if (mechanisms.empty()) return {};
  const std::size_t n = mechanisms.front().n;
  for (const auto& m : mechanisms)
    if (m.n != n) throw ContractError("distinctness_check: mechanisms must share n");
  if (resolution < 2) throw ContractError("distinctness_check: resolution must be at least 2");
  const std::size_t dim = n - 1;
  if (sorted_grid_size(dim, resolution) > kGridPointLimit)
    throw ContractError("distinctness_check: grid too large");

  const std::size_t count = mechanisms.size();
  std::vector<std::vector<double>> diff(count, std::vector<double>(count, 0.0));
  std::vector<std::size_t> idx(dim, 0);
  std::vector<double> x(dim), h(count);
  const double step = 1.0 / static_cast<double>(resolution - 1);
  for (;;) {
    for (std::size_t c = 0; c < dim; ++c) x[c] = idx[c] == resolution - 1 ? 1.0 : static_cast<double>(idx[c]) * step;
    for (std::size_t a = 0; a < count; ++a) h[a] = mechanisms[a].mechanism.groves(x);
    for (std::size_t a = 0; a < count; ++a)
      for (std::size_t b = a + 1; b < count; ++b) {
        const double d = std::abs(h[a] - h[b]);
        diff[a][b] = std::max(diff[a][b], d);
        diff[b][a] = diff[a][b];
      }
    std::size_t pos = dim;
    while (pos > 0 && idx[pos - 1] == resolution - 1) --pos;
    if (pos == 0) break;
    const std::size_t v = idx[pos - 1] + 1;
    for (std::size_t i = pos - 1; i < dim; ++i) idx[i] = v;
  }
  return diff;
}

}  // namespace redistrib
