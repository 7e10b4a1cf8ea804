#include "redistrib/mip.hpp"

#include <algorithm>
#include <cmath>
#include <memory>
#include <queue>
#include <string>

#include "redistrib/errors.hpp"

namespace redistrib {

namespace {

Interval affine_over_box(const Matrix& w, std::size_t row, double bias, const std::vector<Interval>& inputs) {
  Interval out{bias, bias};
  for (std::size_t c = 0; c < w.cols; ++c) {
    const double coef = w(row, c);
    if (coef >= 0.0) {
      out.lower += coef * inputs[c].lower;
      out.upper += coef * inputs[c].upper;
    } else {
      out.lower += coef * inputs[c].upper;
      out.upper += coef * inputs[c].lower;
    }
  }
  return out;
}

std::vector<Interval> relu_of(const std::vector<Interval>& pre) {
  std::vector<Interval> post;
  post.reserve(pre.size());
  for (const Interval& iv : pre) post.push_back({std::max(0.0, iv.lower), std::max(0.0, iv.upper)});
  return post;
}

std::vector<std::vector<Interval>> propagate(const Mlp& net, std::vector<Interval> first_layer) {
  std::vector<std::vector<Interval>> bounds;
  bounds.push_back(std::move(first_layer));
  for (std::size_t l = 1; l < net.hidden_layer_count(); ++l) {
    const std::vector<Interval> inputs = relu_of(bounds.back());
    std::vector<Interval> layer;
    for (std::size_t k = 0; k < net.hidden_sizes()[l]; ++k)
      layer.push_back(affine_over_box(net.weights(l), k, net.biases(l)[k], inputs));
    bounds.push_back(std::move(layer));
  }
  return bounds;
}

double sorted_theta_objective(const Mlp& net, std::size_t n, MipSide side, double alpha,
                              std::span<const double> theta) {
  double total = 0.0;
  for (double v : theta) total += v;
  const double s = std::max(total, 1.0);
  std::vector<double> others(n - 1);
  double sum_h = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t c = 0; c + 1 < n; ++c) others[c] = theta[c < i ? c : c + 1];
    sum_h += forward(net, others);
  }
  const double nn = static_cast<double>(n);
  return side == MipSide::left ? (nn - 1.0) * s - sum_h : sum_h - (nn - alpha) * s;
}

MipProblem build_mip(const Mlp& net, std::size_t n, MipSide side, double alpha, BigMRule rule) {
  net.validate();
  if (n < 2 || net.input_dim() != n - 1) throw ContractError("build_mip: net input_dim must equal n - 1");
  if (!(alpha >= 0.0 && alpha <= 1.0)) throw ContractError("build_mip: alpha must lie in [0,1]");
  if (net.hidden_layer_count() == 0) throw ContractError("build_mip: net needs at least one hidden layer");

  const auto bounds = rule == BigMRule::sorted ? sorted_activation_bounds(net) : activation_bounds(net);
  for (const auto& layer : bounds)
    for (const Interval& iv : layer)
      if (!std::isfinite(iv.lower) || !std::isfinite(iv.upper))
        throw SolverError("build_mip: non-finite big-M from interval propagation");

  MipProblem p;
  p.n = n;
  p.side = side;
  p.alpha = alpha;
  p.net = net;
  LinearProgram& lp = p.lp;
  const double sign = side == MipSide::left ? -1.0 : 1.0;  // coefficient of sum_i h in the objective
  const double nn = static_cast<double>(n);

  for (std::size_t i = 0; i < n; ++i) p.theta.push_back(lp.add_variable(0.0, 1.0));
  for (std::size_t i = 0; i + 1 < n; ++i)
    lp.add_constraint({{p.theta[i], 1.0}, {p.theta[i + 1], -1.0}}, Relation::less_equal, 0.0);

  const std::size_t out_layer = net.layer_count() - 1;
  lp.objective_constant += sign * nn * net.biases(out_layer)[0];

  for (std::size_t copy = 0; copy < n; ++copy) {
    std::vector<std::size_t> prev;
    for (std::size_t c = 0; c + 1 < n; ++c) prev.push_back(p.theta[c < copy ? c : c + 1]);
    const std::vector<std::size_t> inputs = prev;

    for (std::size_t l = 0; l < net.hidden_layer_count(); ++l) {
      const Matrix& w = net.weights(l);
      std::vector<std::size_t> current;
      for (std::size_t k = 0; k < w.rows; ++k) {
        const Interval iv = bounds[l][k];
        BigM m{copy, l, k, iv, std::max(0.0, iv.upper), std::max(0.0, -iv.lower)};
        const double bias = net.biases(l)[k];
        const std::size_t y = lp.add_variable(0.0, m.m_plus);
        const std::size_t a = lp.add_variable(0.0, 1.0);
        auto z_terms = [&](double y_coef) {
          std::vector<std::pair<std::size_t, double>> terms{{y, y_coef}};
          for (std::size_t c = 0; c < w.cols; ++c)
            if (w(k, c) != 0.0) terms.emplace_back(prev[c], -w(k, c));
          return terms;
        };
        if (iv.upper <= 0.0) {
          // Always inactive.
          lp.upper[y] = 0.0;
          lp.upper[a] = 0.0;
        } else if (iv.lower >= 0.0) {
          // Always active: y = z.
          lp.lower[a] = 1.0;
          lp.add_constraint(z_terms(1.0), Relation::equal, bias);
        } else {
          lp.add_constraint(z_terms(1.0), Relation::greater_equal, bias);  // y >= z
          auto upper_terms = z_terms(1.0);
          upper_terms.emplace_back(a, m.m_minus);
          lp.add_constraint(std::move(upper_terms), Relation::less_equal, m.m_minus + bias);  // y <= z + M-(1-a)
          lp.add_constraint({{y, 1.0}, {a, -m.m_plus}}, Relation::less_equal, 0.0);          // y <= M+ a
        }
        current.push_back(y);
        p.binaries.push_back(a);
        p.big_m.push_back(m);
      }
      prev = std::move(current);
    }
    const Matrix& w_out = net.weights(out_layer);
    for (std::size_t k = 0; k < w_out.cols; ++k) lp.objective[prev[k]] += sign * w_out(0, k);
    if (net.has_skip())
      for (std::size_t c = 0; c < inputs.size(); ++c) lp.objective[inputs[c]] += sign * net.skip()[c];
  }

  const double m_s = nn - 1.0;
  const double s_cost = side == MipSide::left ? nn - 1.0 : -(nn - alpha);
  p.s_var = lp.add_variable(1.0, nn, s_cost);
  p.s_binary = lp.add_variable(0.0, 1.0);
  std::vector<std::pair<std::size_t, double>> s_minus_sum{{p.s_var, 1.0}};
  for (std::size_t t : p.theta) s_minus_sum.emplace_back(t, -1.0);
  lp.add_constraint(s_minus_sum, Relation::greater_equal, 0.0);  // s >= sum theta
  auto with_b = s_minus_sum;
  with_b.emplace_back(p.s_binary, m_s);
  lp.add_constraint(std::move(with_b), Relation::less_equal, m_s);                        // s <= sum + M(1-b)
  lp.add_constraint({{p.s_var, 1.0}, {p.s_binary, -m_s}}, Relation::less_equal, 1.0);  // s <= 1 + M b
  p.binaries.push_back(p.s_binary);
  return p;
}

std::vector<double> sorted_clamped(std::span<const double> values) {
  std::vector<double> out(values.begin(), values.end());
  for (double& v : out) v = std::clamp(v, 0.0, 1.0);
  std::sort(out.begin(), out.end());
  return out;
}

}  // namespace

std::vector<std::vector<Interval>> activation_bounds(const Mlp& net) {
  net.validate();
  if (net.hidden_layer_count() == 0) return {};
  const std::vector<Interval> unit(net.input_dim(), Interval{0.0, 1.0});
  std::vector<Interval> first;
  for (std::size_t k = 0; k < net.hidden_sizes()[0]; ++k)
    first.push_back(affine_over_box(net.weights(0), k, net.biases(0)[k], unit));
  return propagate(net, std::move(first));
}

std::vector<std::vector<Interval>> sorted_activation_bounds(const Mlp& net) {
  net.validate();
  if (net.hidden_layer_count() == 0) return {};
  const Matrix& w = net.weights(0);
  std::vector<Interval> first;
  for (std::size_t k = 0; k < w.rows; ++k) {
    // Vertex j of the order polytope sets the last j coordinates to 1.
    double suffix = 0.0;
    Interval iv{0.0, 0.0};
    for (std::size_t j = 0; j <= w.cols; ++j) {
      if (j > 0) suffix += w(k, w.cols - j);
      iv.lower = j == 0 ? suffix : std::min(iv.lower, suffix);
      iv.upper = j == 0 ? suffix : std::max(iv.upper, suffix);
    }
    iv.lower += net.biases(0)[k];
    iv.upper += net.biases(0)[k];
    first.push_back(iv);
  }
  return propagate(net, std::move(first));
}

MipProblem build_left_mip(const Mlp& net, std::size_t n, BigMRule rule) {
  return build_mip(net, n, MipSide::left, 0.0, rule);
}

MipProblem build_right_mip(const Mlp& net, std::size_t n, double alpha, BigMRule rule) {
  return build_mip(net, n, MipSide::right, alpha, rule);
}

double mip_objective_at(const MipProblem& problem, std::span<const double> sorted_theta) {
  if (sorted_theta.size() != problem.n) throw ContractError("mip_objective_at: profile length must equal n");
  return sorted_theta_objective(problem.net, problem.n, problem.side, problem.alpha, sorted_theta);
}

namespace {

constexpr double kPruneTol = 1e-9;
constexpr double kIntegralityTol = 1e-6;

struct OpenNode {
  double bound;
  std::uint64_t order;
  std::vector<std::int8_t> fix;  // -1 free, else the fixed value
};

struct WorseBound {
  bool operator()(const OpenNode& a, const OpenNode& b) const {
    if (a.bound != b.bound) return a.bound < b.bound;
    return a.order > b.order;
  }
};

class NodeSolver {
 public:
  explicit NodeSolver(const MipProblem& p) : problem_(p) { reset(); }

  LpStatus solve(const std::vector<std::int8_t>& fix) {
    try {
      apply(fix);
      return first_ ? (first_ = false, engine_->solve_primal()) : engine_->solve_dual();
    } catch (const SolverError&) {
      // Numerical trouble on a warm start: rebuild and solve this node cold.
      reset();
      apply(fix);
      first_ = false;
      return engine_->solve_primal();
    }
  }

  SimplexEngine& engine() { return *engine_; }

 private:
  void reset() {
    engine_ = std::make_unique<SimplexEngine>(problem_.lp);
    first_ = true;
  }

  void apply(const std::vector<std::int8_t>& fix) {
    for (std::size_t k = 0; k < fix.size(); ++k) {
      const std::size_t var = problem_.binaries[k];
      const double lo = fix[k] < 0 ? problem_.lp.lower[var] : fix[k];
      const double hi = fix[k] < 0 ? problem_.lp.upper[var] : fix[k];
      if (engine_->lower(var) != lo || engine_->upper(var) != hi) engine_->set_bounds(var, lo, hi);
    }
  }

  const MipProblem& problem_;
  std::unique_ptr<SimplexEngine> engine_;
  bool first_ = true;
};

}  // namespace

MipResult solve_mip(const MipProblem& problem, std::uint64_t node_budget) {
  if (node_budget == 0) throw ContractError("solve_mip: node budget must be positive");
  const std::size_t nb = problem.binaries.size();
  for (std::size_t var : problem.binaries)
    if (var >= problem.lp.variable_count()) throw ContractError("solve_mip: binary index out of range");

  NodeSolver solver(problem);
  MipResult result;
  double incumbent = -kInfinity;
  std::priority_queue<OpenNode, std::vector<OpenNode>, WorseBound> open;
  std::uint64_t order = 0;

  auto offer = [&](std::vector<double> theta, double value, const std::vector<double>* x) {
    if (value > incumbent) {
      incumbent = value;
      result.theta = std::move(theta);
      if (x) result.x = *x;
    }
  };

  const bool has_net = problem.net.layer_count() > 0 && problem.n > 0 && problem.theta.size() == problem.n;
  std::vector<std::int8_t> fix(nb, -1);
  double current_bound = kInfinity;  // bound inherited from the parent of the node about to be solved
  bool have_node = true;
  bool exhausted = false;
  while (have_node) {
    if (result.nodes >= node_budget) {
      exhausted = true;
      break;
    }
    ++result.nodes;
    const LpStatus status = solver.solve(fix);
    bool branched = false;
    if (status == LpStatus::unbounded) throw SolverError("solve_mip: LP relaxation unbounded");
    if (status == LpStatus::optimal) {
      SimplexEngine& eng = solver.engine();
      const double bound = eng.objective();
      if (bound > incumbent + kPruneTol) {
        const std::vector<double> x = eng.primal();
        std::vector<double> theta_raw;
        for (std::size_t t : problem.theta) theta_raw.push_back(x[t]);
        std::vector<double> theta = sorted_clamped(theta_raw);

        std::size_t branch = nb;
        double best_score = kInfinity;
        for (std::size_t k = 0; k < nb; ++k) {
          if (fix[k] >= 0) continue;
          const double v = x[problem.binaries[k]];
          if (std::min(v, 1.0 - v) <= kIntegralityTol) continue;
          const double score = std::abs(v - 0.5);
          if (score < best_score - 1e-12) {
            best_score = score;
            branch = k;
          }
        }
        if (has_net) {
          const double value = mip_objective_at(problem, theta);
          offer(theta, value, branch == nb ? &x : nullptr);
        } else if (branch == nb) {
          offer(theta, bound, &x);
        }
        if (branch < nb && bound > incumbent + kPruneTol) {
          const double v = x[problem.binaries[branch]];
          const std::int8_t near = v >= 0.5 ? 1 : 0;
          std::vector<std::int8_t> far_fix = fix;
          far_fix[branch] = static_cast<std::int8_t>(1 - near);
          open.push(OpenNode{bound, order++, std::move(far_fix)});
          fix[branch] = near;
          current_bound = bound;
          branched = true;
        }
      }
    }
    if (branched) continue;
    have_node = false;
    while (!open.empty()) {
      OpenNode next = open.top();
      open.pop();
      if (next.bound <= incumbent + kPruneTol) {
        open = {};
        break;
      }
      fix = std::move(next.fix);
      current_bound = next.bound;
      have_node = true;
      break;
    }
  }

  if (!std::isfinite(incumbent)) {
    result.status = exhausted ? MipStatus::budget_exhausted : MipStatus::infeasible;
    return result;
  }
  result.optimum = incumbent;
  result.best_bound = incumbent;
  if (exhausted) {
    result.status = MipStatus::budget_exhausted;
    double best_open = std::max(incumbent, current_bound);
    while (!open.empty()) {
      best_open = std::max(best_open, open.top().bound);
      open.pop();
    }
    result.best_bound = std::max(best_open, incumbent);
  } else {
    result.status = MipStatus::optimal;
  }
  return result;
}

}  // namespace redistrib
