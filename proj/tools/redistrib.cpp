// redistrib: command-line front end for certifying, training and inspecting
// VCG redistribution mechanisms for the public project problem.

#include <CLI11.hpp>
#include <json.hpp>
#include <spdlog/sinks/stdout_color_sinks.h>
#include <spdlog/spdlog.h>

#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "redistrib/bounds.hpp"
#include "redistrib/certifier.hpp"
#include "redistrib/errors.hpp"
#include "redistrib/fixtures.hpp"
#include "redistrib/lottery.hpp"
#include "redistrib/mechanism_io.hpp"
#include "redistrib/trainer.hpp"

namespace fs = std::filesystem;
using json = nlohmann::ordered_json;
using namespace redistrib;

namespace {

constexpr const char* kVersion = "0.1.0";

constexpr int kExitOk = 0;
constexpr int kExitUsage = 1;
constexpr int kExitBudget = 2;

struct BudgetExhausted : std::runtime_error {
  using std::runtime_error::runtime_error;
};

std::string timestamp() {
  const auto now = std::chrono::system_clock::now();
  const std::time_t t = std::chrono::system_clock::to_time_t(now);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", std::gmtime(&t));
  return buf;
}

void write_text(const fs::path& path, const std::string& text) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream f(path, std::ios::binary);
  if (!f) throw std::runtime_error("cannot write " + path.string());
  f << text;
}

std::string read_text(const fs::path& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw std::runtime_error("cannot read " + path.string());
  std::ostringstream s;
  s << f.rdbuf();
  return s.str();
}

json profile_json(const TypeProfile& p) { return json(std::vector<double>(p.values().begin(), p.values().end())); }

std::string profile_cell(const TypeProfile& p) {
  std::string out;
  for (std::size_t i = 0; i < p.size(); ++i) {
    if (i) out += ';';
    out += format_real(p[i]);
  }
  return out;
}

std::string opt_cell(const std::optional<double>& v) { return v ? format_real(*v) : ""; }

json certificate_json(const Certificate& c) {
  json j;
  j["alpha_goal"] = c.alpha_goal;
  j["eps_left"] = c.eps_left;
  j["eps_right"] = c.eps_right;
  j["gap"] = c.gap();
  j["achieved_ratio"] = c.achieved_ratio();
  j["theta_left"] = profile_json(c.theta_left);
  j["theta_right"] = profile_json(c.theta_right);
  j["exact"] = c.exact;
  j["nodes_left"] = c.nodes_left;
  j["nodes_right"] = c.nodes_right;
  return j;
}

void emit(const json& j, const std::string& out_dir, const std::string& file) {
  const std::string text = j.dump(2) + "\n";
  if (!out_dir.empty()) write_text(fs::path(out_dir) / file, text);
  std::cout << text;
}

std::vector<std::size_t> parse_sizes(const std::string& text, const char* flag) {
  std::vector<std::size_t> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    std::size_t pos = 0;
    long long v = 0;
    try {
      v = std::stoll(item, &pos);
    } catch (const std::exception&) {
      pos = 0;
    }
    if (pos != item.size() || item.empty() || v <= 0)
      throw ContractError(std::string(flag) + ": expected comma-separated positive integers, got '" + text + "'");
    out.push_back(static_cast<std::size_t>(v));
  }
  if (out.empty()) throw ContractError(std::string(flag) + ": empty list");
  return out;
}

std::vector<double> parse_reals(const std::string& text, const char* flag) {
  std::vector<double> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    std::size_t pos = 0;
    double v = 0;
    try {
      v = std::stod(item, &pos);
    } catch (const std::exception&) {
      pos = 0;
    }
    if (pos != item.size() || item.empty())
      throw ContractError(std::string(flag) + ": expected comma-separated reals, got '" + text + "'");
    out.push_back(v);
  }
  return out;
}

void setup_logging() {
  auto logger = spdlog::stderr_color_mt("redistrib");
  spdlog::set_default_logger(logger);
  spdlog::set_pattern("[%H:%M:%S.%e] [%^%l%$] %v");
  const char* env = std::getenv("REDISTRIB_LOG");
  spdlog::set_level(env ? spdlog::level::from_str(env) : spdlog::level::warn);
}

// Written at start with status "running", rewritten on exit.
class Manifest {
 public:
  Manifest(std::string subcommand, std::vector<std::string> args, std::string out_dir)
      : out_dir_(std::move(out_dir)) {
    doc_["subcommand"] = std::move(subcommand);
    doc_["args"] = std::move(args);
    doc_["versions"] = {{"redistrib", kVersion},
                        {"compiler", __VERSION__},
                        {"nlohmann_json", std::to_string(NLOHMANN_JSON_VERSION_MAJOR) + "." +
                                              std::to_string(NLOHMANN_JSON_VERSION_MINOR) + "." +
                                              std::to_string(NLOHMANN_JSON_VERSION_PATCH)}};
    doc_["start"] = timestamp();
    doc_["end"] = nullptr;
    doc_["status"] = "running";
    doc_["outputs"] = json::array();
    save();
  }

  void set(const std::string& key, json value) { doc_[key] = std::move(value); }
  void output(const std::string& file) { doc_["outputs"].push_back(file); }

  void finish(int exit_code) {
    doc_["end"] = timestamp();
    doc_["status"] = exit_code == kExitOk ? "ok" : "failed";
    doc_["exit_code"] = exit_code;
    save();
  }

 private:
  void save() const {
    if (!out_dir_.empty()) write_text(fs::path(out_dir_) / "manifest.json", doc_.dump(2) + "\n");
  }

  std::string out_dir_;
  json doc_;
};

struct Options {
  std::string out;
  unsigned threads = 1;

  std::string mech, mech_b;
  double alpha = -1;
  std::size_t grid = 0;
  std::uint64_t node_budget = kDefaultNodeBudget;

  std::size_t n = 3;
  std::string hidden = "10";
  std::string large = "20,20";
  std::size_t ticket_size = 5;
  std::size_t draws = 3;
  std::size_t mip_rounds = 30;
  std::uint64_t seed = 1;
  std::string store = "persistent";

  std::string profile;
  std::string manifest;
};

CertifyOptions certify_options(const Options& o) {
  CertifyOptions c;
  c.threads = o.threads;
  c.node_budget = o.node_budget;
  return c;
}

int run_certify(const Options& o) {
  const Mechanism m = load_mechanism(o.mech);
  const double alpha = o.alpha >= 0 ? o.alpha : theoretical_upper_bound(m.n);
  spdlog::info("certifying {} (n={}, {} hidden nodes) at alpha={}", o.mech, m.n, m.net.hidden_node_count(), alpha);
  const Certificate c = certify(m, alpha, certify_options(o));
  json j = certificate_json(c);
  if (o.grid > 0) {
    const GridResult g = grid_oracle(m.effective_net(), m.n, alpha, o.grid);
    j["grid"] = {{"resolution", o.grid},     {"points", g.points},
                 {"left", g.left},           {"left_argmax", profile_json(g.left_argmax)},
                 {"right", g.right},         {"right_argmax", profile_json(g.right_argmax)}};
  }
  emit(j, o.out, "certificate.json");
  if (!c.exact) throw BudgetExhausted("branch-and-bound node budget exhausted");
  return kExitOk;
}

std::string history_csv(const std::vector<RoundRecord>& history) {
  std::ostringstream s;
  s << "round,training_rounds,alpha_goal,mean_loss,stall_count,eps_left,eps_right,achieved_ratio,exact,success,"
       "improved,theta_left,theta_right\n";
  for (const auto& r : history)
    s << r.round << ',' << r.training_rounds << ',' << format_real(r.alpha_goal) << ',' << format_real(r.mean_loss)
      << ',' << r.stall_count << ',' << format_real(r.eps_left) << ',' << format_real(r.eps_right) << ','
      << format_real(r.achieved_ratio) << ',' << r.exact << ',' << r.success << ',' << r.improved << ','
      << profile_cell(r.theta_left) << ',' << profile_cell(r.theta_right) << '\n';
  return s.str();
}

int run_train(const Options& o, Manifest* manifest) {
  const auto hidden = parse_sizes(o.hidden, "--hidden");
  TrainConfig cfg;
  cfg.mip_rounds = o.mip_rounds;
  cfg.seed = o.seed;
  cfg.certify = certify_options(o);
  const Mlp net = init_random(o.n - 1, hidden, o.seed);
  const GoalState goal = GoalState::starting_at(manual_lower_bound(o.n), theoretical_upper_bound(o.n));
  bool budget_hit = false;
  const WctResult r = wct_run(net, o.n, cfg, WcpStore{}, goal, [&](const RoundRecord& rec, const Mechanism&) {
    budget_hit = budget_hit || !rec.exact;
    spdlog::info("round {} goal={:.6f} eps_l={:.3e} eps_r={:.3e} ratio={:.6f}{}", rec.round, rec.alpha_goal,
                 rec.eps_left, rec.eps_right, rec.achieved_ratio, rec.success ? " success" : "");
  });
  json j;
  j["n"] = o.n;
  j["hidden"] = hidden;
  j["seed"] = o.seed;
  j["mip_rounds"] = o.mip_rounds;
  j["training_rounds"] = r.training_rounds;
  j["best_ratio"] = r.best_ratio ? json(*r.best_ratio) : json(nullptr);
  j["gap_to_upper"] = theoretical_upper_bound(o.n) - r.best_ratio.value_or(0.0);
  j["alpha_low"] = r.goal.alpha_low;
  j["alpha_goal"] = r.goal.alpha_goal;
  j["store_size"] = r.store.size();
  if (!o.out.empty()) {
    const fs::path dir(o.out);
    save_mechanism(dir / "best.json", r.best, "wct_best");
    save_mechanism(dir / "final_net.json", Mechanism(o.n, r.final_net), "wct_final_net");
    write_text(dir / "store.txt", r.store.to_text());
    write_text(dir / "history.csv", history_csv(r.history));
    for (const char* f : {"best.json", "final_net.json", "store.txt", "history.csv", "summary.json"})
      if (manifest) manifest->output(f);
  }
  emit(j, o.out, "summary.json");
  if (budget_hit) throw BudgetExhausted("a certification ran out of branch-and-bound nodes");
  return kExitOk;
}

int run_lottery(const Options& o, Manifest* manifest) {
  const auto large = parse_sizes(o.large, "--large");
  if (o.store != "persistent" && o.store != "fresh") throw ContractError("--store must be persistent or fresh");
  LotteryConfig cfg;
  cfg.train.mip_rounds = o.mip_rounds;
  cfg.train.certify = certify_options(o);
  cfg.persistent_store = o.store == "persistent";

  std::ostringstream draws_csv, rounds_csv;
  draws_csv << "draw,novel,ratio,running_best,gap,beat_previous,success,alpha_goal,shared_store_size,training_rounds\n";
  rounds_csv << "draw,round,training_rounds,alpha_goal,eps_left,eps_right,achieved_ratio,exact,success\n";
  std::size_t current_draw = 0;
  bool budget_hit = false;
  std::vector<Ticket> tickets;

  LotteryObserver obs;
  obs.on_ticket = [&](const Ticket& t) {
    current_draw = t.draw;
    spdlog::info("draw {}: ticket of {} nodes after {} rounds{}", t.draw, t.size(), t.training_rounds,
                 t.novel ? " (novel)" : "");
  };
  obs.on_round = [&](const RoundRecord& r, const Mechanism&) {
    budget_hit = budget_hit || !r.exact;
    rounds_csv << current_draw << ',' << r.round << ',' << r.training_rounds << ',' << format_real(r.alpha_goal) << ','
               << format_real(r.eps_left) << ',' << format_real(r.eps_right) << ',' << format_real(r.achieved_ratio)
               << ',' << r.exact << ',' << r.success << '\n';
  };
  obs.on_draw = [&](const DrawRecord& d) {
    spdlog::info("draw {}: ratio {} best {} goal {:.6f}", d.draw, opt_cell(d.ratio), opt_cell(d.running_best),
                 d.alpha_goal);
    draws_csv << d.draw << ',' << d.novel << ',' << opt_cell(d.ratio) << ',' << opt_cell(d.running_best) << ','
              << format_real(d.gap) << ',' << d.beat_previous << ',' << d.success << ',' << format_real(d.alpha_goal)
              << ',' << d.shared_store_size << ',' << d.training_rounds << '\n';
  };

  const LotteryResult r = lottery_run(o.n, large, o.ticket_size, o.draws, cfg, o.seed, obs);

  json j;
  j["n"] = o.n;
  j["large"] = large;
  j["ticket_size"] = o.ticket_size;
  j["draws"] = o.draws;
  j["seed"] = o.seed;
  j["mip_rounds"] = o.mip_rounds;
  j["store"] = o.store;
  j["best_ratio"] = r.best_ratio ? json(*r.best_ratio) : json(nullptr);
  j["gap_to_upper"] = theoretical_upper_bound(o.n) - r.best_ratio.value_or(0.0);
  j["manual_lower_bound"] = manual_lower_bound(o.n);
  std::size_t novel = 0;
  for (const auto& d : r.draws) novel += d.novel;
  j["novel_tickets"] = novel;
  j["shared_store_size"] = r.history.shared.size();
  if (!o.out.empty()) {
    const fs::path dir(o.out);
    save_mechanism(dir / "best.json", r.best, "lottery_best");
    write_text(dir / "draws.csv", draws_csv.str());
    write_text(dir / "rounds.csv", rounds_csv.str());
    write_text(dir / "store.txt", r.history.shared.to_text());
    std::vector<std::string> files{"best.json", "draws.csv", "rounds.csv", "store.txt", "summary.json"};
    for (const auto& t : r.history.tickets) {
      if (!t.scratched) continue;
      const std::string f = "ticket_" + std::to_string(t.draw) + ".json";
      save_mechanism(dir / f, t.best, "ticket_" + std::to_string(t.draw));
      files.push_back(f);
    }
    if (manifest)
      for (const auto& f : files) manifest->output(f);
  }
  emit(j, o.out, "summary.json");
  if (budget_hit) throw BudgetExhausted("a certification ran out of branch-and-bound nodes");
  return kExitOk;
}

int run_ensemble(const Options& o) {
  const Mechanism a = load_mechanism(o.mech);
  const Mechanism b = load_mechanism(o.mech_b);
  const Mechanism e = ensemble(a, b);
  const double alpha = o.alpha >= 0 ? o.alpha : theoretical_upper_bound(a.n);
  const CertifyOptions copt = certify_options(o);
  const Certificate ca = certify(a, alpha, copt), cb = certify(b, alpha, copt), ce = certify(e, alpha, copt);
  json j;
  j["alpha"] = alpha;
  j["a"] = certificate_json(ca);
  j["b"] = certificate_json(cb);
  j["ensemble"] = certificate_json(ce);
  if (!o.out.empty()) save_mechanism(fs::path(o.out) / "ensemble.json", e, "ensemble");
  emit(j, o.out, "ensemble_certificate.json");
  if (!ca.exact || !cb.exact || !ce.exact) throw BudgetExhausted("branch-and-bound node budget exhausted");
  return kExitOk;
}

int run_bounds(const Options& o) {
  const BoundResult b = compute_bounds(o.n);
  json j;
  j["n"] = b.n;
  j["alpha_upper"] = b.alpha_upper;
  j["alpha_lower_manual"] = b.alpha_lower_manual;
  j["h_values"] = b.h_values;
  json profiles = json::array();
  for (const auto& p : b.profiles) profiles.push_back(profile_json(p));
  j["profiles"] = profiles;
  emit(j, o.out, "bounds.json");
  return kExitOk;
}

int run_verify_known(const Options& o) {
  const double alpha = o.alpha >= 0 ? o.alpha : theoretical_upper_bound(o.n);
  const auto list = known_mechanisms(o.n);
  bool budget_hit = false;
  json rows = json::array();
  std::printf("%-22s %14s %14s %14s %6s %9s\n", "name", "eps_left", "eps_right", "gap", "exact", "seconds");
  for (const auto& k : list) {
    const auto t0 = std::chrono::steady_clock::now();
    const Certificate c = certify(k.mechanism, alpha, certify_options(o));
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    budget_hit = budget_hit || !c.exact;
    std::printf("%-22s %14.6e %14.6e %14.6e %6s %9.2f\n", k.name.c_str(), c.eps_left, c.eps_right, c.gap(),
                c.exact ? "yes" : "no", secs);
    json r = certificate_json(c);
    r["name"] = k.name;
    r["provenance"] = k.provenance;
    r["seconds"] = secs;
    rows.push_back(r);
  }
  std::fflush(stdout);
  if (!o.out.empty()) write_text(fs::path(o.out) / "verify_known.json", json{{"n", o.n}, {"alpha", alpha}, {"rows", rows}}.dump(2) + "\n");
  if (budget_hit) throw BudgetExhausted("branch-and-bound node budget exhausted");
  return kExitOk;
}

int run_demo(const Options& o) {
  const Mechanism m = load_mechanism(o.mech);
  const TypeProfile p(parse_reals(o.profile, "--profile"));
  const Payments pay = payments(m, p);
  double total = 0;
  for (double r : pay.received) total += r;
  json j;
  j["profile"] = profile_json(p);
  j["sum"] = p.sum();
  j["build"] = pay.built;
  j["received"] = pay.received;
  j["total_redistributed"] = total;
  j["first_best"] = s_value(p);
  const Violations v = violations(m, p, o.alpha >= 0 ? o.alpha : 0.0);
  j["non_deficit"] = v.left <= 0.0;
  emit(j, o.out, "demo.json");
  return kExitOk;
}

int run_export_known(const Options& o) {
  const fs::path dir = o.out.empty() ? fs::path("data/mechanisms") : fs::path(o.out);
  json files = json::array();
  for (std::size_t n : {3, 4, 5})
    for (const auto& k : known_mechanisms(n)) {
      const std::string f = "n" + std::to_string(n) + "_" + k.name + ".json";
      save_mechanism(dir / f, k.mechanism, k.name);
      files.push_back(f);
    }
  std::cout << json{{"directory", dir.string()}, {"files", files}}.dump(2) << "\n";
  return kExitOk;
}

int dispatch(std::vector<std::string> args);

int run_replay(const Options& o) {
  const json m = json::parse(read_text(o.manifest));
  std::vector<std::string> args = m.at("args").get<std::vector<std::string>>();
  const fs::path out = o.out.empty() ? fs::path(o.manifest).parent_path() / "replay" : fs::path(o.out);
  // Point the replayed run at the new output directory.
  bool replaced = false;
  for (std::size_t i = 0; i + 1 < args.size(); ++i)
    if (args[i] == "--out") {
      args[i + 1] = out.string();
      replaced = true;
    }
  if (!replaced) {
    args.push_back("--out");
    args.push_back(out.string());
  }
  spdlog::info("replaying '{}' into {}", m.at("subcommand").get<std::string>(), out.string());
  return dispatch(args);
}

int dispatch(std::vector<std::string> args) {
  CLI::App app{"Design and certify worst-case VCG redistribution mechanisms", "redistrib"};
  app.require_subcommand(1);
  app.set_version_flag("--version", kVersion);
  Options o;

  auto add_out = [&](CLI::App* s) { s->add_option("--out", o.out, "Output directory"); };
  auto add_threads = [&](CLI::App* s) {
    s->add_option("--threads", o.threads, "Certifier threads")->check(CLI::Range(1u, 256u));
    s->add_option("--node-budget", o.node_budget, "Branch-and-bound nodes per MIP")->check(CLI::PositiveNumber);
  };

  auto* certify_cmd = app.add_subcommand("certify", "Exact worst-case violations of a mechanism");
  certify_cmd->add_option("--mech", o.mech, "Mechanism JSON file")->required()->check(CLI::ExistingFile);
  certify_cmd->add_option("--alpha", o.alpha, "Goal ratio (default: upper bound for n)")->check(CLI::Range(0.0, 1.0));
  certify_cmd->add_option("--grid", o.grid, "Also scan a sorted grid with this many points per axis");
  add_threads(certify_cmd);
  add_out(certify_cmd);

  auto* train_cmd = app.add_subcommand("train", "Worst-case training of a fresh net");
  train_cmd->add_option("--n", o.n, "Agents")->check(CLI::Range(3, 64));
  train_cmd->add_option("--hidden", o.hidden, "Hidden layer sizes, e.g. 10 or 20,20");
  train_cmd->add_option("--seed", o.seed, "Seed");
  train_cmd->add_option("--mip-rounds", o.mip_rounds, "MIP rounds");
  add_threads(train_cmd);
  add_out(train_cmd);

  auto* lottery_cmd = app.add_subcommand("lottery", "Lottery worst-case training");
  lottery_cmd->add_option("--n", o.n, "Agents")->check(CLI::Range(3, 64));
  lottery_cmd->add_option("--large", o.large, "Large net hidden sizes");
  lottery_cmd->add_option("--ticket-size", o.ticket_size, "Hidden nodes in each ticket")->check(CLI::PositiveNumber);
  lottery_cmd->add_option("--draws", o.draws, "Tickets to draw")->check(CLI::PositiveNumber);
  lottery_cmd->add_option("--seed", o.seed, "Seed");
  lottery_cmd->add_option("--mip-rounds", o.mip_rounds, "MIP rounds per scratch")->default_val(100);
  lottery_cmd->add_option("--store", o.store, "Worst-case store across draws")->check(CLI::IsMember({"persistent", "fresh"}));
  add_threads(lottery_cmd);
  add_out(lottery_cmd);

  auto* ensemble_cmd = app.add_subcommand("ensemble", "Average two mechanisms and certify the result");
  ensemble_cmd->add_option("--a", o.mech, "First mechanism")->required()->check(CLI::ExistingFile);
  ensemble_cmd->add_option("--b", o.mech_b, "Second mechanism")->required()->check(CLI::ExistingFile);
  ensemble_cmd->add_option("--alpha", o.alpha, "Goal ratio (default: upper bound for n)")->check(CLI::Range(0.0, 1.0));
  add_threads(ensemble_cmd);
  add_out(ensemble_cmd);

  auto* bounds_cmd = app.add_subcommand("bounds", "Upper bound from the bound-profile LP and the manual lower bound");
  bounds_cmd->add_option("--n", o.n, "Agents")->required()->check(CLI::Range(3, 1000));
  add_out(bounds_cmd);

  auto* known_cmd = app.add_subcommand("verify-known", "Certify the published mechanisms for n agents");
  known_cmd->add_option("--n", o.n, "Agents (3, 4 or 5)")->required();
  known_cmd->add_option("--alpha", o.alpha, "Goal ratio (default: upper bound for n)")->check(CLI::Range(0.0, 1.0));
  add_threads(known_cmd);
  add_out(known_cmd);

  auto* demo_cmd = app.add_subcommand("demo", "Build decision and payments for one type profile");
  demo_cmd->add_option("--mech", o.mech, "Mechanism JSON file")->required()->check(CLI::ExistingFile);
  demo_cmd->add_option("--profile", o.profile, "Comma-separated valuations")->required();
  demo_cmd->add_option("--alpha", o.alpha, "Goal ratio for the violation check")->check(CLI::Range(0.0, 1.0));
  add_out(demo_cmd);

  auto* export_cmd = app.add_subcommand("export-known", "Write every published mechanism as a JSON file");
  add_out(export_cmd);

  auto* replay_cmd = app.add_subcommand("replay", "Re-run the command recorded in a manifest");
  replay_cmd->add_option("--manifest", o.manifest, "manifest.json of an earlier run")->required()->check(CLI::ExistingFile);
  add_out(replay_cmd);

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::Success& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    std::cerr << app.help();
    return kExitUsage;
  }

  CLI::App* cmd = app.get_subcommands().front();
  const std::string name = cmd->get_name();
  if (name == "replay") return run_replay(o);

  const bool manifested = !o.out.empty() && name != "export-known";
  std::unique_ptr<Manifest> manifest;
  if (manifested) {
    manifest = std::make_unique<Manifest>(name, args, o.out);
    manifest->set("seed", o.seed);
  }
  int code = kExitOk;
  try {
    if (name == "certify") code = run_certify(o);
    else if (name == "train") code = run_train(o, manifest.get());
    else if (name == "lottery") code = run_lottery(o, manifest.get());
    else if (name == "ensemble") code = run_ensemble(o);
    else if (name == "bounds") code = run_bounds(o);
    else if (name == "verify-known") code = run_verify_known(o);
    else if (name == "demo") code = run_demo(o);
    else if (name == "export-known") code = run_export_known(o);
  } catch (const BudgetExhausted& e) {
    spdlog::error("{}", e.what());
    std::cerr << "redistrib: " << e.what() << "\n";
    code = kExitBudget;
  } catch (...) {
    if (manifest) manifest->finish(kExitUsage);
    throw;
  }
  if (manifest) manifest->finish(code);
  return code;
}

}  // namespace

int main(int argc, char** argv) {
  setup_logging();
  std::vector<std::string> args(argv + 1, argv + argc);
  try {
    return dispatch(args);
  } catch (const ContractError& e) {
    std::cerr << "redistrib: " << e.what() << "\n";
  } catch (const ParseError& e) {
    std::cerr << "redistrib: parse error: " << e.what() << "\n";
  } catch (const NumericalError& e) {
    std::cerr << "redistrib: numerical error: " << e.what() << "\n";
  } catch (const std::exception& e) {
    std::cerr << "redistrib: " << e.what() << "\n";
  }
  return kExitUsage;
}
