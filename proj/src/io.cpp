#include "cse/io.hpp"

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <ostream>
#include <sstream>

#include "json.hpp"

namespace cse::io {

using nlohmann::json;

const char* kCsvHeader = "chi,equilibrium_id,player,type,history_path,action,probability,residual";

namespace {

std::pair<int, int> line_col(const std::string& text, size_t byte) {
  int line = 1, col = 1;
  for (size_t k = 0; k < byte && k < text.size(); ++k) {
    if (text[k] == '\n') {
      ++line;
      col = 1;
    } else {
      ++col;
    }
  }
  return {line, col};
}

json parse_json(const std::string& text) {
  try {
    return json::parse(text);
  } catch (const json::parse_error& e) {
    auto [line, col] = line_col(text, e.byte > 0 ? e.byte - 1 : 0);
    std::string what = e.what();
    auto cut = what.find("]: ");
    if (cut != std::string::npos) what = what.substr(cut + 3);
    throw SyntaxError(line, col, what);
  }
}

const json& need(const json& j, const char* key, const std::string& path) {
  if (!j.is_object()) throw SemanticError(path, "expected an object");
  auto it = j.find(key);
  if (it == j.end()) throw SemanticError(path + "." + key, "missing");
  return *it;
}

std::string need_string(const json& j, const std::string& path) {
  if (!j.is_string()) throw SemanticError(path, "expected a string");
  return j.get<std::string>();
}

double need_number(const json& j, const std::string& path) {
  if (!j.is_number()) throw SemanticError(path, "expected a number");
  return j.get<double>();
}

std::vector<std::string> string_list(const json& j, const std::string& path) {
  if (!j.is_array()) throw SemanticError(path, "expected an array of strings");
  std::vector<std::string> out;
  for (size_t k = 0; k < j.size(); ++k)
    out.push_back(need_string(j[k], path + "[" + std::to_string(k) + "]"));
  return out;
}

std::vector<std::vector<std::string>> path_list(const json& j, const std::string& path) {
  if (!j.is_array()) throw SemanticError(path, "expected an array of joint-action tuples");
  std::vector<std::vector<std::string>> out;
  for (size_t k = 0; k < j.size(); ++k)
    out.push_back(string_list(j[k], path + "[" + std::to_string(k) + "]"));
  return out;
}

json path_json(const std::vector<std::vector<std::string>>& path) {
  json out = json::array();
  for (const auto& tuple : path) out.push_back(tuple);
  return out;
}

}  // namespace

std::string format_probability(double p) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.12g", p);
  return buf;
}

GameSpec game_spec_from_text(const std::string& text) {
  json j = parse_json(text);
  GameSpec spec;
  spec.players = string_list(need(j, "players", "$"), "$.players");
  spec.stages = static_cast<int>(need_number(need(j, "stages", "$"), "$.stages"));

  const json& types = need(j, "types", "$");
  for (const auto& p : spec.players)
    spec.types.push_back(string_list(need(types, p.c_str(), "$.types"), "$.types." + p));

  const json& prior = need(j, "prior", "$");
  if (!prior.is_array()) throw SemanticError("$.prior", "expected an array");
  for (size_t k = 0; k < prior.size(); ++k) {
    std::string path = "$.prior[" + std::to_string(k) + "]";
    GameSpec::PriorEntry e;
    e.profile = string_list(need(prior[k], "profile", path), path + ".profile");
    e.weight = need_number(need(prior[k], "weight", path), path + ".weight");
    spec.prior.push_back(std::move(e));
  }

  const json& actions = need(j, "actions", "$");
  if (actions.contains("uniform")) {
    const json& u = actions["uniform"];
    for (const auto& p : spec.players)
      spec.uniform_actions.push_back(
          string_list(need(u, p.c_str(), "$.actions.uniform"), "$.actions.uniform." + p));
  } else if (actions.contains("per_history")) {
    const json& rows = actions["per_history"];
    if (!rows.is_array()) throw SemanticError("$.actions.per_history", "expected an array");
    for (size_t k = 0; k < rows.size(); ++k) {
      std::string path = "$.actions.per_history[" + std::to_string(k) + "]";
      GameSpec::ActionEntry e;
      e.history_path = path_list(need(rows[k], "history_path", path), path + ".history_path");
      e.player = need_string(need(rows[k], "player", path), path + ".player");
      e.labels = string_list(need(rows[k], "labels", path), path + ".labels");
      spec.per_history_actions.push_back(std::move(e));
    }
  } else {
    throw SemanticError("$.actions", "needs either 'uniform' or 'per_history'");
  }

  const json& payoffs = need(j, "payoffs", "$");
  if (!payoffs.is_array()) throw SemanticError("$.payoffs", "expected an array");
  for (size_t k = 0; k < payoffs.size(); ++k) {
    std::string path = "$.payoffs[" + std::to_string(k) + "]";
    GameSpec::PayoffEntry e;
    e.terminal_path = path_list(need(payoffs[k], "terminal_path", path), path + ".terminal_path");
    e.type_profile = string_list(need(payoffs[k], "type_profile", path), path + ".type_profile");
    const json& u = need(payoffs[k], "utilities", path);
    if (!u.is_array()) throw SemanticError(path + ".utilities", "expected an array");
    for (size_t i = 0; i < u.size(); ++i)
      e.utilities.push_back(need_number(u[i], path + ".utilities[" + std::to_string(i) + "]"));
    spec.payoffs.push_back(std::move(e));
  }
  return spec;
}

GamePtr parse_game_file(const std::string& text) {
  GameSpec spec = game_spec_from_text(text);
  try {
    return MultiStageGame::build(spec);
  } catch (const GameError& e) {
    // delegated validation failures carry the offending path in the message
    throw SemanticError("$", e.what());
  }
}

std::string serialize_game(const MultiStageGame& game) {
  const GameSpec& spec = game.spec();
  json j;
  j["players"] = spec.players;
  j["stages"] = spec.stages;
  json types = json::object();
  for (size_t i = 0; i < spec.players.size(); ++i) types[spec.players[i]] = spec.types[i];
  j["types"] = types;
  json prior = json::array();
  // raw weights exactly as specified; normalization happens on load
  for (const auto& e : spec.prior) {
    json r;
    r["profile"] = e.profile;
    r["weight"] = e.weight;
    prior.push_back(r);
  }
  j["prior"] = prior;
  json actions;
  if (!spec.uniform_actions.empty()) {
    json u = json::object();
    for (size_t i = 0; i < spec.players.size(); ++i)
      u[spec.players[i]] = spec.uniform_actions[i];
    actions["uniform"] = u;
  } else {
    json rows = json::array();
    for (const auto& e : spec.per_history_actions) {
      json r;
      r["history_path"] = path_json(e.history_path);
      r["player"] = e.player;
      r["labels"] = e.labels;
      rows.push_back(r);
    }
    actions["per_history"] = rows;
  }
  j["actions"] = actions;
  json payoffs = json::array();
  for (const auto& e : spec.payoffs) {
    json r;
    r["terminal_path"] = path_json(e.terminal_path);
    r["type_profile"] = e.type_profile;
    r["utilities"] = e.utilities;
    payoffs.push_back(r);
  }
  j["payoffs"] = payoffs;
  return j.dump(2) + "\n";
}

Assessment parse_assessment(const std::string& text, GamePtr game) {
  const MultiStageGame& g = *game;
  json j = parse_json(text);
  Assessment out;
  out.chi = need_number(need(j, "chi", "$"), "$.chi");
  if (out.chi < 0.0 || out.chi > 1.0) throw SemanticError("$.chi", "must lie in [0,1]");
  out.strategy = BehavioralStrategyProfile(game);

  auto player_index = [&](const std::string& name, const std::string& path) {
    for (int i = 0; i < g.num_players(); ++i)
      if (g.players()[i] == name) return i;
    throw SemanticError(path, "unknown player '" + name + "'");
  };
  auto type_index = [&](int i, const std::string& name, const std::string& path) {
    for (int t = 0; t < g.num_types(i); ++t)
      if (g.type_sets()[i][t] == name) return t;
    throw SemanticError(path, "unknown type '" + name + "'");
  };

  std::vector<char> have(g.cell_count(), 0);
  const json& strat = need(j, "strategy", "$");
  if (!strat.is_array()) throw SemanticError("$.strategy", "expected an array");
  for (size_t k = 0; k < strat.size(); ++k) {
    std::string path = "$.strategy[" + std::to_string(k) + "]";
    int i = player_index(need_string(need(strat[k], "player", path), path + ".player"), path);
    int t = type_index(i, need_string(need(strat[k], "type", path), path + ".type"), path);
    int h = g.find_history(path_list(need(strat[k], "history_path", path), path + ".history_path"));
    if (h < 0 || g.is_terminal(h)) throw SemanticError(path + ".history_path", "not a decision history");
    const json& probs = need(strat[k], "probs", path);
    auto row = out.strategy.at(i, t, h);
    double sum = 0.0;
    for (int a = 0; a < g.node(h).action_count[i]; ++a) {
      const std::string& label = g.node(h).actions[i][a];
      if (!probs.contains(label)) continue;
      row[a] = need_number(probs[label], path + ".probs." + label);
      sum += row[a];
    }
    if (std::abs(sum - 1.0) > kInputTol)
      throw SemanticError(path + ".probs", "probabilities must sum to 1");
    have[g.cell_index(i, t, h)] = 1;
  }
  // singleton cells default to the unique action; anything else must be given
  for (int h : g.nonterminal_nodes())
    for (int i = 0; i < g.num_players(); ++i)
      for (int t = 0; t < g.num_types(i); ++t) {
        if (have[g.cell_index(i, t, h)]) continue;
        auto row = out.strategy.at(i, t, h);
        if (row.size() == 1) {
          row[0] = 1.0;
          continue;
        }
        throw SemanticError("$.strategy", "missing entry for player " + g.players()[i] +
                                              " type " + g.type_sets()[i][t] + " at history '" +
                                              g.history_path(h) + "'");
      }

  // beliefs: propagate where pinned, then overlay the listed entries and
  // demand coverage of every remaining off-path cell
  out.beliefs = propagate_beliefs_lenient(g, out.strategy, out.chi);
  if (j.contains("beliefs")) {
    const json& rows = j["beliefs"];
    if (!rows.is_array()) throw SemanticError("$.beliefs", "expected an array");
    for (size_t k = 0; k < rows.size(); ++k) {
      std::string path = "$.beliefs[" + std::to_string(k) + "]";
      int i = player_index(need_string(need(rows[k], "player", path), path + ".player"), path);
      int t = type_index(i, need_string(need(rows[k], "type", path), path + ".type"), path);
      int h = g.find_history(path_list(need(rows[k], "history_path", path), path + ".history_path"));
      if (h < 0 || g.is_terminal(h))
        throw SemanticError(path + ".history_path", "not a decision history");
      const json& probs = need(rows[k], "probs", path);
      if (!probs.is_array()) throw SemanticError(path + ".probs", "expected an array");
      auto row = out.beliefs.at(i, t, h);
      std::fill(row.begin(), row.end(), 0.0);
      double sum = 0.0;
      for (size_t e = 0; e < probs.size(); ++e) {
        std::string epath = path + ".probs[" + std::to_string(e) + "]";
        auto labels = string_list(need(probs[e], "profile", epath), epath + ".profile");
        std::vector<int> opp;
        int pos = 0;
        for (int jp = 0; jp < g.num_players(); ++jp) {
          if (jp == i) continue;
          if (pos >= static_cast<int>(labels.size()))
            throw SemanticError(epath + ".profile", "arity mismatch");
          opp.push_back(type_index(jp, labels[pos++], epath));
        }
        // opponent profile index: player-major over j != i
        int op = 0;
        {
          int stride = 1;
          for (int jp = g.num_players() - 1, kk = static_cast<int>(opp.size()) - 1; jp >= 0; --jp) {
            if (jp == i) continue;
            op += opp[kk--] * stride;
            stride *= g.num_types(jp);
          }
        }
        double p = need_number(need(probs[e], "p", epath), epath + ".p");
        row[op] = p;
        sum += p;
      }
      if (std::abs(sum - 1.0) > kDerivedTol)
        throw SemanticError(path + ".probs", "belief must sum to 1");
      out.beliefs.set_derived(i, t, h, false);
    }
  }
  for (int h : g.nonterminal_nodes())
    for (int i = 0; i < g.num_players(); ++i)
      for (int t = 0; t < g.num_types(i); ++t) {
        auto row = out.beliefs.at(i, t, h);
        double sum = 0.0;
        for (double p : row) sum += p;
        if (std::abs(sum - 1.0) > kDerivedTol)
          throw SemanticError("$.beliefs", "no belief given for player " + g.players()[i] +
                                               " type " + g.type_sets()[i][t] +
                                               " at off-path history '" + g.history_path(h) + "'");
      }
  return out;
}

std::string serialize_assessment(const MultiStageGame& game, const Assessment& assessment) {
  json j;
  j["chi"] = assessment.chi;
  json strat = json::array();
  json beliefs = json::array();
  for (int h : game.nonterminal_nodes()) {
    // reconstruct the full-tuple path for addressing
    std::vector<std::vector<std::string>> path;
    int cur = h;
    while (game.node(cur).parent >= 0) {
      const HistoryNode& par = game.node(game.node(cur).parent);
      std::vector<std::string> tuple;
      for (int i = 0; i < game.num_players(); ++i)
        tuple.push_back(par.actions[i][(game.node(cur).incoming / par.stride[i]) %
                                       par.action_count[i]]);
      path.insert(path.begin(), tuple);
      cur = game.node(cur).parent;
    }
    for (int i = 0; i < game.num_players(); ++i)
      for (int t = 0; t < game.num_types(i); ++t) {
        {
          json e;
          e["player"] = game.players()[i];
          e["type"] = game.type_sets()[i][t];
          e["history_path"] = path_json(path);
          json probs = json::object();
          auto row = assessment.strategy.at(i, t, h);
          for (int a = 0; a < game.node(h).action_count[i]; ++a)
            probs[game.node(h).actions[i][a]] = row[a];
          e["probs"] = probs;
          strat.push_back(e);
        }
        {
          json e;
          e["player"] = game.players()[i];
          e["type"] = game.type_sets()[i][t];
          e["history_path"] = path_json(path);
          json probs = json::array();
          auto row = assessment.beliefs.at(i, t, h);
          for (int op = 0; op < game.num_opp_profiles(i); ++op) {
            json ent;
            json profile = json::array();
            int tp = game.compose(i, 0, op);
            for (int jp = 0; jp < game.num_players(); ++jp) {
              if (jp == i) continue;
              int tj = (tp / game.type_stride(jp)) % game.num_types(jp);
              profile.push_back(game.type_sets()[jp][tj]);
            }
            ent["profile"] = profile;
            ent["p"] = row[op];
            probs.push_back(ent);
          }
          e["probs"] = probs;
          e["derived"] = assessment.beliefs.is_derived(i, t, h);
          beliefs.push_back(e);
        }
      }
  }
  j["strategy"] = strat;
  j["beliefs"] = beliefs;
  return j.dump(2) + "\n";
}

std::vector<double> parse_grid(const std::string& spec) {
  double lo = 0, hi = 0, step = 0;
  if (std::sscanf(spec.c_str(), "%lf:%lf:%lf", &lo, &hi, &step) != 3 || step <= 0.0)
    throw SemanticError("$.grid", "expected lo:hi:step with positive step");
  if (lo < 0.0 || hi > 1.0 || lo > hi)
    throw SemanticError("$.grid", "grid must stay within [0,1]");
  std::vector<double> out;
  for (int k = 0;; ++k) {
    double x = lo + k * step;
    if (x > hi + 1e-12) break;
    out.push_back(std::min(x, 1.0));
  }
  if (out.empty()) throw SemanticError("$.grid", "empty grid");
  return out;
}

std::string RunManifest::to_json() const {
  json j;
  j["command"] = command;
  if (!game.empty()) j["game"] = game;
  if (!app.empty()) j["app"] = app;
  if (!params.empty()) {
    json p = json::object();
    for (const auto& [k, v] : params) p[k] = v;
    j["params"] = p;
  }
  j["chi"] = chi;
  if (!grid.empty()) j["grid"] = grid;
  j["seed"] = seed;
  j["out_dir"] = out_dir;
  if (!assessment_file.empty()) j["assessment_file"] = assessment_file;
  json s;
  s["damping"] = solver.damping;
  s["br_tolerance"] = solver.br_tolerance;
  s["fp_tolerance"] = solver.fp_tolerance;
  s["max_iters"] = solver.max_iters;
  s["restarts"] = solver.restarts;
  s["pure_enumeration_limit"] = solver.pure_enumeration_limit;
  s["belief_grid"] = solver.belief_grid;
  s["support_tol"] = solver.support_tol;
  if (!solver.epsilon_path.empty()) s["epsilon_path"] = solver.epsilon_path;
  j["solver"] = s;
  return j.dump(2) + "\n";
}

RunManifest RunManifest::from_json(const std::string& text) {
  json j = parse_json(text);
  RunManifest m;
  m.command = need_string(need(j, "command", "$"), "$.command");
  if (j.contains("game")) m.game = need_string(j["game"], "$.game");
  if (j.contains("app")) m.app = need_string(j["app"], "$.app");
  if (j.contains("params"))
    for (auto it = j["params"].begin(); it != j["params"].end(); ++it)
      m.params[it.key()] = need_number(it.value(), "$.params." + it.key());
  if (j.contains("chi")) m.chi = need_number(j["chi"], "$.chi");
  if (j.contains("grid")) {
    for (const auto& g : j["grid"]) m.grid.push_back(need_number(g, "$.grid[]"));
  }
  if (j.contains("seed")) m.seed = static_cast<std::uint64_t>(need_number(j["seed"], "$.seed"));
  if (j.contains("out_dir")) m.out_dir = need_string(j["out_dir"], "$.out_dir");
  if (j.contains("assessment_file"))
    m.assessment_file = need_string(j["assessment_file"], "$.assessment_file");
  if (j.contains("solver")) {
    const json& s = j["solver"];
    if (s.contains("damping")) m.solver.damping = need_number(s["damping"], "$.solver.damping");
    if (s.contains("br_tolerance"))
      m.solver.br_tolerance = need_number(s["br_tolerance"], "$.solver.br_tolerance");
    if (s.contains("fp_tolerance"))
      m.solver.fp_tolerance = need_number(s["fp_tolerance"], "$.solver.fp_tolerance");
    if (s.contains("max_iters"))
      m.solver.max_iters = static_cast<int>(need_number(s["max_iters"], "$.solver.max_iters"));
    if (s.contains("restarts"))
      m.solver.restarts = static_cast<int>(need_number(s["restarts"], "$.solver.restarts"));
    if (s.contains("pure_enumeration_limit"))
      m.solver.pure_enumeration_limit = static_cast<long>(
          need_number(s["pure_enumeration_limit"], "$.solver.pure_enumeration_limit"));
    if (s.contains("belief_grid"))
      m.solver.belief_grid = static_cast<int>(need_number(s["belief_grid"], "$.solver.belief_grid"));
    if (s.contains("support_tol"))
      m.solver.support_tol = need_number(s["support_tol"], "$.solver.support_tol");
    if (s.contains("epsilon_path"))
      for (const auto& e : s["epsilon_path"])
        m.solver.epsilon_path.push_back(need_number(e, "$.solver.epsilon_path[]"));
  }
  return m;
}

namespace {

double param_or(const std::map<std::string, double>& params, const std::string& key,
                double fallback) {
  auto it = params.find(key);
  return it == params.end() ? fallback : it->second;
}

}  // namespace

BuiltinGame make_builtin(const std::string& name,
                         const std::map<std::string, double>& params) {
  BuiltinGame out;
  if (name == "example1" || name == "bh3" || name == "bh4") {
    auto variant = name == "example1" ? apps::SignalingVariant::Example1
                   : name == "bh3"    ? apps::SignalingVariant::BH3
                                      : apps::SignalingVariant::BH4;
    out.game = apps::gen_signaling(variant);
    return out;
  }
  if (name == "centipede") {
    double alpha = param_or(params, "alpha", 0.05);
    out.game = apps::gen_centipede(alpha);
    GamePtr g = out.game;
    out.seeds = [g, alpha](double chi) {
      return apps::centipede_seed_profiles(g, alpha, chi);
    };
    return out;
  }
  if (name == "pgg") {
    int N = static_cast<int>(param_or(params, "N", 2));
    double K = param_or(params, "K", 1.5);
    int M = static_cast<int>(param_or(params, "M", 21));
    out.game = MultiStageGame::build(apps::pgg_discrete_spec(N, K, M));
    GamePtr g = out.game;
    out.seeds = [g, K, M](double chi) { return apps::pgg_seed_profiles(g, K, M, chi); };
    return out;
  }
  if (name == "voting") {
    apps::VotingParams p{param_or(params, "p1", 0.6), param_or(params, "p2", 0.3),
                         param_or(params, "p3", 0.1), param_or(params, "v", 0.7)};
    out.game = apps::gen_voting(p);
    out.mask = apps::voting_sincere_mask(out.game, p);
    GamePtr g = out.game;
    out.seeds = [g, p](double) {
      std::vector<BehavioralStrategyProfile> s;
      s.push_back(apps::voting_profile(g, p, false));
      s.push_back(apps::voting_profile(g, p, true));
      return s;
    };
    return out;
  }
  if (name == "dirty") {
    apps::DirtyFacesParams p{param_or(params, "p", 2.0 / 3.0),
                             static_cast<int>(param_or(params, "T", 5)),
                             param_or(params, "alpha", 0.25),
                             param_or(params, "delta", 0.8)};
    out.game = apps::gen_dirty_faces(p);
    GamePtr g = out.game;
    out.seeds = [g, p](double) { return apps::dirty_seed_profiles(g, p); };
    return out;
  }
  throw SemanticError("$.game", "unknown builtin '" + name + "'");
}

namespace {

struct LoadedGame {
  GamePtr game;
  SeedProvider seeds;
  SolveMask mask;
};

LoadedGame load_game(const RunManifest& m) {
  if (m.game.rfind("builtin:", 0) == 0) {
    BuiltinGame b = make_builtin(m.game.substr(8), m.params);
    return {b.game, b.seeds, b.mask};
  }
  std::string path = m.game;
  if (path.rfind("file:", 0) == 0) path = path.substr(5);
  std::ifstream in(path);
  if (!in) throw SemanticError("$.game", "cannot open game file '" + path + "'");
  std::stringstream ss;
  ss << in.rdbuf();
  return {parse_game_file(ss.str()), nullptr, SolveMask{}};
}

SolverConfig configure(const RunManifest& m, const LoadedGame& lg) {
  SolverConfig cfg = m.solver;
  cfg.seed = m.seed;
  cfg.mask = lg.mask;
  if (cfg.epsilon_path.empty()) cfg.epsilon_path = SolverConfig::default_epsilon_path();
  return cfg;
}

void write_file(const std::filesystem::path& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  out << content;
}

json equilibrium_json(const MultiStageGame& game, const EquilibriumRecord& rec) {
  json e;
  e["residual"] = rec.residual;
  e["origin"] = rec.origin;
  e["verdict"] = rec.verify.verdict();
  e["belief_error"] = rec.verify.belief_error;
  json rows = json::array();
  for (int h : game.nonterminal_nodes())
    for (int i = 0; i < game.num_players(); ++i)
      for (int t = 0; t < game.num_types(i); ++t) {
        auto row = rec.assessment.strategy.at(i, t, h);
        for (size_t a = 0; a < row.size(); ++a) {
          json r;
          r["player"] = game.players()[i];
          r["type"] = game.type_sets()[i][t];
          r["history"] = game.history_path(h);
          r["action"] = game.node(h).actions[i][a];
          r["p"] = row[a];
          rows.push_back(r);
        }
      }
  e["strategy"] = rows;
  json brows = json::array();
  for (int h : game.nonterminal_nodes())
    for (int i = 0; i < game.num_players(); ++i)
      for (int t = 0; t < game.num_types(i); ++t) {
        auto row = rec.assessment.beliefs.at(i, t, h);
        json r;
        r["player"] = game.players()[i];
        r["type"] = game.type_sets()[i][t];
        r["history"] = game.history_path(h);
        r["derived"] = rec.assessment.beliefs.is_derived(i, t, h);
        r["probs"] = std::vector<double>(row.begin(), row.end());
        brows.push_back(r);
      }
  e["beliefs"] = brows;
  return e;
}

json report_json(const MultiStageGame& game, double chi, const SolveReport& rep) {
  json j;
  j["chi"] = chi;
  j["pure_profiles_total"] = rep.pure_profiles_total;
  j["pure_enumeration_exhaustive"] = rep.pure_enumeration_exhaustive;
  j["candidates_rejected"] = rep.candidates_rejected;
  json eqs = json::array();
  for (const auto& rec : rep.equilibria) eqs.push_back(equilibrium_json(game, rec));
  j["equilibria"] = eqs;
  json traces = json::array();
  for (const auto& t : rep.epsilon_trace) {
    json tr;
    tr["seed"] = t.seed_kind;
    tr["accepted"] = t.accepted;
    if (!t.note.empty()) tr["note"] = t.note;
    json steps = json::array();
    for (const auto& s : t.steps) {
      json st;
      st["epsilon"] = s.epsilon;
      st["iterations"] = s.iterations;
      st["converged"] = s.converged;
      st["change"] = s.change;
      steps.push_back(st);
    }
    tr["steps"] = steps;
    traces.push_back(tr);
  }
  j["epsilon_trace"] = traces;
  return j;
}

}  // namespace

void write_equilibria_csv(std::ostream& os, const MultiStageGame& game, double chi,
                          const SolveReport& report) {
  for (size_t k = 0; k < report.equilibria.size(); ++k) {
    const auto& rec = report.equilibria[k];
    for (int h : game.nonterminal_nodes())
      for (int i = 0; i < game.num_players(); ++i)
        for (int t = 0; t < game.num_types(i); ++t) {
          auto row = rec.assessment.strategy.at(i, t, h);
          for (size_t a = 0; a < row.size(); ++a)
            os << format_probability(chi) << ",eq" << k << ',' << game.players()[i] << ','
               << game.type_sets()[i][t] << ',' << game.history_path(h) << ','
               << game.node(h).actions[i][a] << ',' << format_probability(row[a]) << ','
               << format_probability(rec.residual) << '\n';
        }
  }
}

int cmd_solve(const RunManifest& manifest, std::ostream& log) {
  if (manifest.chi < 0.0 || manifest.chi > 1.0)
    throw SemanticError("$.chi", "solve needs chi in [0,1]");
  LoadedGame lg = load_game(manifest);
  SolverConfig cfg = configure(manifest, lg);
  if (lg.seeds)
    for (auto& s : lg.seeds(manifest.chi)) cfg.extra_seeds.push_back(std::move(s));
  SolveReport rep = solve_cse(*lg.game, manifest.chi, cfg);

  std::filesystem::create_directories(manifest.out_dir);
  write_file(std::filesystem::path(manifest.out_dir) / "manifest.json", manifest.to_json());
  std::ostringstream csv;
  csv << kCsvHeader << '\n';
  write_equilibria_csv(csv, *lg.game, manifest.chi, rep);
  write_file(std::filesystem::path(manifest.out_dir) / "equilibria.csv", csv.str());
  write_file(std::filesystem::path(manifest.out_dir) / "report.json",
             report_json(*lg.game, manifest.chi, rep).dump(2) + "\n");
  log << "equilibria: " << rep.equilibria.size() << "\n";
  if (rep.equilibria.empty() && !rep.any_restart_converged) return 3;
  return 0;
}

int cmd_sweep(const RunManifest& manifest, std::ostream& log) {
  LoadedGame lg = load_game(manifest);
  SolverConfig cfg = configure(manifest, lg);
  if (manifest.grid.empty()) throw SemanticError("$.grid", "sweep needs a chi grid");
  auto points = chi_sweep(*lg.game, manifest.grid, cfg, lg.seeds);

  std::filesystem::create_directories(manifest.out_dir);
  write_file(std::filesystem::path(manifest.out_dir) / "manifest.json", manifest.to_json());
  std::ostringstream csv;
  csv << kCsvHeader << '\n';
  for (const auto& pt : points) write_equilibria_csv(csv, *lg.game, pt.chi, pt.report);
  write_file(std::filesystem::path(manifest.out_dir) / "sweep.csv", csv.str());

  // births/deaths: nearest-neighbor matching between consecutive grid points
  std::ostringstream bd;
  for (size_t k = 0; k < points.size(); ++k) {
    const auto& cur = points[k].report.equilibria;
    bd << "chi=" << format_probability(points[k].chi) << ": count=" << cur.size();
    if (k > 0) {
      const auto& prev = points[k - 1].report.equilibria;
      int born = 0, died = 0;
      for (const auto& c : cur) {
        double best = 1e9;
        for (const auto& p : prev)
          best = std::min(best, c.assessment.strategy.sup_distance(p.assessment.strategy));
        if (best > 0.05) ++born;
      }
      for (const auto& p : prev) {
        double best = 1e9;
        for (const auto& c : cur)
          best = std::min(best, c.assessment.strategy.sup_distance(p.assessment.strategy));
        if (best > 0.05) ++died;
      }
      if (born) bd << " born=" << born;
      if (died) bd << " died=" << died;
    }
    bd << '\n';
  }
  write_file(std::filesystem::path(manifest.out_dir) / "births_deaths.txt", bd.str());

  json jrep = json::array();
  for (const auto& pt : points) jrep.push_back(report_json(*lg.game, pt.chi, pt.report));
  write_file(std::filesystem::path(manifest.out_dir) / "report.json", jrep.dump(2) + "\n");

  bool any_conv = false, any_eq = false;
  for (const auto& pt : points) {
    any_conv = any_conv || pt.report.any_restart_converged;
    any_eq = any_eq || !pt.report.equilibria.empty();
  }
  log << "sweep points: " << points.size() << "\n";
  if (!any_eq && !any_conv) return 3;
  return 0;
}

int cmd_oracle(const RunManifest& manifest, std::ostream& log) {
  std::ostringstream csv;
  csv << kCsvHeader << '\n';
  auto row = [&](double chi, const std::string& player, const std::string& type,
                 const std::string& history, const std::string& quantity, double value) {
    csv << format_probability(chi) << ",oracle," << player << ',' << type << ',' << history
        << ',' << quantity << ',' << format_probability(value) << ",0\n";
  };
  const auto& P = manifest.params;
  std::vector<double> grid = manifest.grid;
  if (grid.empty()) {
    if (manifest.chi < 0.0) throw SemanticError("$.grid", "oracle needs a grid or chi");
    grid.push_back(manifest.chi);
  }
  if (manifest.app == "pgg") {
    int N = static_cast<int>(param_or(P, "N", 2));
    double K = param_or(P, "K", 1.5);
    for (double chi : grid) row(chi, "", "", "", "Cstar", apps::pgg_cutoff(N, K, chi));
  } else if (manifest.app == "centipede") {
    double alpha = param_or(P, "alpha", 0.05);
    for (double chi : grid) {
      auto o = apps::centipede_oracle(alpha, chi);
      row(chi, "p1", "selfish", "", "P1", o.q1);
      row(chi, "p2", "s", "P1", "P2", o.q2);
      row(chi, "p2", "s", "P1", "mu_altruistic", o.mu);
    }
  } else if (manifest.app == "voting") {
    apps::VotingParams p{param_or(P, "p1", 0.6), param_or(P, "p2", 0.3),
                         param_or(P, "p3", 0.1), param_or(P, "v", 0.7)};
    auto t = apps::voting_thresholds(p);
    row(0.0, "", "", "", "sophisticated_max_chi", t.sophisticated_max_chi);
    row(0.0, "", "", "", "chi_tilde", t.chi_tilde);
    row(0.0, "", "", "", "sincere_region_upper", t.sincere_region_upper ? 1.0 : 0.0);
    for (double chi : grid) {
      row(chi, "", "t1", "", "sophisticated_b",
          apps::voting_sophisticated_supported(p, chi) ? 1.0 : 0.0);
      row(chi, "", "t1", "", "sincere_a", apps::voting_sincere_supported(p, chi) ? 1.0 : 0.0);
    }
  } else if (manifest.app == "dirty") {
    apps::DirtyFacesParams p{param_or(P, "p", 2.0 / 3.0),
                             static_cast<int>(param_or(P, "T", 5)),
                             param_or(P, "alpha", 0.25), param_or(P, "delta", 0.8)};
    row(0.0, "", "", "", "alpha_bar", apps::dirty_alpha_bar(p));
    for (int t = 3; t <= p.T; ++t)
      row(0.0, "", "X", "", "t" + std::to_string(t) + "_lower", apps::dirty_lower_root(p, t));
    for (int t = 3; t <= p.T; ++t)
      row(0.0, "", "X", "", "t" + std::to_string(t) + "_upper",
          std::pow(apps::dirty_alpha_bar(p), 1.0 / (t - 1)));
    for (double chi : grid) {
      row(chi, "", "X", "", "ce_stop", apps::dirty_ce_stop(p, chi));
      auto set = apps::dirty_cse_stop_set(p, chi);
      for (int t = 2; t <= p.T + 1; ++t)
        row(chi, "", "X", "", "cse_stop_" + std::to_string(t),
            std::find(set.begin(), set.end(), t) != set.end() ? 1.0 : 0.0);
      row(chi, "", "X", "", "kappa", apps::dirty_kappa(p, chi));
    }
  } else if (manifest.app == "signaling" || manifest.app == "example1" ||
             manifest.app == "bh3" || manifest.app == "bh4") {
    auto variant = manifest.app == "bh3"   ? apps::SignalingVariant::BH3
                   : manifest.app == "bh4" ? apps::SignalingVariant::BH4
                                           : apps::SignalingVariant::Example1;
    for (double chi : grid)
      for (const auto& e : apps::classify_signaling_cse(variant, chi)) {
        row(chi, "sender", "", "", e.label, 1.0);
        if (e.has_offpath) {
          row(chi, "receiver", "", "", e.label + " belief_lo", e.belief_lo);
          row(chi, "receiver", "", "", e.label + " belief_hi", e.belief_hi);
        }
      }
  } else {
    throw SemanticError("$.app", "unknown application '" + manifest.app + "'");
  }
  std::filesystem::create_directories(manifest.out_dir);
  write_file(std::filesystem::path(manifest.out_dir) / "manifest.json", manifest.to_json());
  write_file(std::filesystem::path(manifest.out_dir) / "oracle.csv", csv.str());
  log << "oracle rows written\n";
  return 0;
}

int cmd_verify(const RunManifest& manifest, std::ostream& log) {
  LoadedGame lg = load_game(manifest);
  std::ifstream in(manifest.assessment_file);
  if (!in)
    throw SemanticError("$.assessment_file",
                        "cannot open '" + manifest.assessment_file + "'");
  std::stringstream ss;
  ss << in.rdbuf();
  Assessment asmt = parse_assessment(ss.str(), lg.game);
  if (manifest.chi >= 0.0) asmt.chi = manifest.chi;
  VerifyReport rep = verify_cse(*lg.game, asmt, 1e-8, lg.mask.empty() ? nullptr : &lg.mask);
  log << rep.verdict() << "\n";
  log << "residual=" << format_probability(rep.residual)
      << " belief_error=" << format_probability(rep.belief_error) << "\n";
  if (!rep.pass()) {
    if (!rep.dampened_violations.empty()) {
      const auto& v = rep.dampened_violations.front();
      log << "dampened-updating violation at history '" << lg.game->history_path(v.history)
          << "' (" << format_probability(v.value) << " < " << format_probability(v.bound)
          << ")\n";
    }
    if (rep.witness.player >= 0 && !rep.sequentially_rational)
      log << "profitable deviation for player " << lg.game->players()[rep.witness.player]
          << " at history '" << lg.game->history_path(rep.witness.history) << "' gain="
          << format_probability(rep.witness.gain) << "\n";
    return 1;
  }
  return 0;
}

int cmd_validate(const RunManifest& manifest, std::ostream& log) {
  LoadedGame lg = load_game(manifest);
  log << "players=" << lg.game->num_players() << " stages=" << lg.game->stages()
      << " type_profiles=" << lg.game->num_type_profiles()
      << " histories=" << lg.game->nodes().size()
      << " terminals=" << lg.game->num_terminals() << "\n";
  return 0;
}

int run_manifest(const RunManifest& manifest, std::ostream& log) {
  try {
    if (manifest.command == "solve") return cmd_solve(manifest, log);
    if (manifest.command == "sweep") return cmd_sweep(manifest, log);
    if (manifest.command == "oracle") return cmd_oracle(manifest, log);
    if (manifest.command == "verify") return cmd_verify(manifest, log);
    if (manifest.command == "validate") return cmd_validate(manifest, log);
    log << "unknown command '" << manifest.command << "'\n";
    return 2;
  } catch (const SyntaxError& e) {
    log << e.what() << "\n";
    return 2;
  } catch (const SemanticError& e) {
    log << e.what() << "\n";
    return 2;
  } catch (const GameError& e) {
    log << "error: " << e.what() << "\n";
    return 2;
  }
}

}  // namespace cse::io
