// Command-line front end: solve | sweep | oracle | verify | validate.
//
// Games come from a JSON file or a builtin generator (builtin:example1,
// builtin:bh3, builtin:bh4, builtin:centipede, builtin:pgg, builtin:voting,
// builtin:dirty) with parameters passed as flags. Every run writes its
// manifest next to the outputs so it can be replayed byte-identically with
// --manifest.
//
// Exit codes: 0 ok, 1 verification failure, 2 input error, 3 solver
// non-convergence.

#include <fstream>
#include <iostream>
#include <sstream>

#include "CLI11.hpp"
#include "cse/io.hpp"

namespace {

struct CommonFlags {
  std::string game;
  std::string config_file;
  std::string out_dir = "out";
  std::string grid;
  double chi = -1.0;
  std::uint64_t seed = 1;
  double alpha = -1, K = -1, v = -1, p = -1, delta = -1;
  double p1 = -1, p2 = -1, p3 = -1;
  int N = -1, M = -1, T = -1;
};

void add_common(CLI::App* cmd, CommonFlags& f) {
  cmd->add_option("--game", f.game, "game file or builtin:NAME");
  cmd->add_option("--chi", f.chi, "cursedness in [0,1]");
  cmd->add_option("--grid", f.grid, "chi grid lo:hi:step");
  cmd->add_option("--seed", f.seed, "rng seed recorded in the manifest");
  cmd->add_option("--config", f.config_file, "solver config JSON (manifest 'solver' block)");
  cmd->add_option("--out", f.out_dir, "output directory");
  cmd->add_option("--alpha", f.alpha, "centipede altruist probability / dirty-faces reward");
  cmd->add_option("--K", f.K, "public-goods cost bound");
  cmd->add_option("--N", f.N, "public-goods player count");
  cmd->add_option("--M", f.M, "public-goods cost grid size");
  cmd->add_option("--p1", f.p1, "voting type-1 probability");
  cmd->add_option("--p2", f.p2, "voting type-2 probability");
  cmd->add_option("--p3", f.p3, "voting type-3 probability");
  cmd->add_option("--v", f.v, "voting second-choice intensity");
  cmd->add_option("--p", f.p, "dirty-faces dirty probability");
  cmd->add_option("--T", f.T, "dirty-faces horizon");
  cmd->add_option("--delta", f.delta, "dirty-faces discount factor");
}

cse::io::RunManifest to_manifest(const std::string& command, const CommonFlags& f) {
  cse::io::RunManifest m;
  m.command = command;
  m.game = f.game;
  m.chi = f.chi;
  m.seed = f.seed;
  m.out_dir = f.out_dir;
  if (!f.grid.empty()) m.grid = cse::io::parse_grid(f.grid);
  auto set = [&](const char* k, double x) {
    if (x >= 0) m.params[k] = x;
  };
  set("alpha", f.alpha);
  set("K", f.K);
  set("N", f.N);
  set("M", f.M);
  set("p1", f.p1);
  set("p2", f.p2);
  set("p3", f.p3);
  set("v", f.v);
  set("p", f.p);
  set("T", f.T);
  set("delta", f.delta);
  if (!f.config_file.empty()) {
    std::ifstream in(f.config_file);
    if (!in) throw cse::io::SemanticError("$.config", "cannot open " + f.config_file);
    std::stringstream ss;
    ss << in.rdbuf();
    // a config file is a manifest fragment: reuse the parser
    auto partial = cse::io::RunManifest::from_json(
        "{\"command\":\"solve\",\"solver\":" + ss.str() + "}");
    m.solver = partial.solver;
  }
  return m;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"cursed sequential equilibrium toolkit"};
  app.require_subcommand(0, 1);

  std::string manifest_file;
  app.add_option("--manifest", manifest_file, "replay a recorded manifest");

  CommonFlags solve_f, sweep_f, oracle_f, verify_f, validate_f;
  std::string oracle_app, assessment_file;

  CLI::App* solve = app.add_subcommand("solve", "compute chi-CSE at one chi");
  add_common(solve, solve_f);
  CLI::App* sweep = app.add_subcommand("sweep", "solve across a chi grid");
  add_common(sweep, sweep_f);
  CLI::App* oracle = app.add_subcommand("oracle", "emit closed-form application values");
  add_common(oracle, oracle_f);
  oracle->add_option("--app", oracle_app,
                     "pgg | centipede | voting | dirty | example1 | bh3 | bh4");
  CLI::App* verify = app.add_subcommand("verify", "check an assessment file");
  add_common(verify, verify_f);
  verify->add_option("--assessment", assessment_file, "assessment JSON file");
  CLI::App* validate = app.add_subcommand("validate", "parse and validate a game file");
  add_common(validate, validate_f);

  CLI11_PARSE(app, argc, argv);

  try {
    cse::io::RunManifest m;
    if (!manifest_file.empty()) {
      std::ifstream in(manifest_file);
      if (!in) {
        std::cerr << "cannot open manifest " << manifest_file << "\n";
        return 2;
      }
      std::stringstream ss;
      ss << in.rdbuf();
      m = cse::io::RunManifest::from_json(ss.str());
    } else if (solve->parsed()) {
      m = to_manifest("solve", solve_f);
    } else if (sweep->parsed()) {
      m = to_manifest("sweep", sweep_f);
    } else if (oracle->parsed()) {
      m = to_manifest("oracle", oracle_f);
      m.app = oracle_app;
    } else if (verify->parsed()) {
      m = to_manifest("verify", verify_f);
      m.assessment_file = assessment_file;
    } else if (validate->parsed()) {
      m = to_manifest("validate", validate_f);
    } else {
      std::cerr << app.help();
      return 2;
    }
    return cse::io::run_manifest(m, std::cout);
  } catch (const cse::GameError& e) {
    std::cerr << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
}
