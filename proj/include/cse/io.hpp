#pragma once

#include <iosfwd>
#include <map>

#include "cse/apps.hpp"
#include "cse/solver.hpp"

// File formats, the run manifest and the command drivers behind the CLI.
// Game and assessment documents are JSON; every parse failure surfaces as
// a positioned SyntaxError or a field-path SemanticError, never a crash.
namespace cse::io {

struct SyntaxError : GameError {
  int line = 0, column = 0;
  SyntaxError(int l, int c, const std::string& what)
      : GameError("syntax error at " + std::to_string(l) + ":" + std::to_string(c) +
                  ": " + what),
        line(l), column(c) {}
};

struct SemanticError : GameError {
  std::string path;
  SemanticError(std::string p, const std::string& what)
      : GameError("invalid field " + p + ": " + what), path(std::move(p)) {}
};

// --- game documents ---------------------------------------------------------

GameSpec game_spec_from_text(const std::string& text);
GamePtr parse_game_file(const std::string& text);
std::string serialize_game(const MultiStageGame& game);

// --- assessment documents ---------------------------------------------------

// Strategy entries must cover every non-singleton cell. Belief entries are
// optional where cursed-Bayes propagation pins them and required at
// off-path histories.
Assessment parse_assessment(const std::string& text, GamePtr game);
std::string serialize_assessment(const MultiStageGame& game, const Assessment& assessment);

// --- run manifest ------------------------------------------------------------

struct RunManifest {
  std::string command;            // solve | sweep | oracle | verify | validate
  std::string game;               // "file:<path>" or "builtin:<name>"
  std::string app;                // oracle target (pgg | voting | dirty | centipede | signaling)
  std::map<std::string, double> params;  // generator / oracle parameters
  double chi = -1.0;  // negative: not set
  std::vector<double> grid;       // explicit grid (from lo:hi:step)
  std::uint64_t seed = 1;
  std::string out_dir = "out";
  std::string assessment_file;    // verify
  SolverConfig solver;            // defaults overridable from the config file

  std::string to_json() const;
  static RunManifest from_json(const std::string& text);
};

std::vector<double> parse_grid(const std::string& spec);  // "lo:hi:step"

// Builtin generator registry: returns the game plus solver wiring (seed
// provider, mask) appropriate for it.
struct BuiltinGame {
  GamePtr game;
  SeedProvider seeds;
  SolveMask mask;
};
BuiltinGame make_builtin(const std::string& name,
                         const std::map<std::string, double>& params);

// --- command drivers ----------------------------------------------------------
// Each writes its outputs under manifest.out_dir and returns the process
// exit code: 0 ok, 1 verification failure, 2 input error, 3 solver
// non-convergence.

int run_manifest(const RunManifest& manifest, std::ostream& log);

int cmd_solve(const RunManifest& manifest, std::ostream& log);
int cmd_sweep(const RunManifest& manifest, std::ostream& log);
int cmd_oracle(const RunManifest& manifest, std::ostream& log);
int cmd_verify(const RunManifest& manifest, std::ostream& log);
int cmd_validate(const RunManifest& manifest, std::ostream& log);

// CSV row schema shared by solve, sweep and oracle outputs:
//   chi,equilibrium_id,player,type,history_path,action,probability,residual
extern const char* kCsvHeader;
void write_equilibria_csv(std::ostream& os, const MultiStageGame& game, double chi,
                          const SolveReport& report);

std::string format_probability(double p);  // 12 significant digits

}  // namespace cse::io
