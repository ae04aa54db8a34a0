#include "cse/game.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>
#include <sstream>

namespace cse {

namespace {

int label_index(const std::vector<std::string>& labels, const std::string& s) {
  for (int k = 0; k < static_cast<int>(labels.size()); ++k)
    if (labels[k] == s) return k;
  return -1;
}

std::string join_path(const std::vector<std::vector<std::string>>& path) {
  std::ostringstream os;
  for (size_t t = 0; t < path.size(); ++t) {
    if (t) os << '/';
    os << '(';
    for (size_t i = 0; i < path[t].size(); ++i) {
      if (i) os << ',';
      os << path[t][i];
    }
    os << ')';
  }
  return os.str();
}

}  // namespace

std::shared_ptr<const MultiStageGame> MultiStageGame::build(const GameSpec& spec) {
  auto game = std::shared_ptr<MultiStageGame>(new MultiStageGame());
  MultiStageGame& g = *game;
  g.spec_ = spec;
  g.n_ = static_cast<int>(spec.players.size());
  g.stages_ = spec.stages;
  if (g.n_ < 1) throw GameError("game needs at least one player");
  if (g.stages_ < 1) throw StageOutOfRange("horizon must be at least 1");
  if (static_cast<int>(spec.types.size()) != g.n_)
    throw GameError("type sets must cover every player");
  for (int i = 0; i < g.n_; ++i)
    if (spec.types[i].empty()) throw GameError("empty type set for player " + spec.players[i]);

  g.index_profiles();

  // Prior: accumulate listed weights, normalize, then require full support.
  g.prior_.assign(g.num_type_profiles_, 0.0);
  for (const auto& e : spec.prior) {
    if (static_cast<int>(e.profile.size()) != g.n_)
      throw NonPositivePrior("prior profile arity mismatch");
    std::vector<int> tv(g.n_);
    for (int i = 0; i < g.n_; ++i) {
      tv[i] = label_index(spec.types[i], e.profile[i]);
      if (tv[i] < 0) throw UnknownType("unknown type label '" + e.profile[i] + "'");
    }
    if (e.weight <= 0.0) throw NonPositivePrior("prior weight must be positive");
    g.prior_[g.type_profile_index(tv)] += e.weight;
  }
  double total = std::accumulate(g.prior_.begin(), g.prior_.end(), 0.0);
  if (total <= 0.0) throw NonPositivePrior("prior has no mass");
  for (double& w : g.prior_) {
    w /= total;
    if (w <= 0.0) throw NonPositivePrior("prior must be strictly positive on every type profile");
  }

  // Expand the history tree breadth-first. Action sets come either from
  // the stage-uniform table or from explicit per-history entries.
  const bool uniform = !spec.uniform_actions.empty();
  if (uniform && static_cast<int>(spec.uniform_actions.size()) != g.n_)
    throw GameError("uniform action table must cover every player");

  std::map<std::pair<std::vector<std::vector<std::string>>, std::string>,
           const GameSpec::ActionEntry*> per_hist;
  for (const auto& e : spec.per_history_actions)
    per_hist[{e.history_path, e.player}] = &e;

  g.nodes_.clear();
  g.nodes_.push_back(HistoryNode{});
  std::vector<std::vector<std::vector<std::string>>> paths(1);  // node id -> path
  for (size_t h = 0; h < g.nodes_.size(); ++h) {
    if (g.nodes_[h].depth == g.stages_) continue;  // terminal
    HistoryNode node = g.nodes_[h];  // push_back below may reallocate
    node.actions.resize(g.n_);
    for (int i = 0; i < g.n_; ++i) {
      if (uniform) {
        node.actions[i] = spec.uniform_actions[i];
      } else {
        auto it = per_hist.find({paths[h], spec.players[i]});
        if (it == per_hist.end())
          throw EmptyActionSet("no action set for player " + spec.players[i] +
                               " at history " + join_path(paths[h]));
        node.actions[i] = it->second->labels;
      }
      if (node.actions[i].empty())
        throw EmptyActionSet("empty action set for player " + spec.players[i] +
                             " at history " + join_path(paths[h]));
    }
    node.action_count.resize(g.n_);
    node.stride.assign(g.n_, 1);
    for (int i = 0; i < g.n_; ++i) node.action_count[i] = static_cast<int>(node.actions[i].size());
    for (int i = g.n_ - 2; i >= 0; --i)
      node.stride[i] = node.stride[i + 1] * node.action_count[i + 1];
    node.num_joint = node.stride[0] * node.action_count[0];
    node.children.resize(node.num_joint);
    for (int a = 0; a < node.num_joint; ++a) {
      HistoryNode child;
      child.depth = node.depth + 1;
      child.parent = static_cast<int>(h);
      child.incoming = a;
      node.children[a] = static_cast<int>(g.nodes_.size());
      // child path = parent path + joint label tuple
      std::vector<std::string> tuple(g.n_);
      for (int i = 0; i < g.n_; ++i)
        tuple[i] = node.actions[i][(a / node.stride[i]) % node.action_count[i]];
      paths.push_back(paths[h]);
      paths.back().push_back(std::move(tuple));
      g.nodes_.push_back(std::move(child));
    }
    g.nodes_[h] = std::move(node);
  }

  // Classify nodes; depth-T leaves are the only terminals by construction,
  // so the tree cannot be ragged unless per-history entries disagree.
  for (size_t h = 0; h < g.nodes_.size(); ++h) {
    HistoryNode& node = g.nodes_[h];
    if (node.depth == g.stages_) {
      node.terminal_index = g.num_terminals_++;
      g.terminal_nodes_.push_back(static_cast<int>(h));
    } else {
      if (node.children.empty())
        throw RaggedTree("non-terminal history without children at depth " +
                         std::to_string(node.depth));
      node.nonterminal_index = g.num_nonterminal_++;
      g.nonterminal_nodes_.push_back(static_cast<int>(h));
    }
  }

  // Per-(history, player) opponent joint-action index tables.
  g.opp_action_count_.resize(g.nodes_.size());
  g.opp_action_base_.resize(g.nodes_.size());
  for (int h : g.nonterminal_nodes_) {
    const HistoryNode& node = g.nodes_[h];
    g.opp_action_count_[h].resize(g.n_);
    g.opp_action_base_[h].resize(g.n_);
    for (int i = 0; i < g.n_; ++i) {
      int count = 1;
      for (int j = 0; j < g.n_; ++j)
        if (j != i) count *= node.action_count[j];
      g.opp_action_count_[h][i] = count;
      auto& base = g.opp_action_base_[h][i];
      base.assign(count, 0);
      for (int oa = 0; oa < count; ++oa) {
        int rem = oa, joint = 0;
        for (int j = g.n_ - 1; j >= 0; --j) {
          if (j == i) continue;
          int aj = rem % node.action_count[j];
          rem /= node.action_count[j];
          joint += aj * node.stride[j];
        }
        base[oa] = joint;
      }
    }
  }

  // Payoffs: every (terminal, type profile) pair must be covered.
  g.payoffs_.assign(static_cast<size_t>(g.num_terminals_) * g.num_type_profiles_ * g.n_, 0.0);
  std::vector<char> seen(static_cast<size_t>(g.num_terminals_) * g.num_type_profiles_, 0);
  for (const auto& e : spec.payoffs) {
    int h = g.find_history(e.terminal_path);
    if (h < 0 || !g.is_terminal(h))
      throw PayoffMissing("payoff path does not name a terminal history: " +
                          join_path(e.terminal_path));
    if (static_cast<int>(e.type_profile.size()) != g.n_)
      throw PayoffMissing("payoff type profile arity mismatch");
    std::vector<int> tv(g.n_);
    for (int i = 0; i < g.n_; ++i) {
      tv[i] = label_index(spec.types[i], e.type_profile[i]);
      if (tv[i] < 0) throw UnknownType("unknown type label '" + e.type_profile[i] + "'");
    }
    if (static_cast<int>(e.utilities.size()) != g.n_)
      throw PayoffMissing("payoff utilities arity mismatch");
    int tp = g.type_profile_index(tv);
    size_t slot = static_cast<size_t>(g.nodes_[h].terminal_index) * g.num_type_profiles_ + tp;
    seen[slot] = 1;
    for (int i = 0; i < g.n_; ++i) g.payoffs_[slot * g.n_ + i] = e.utilities[i];
  }
  for (int term = 0; term < g.num_terminals_; ++term)
    for (int tp = 0; tp < g.num_type_profiles_; ++tp)
      if (!seen[static_cast<size_t>(term) * g.num_type_profiles_ + tp]) {
        std::vector<int> tv = game->type_profile(tp);
        std::ostringstream os;
        os << "missing payoff at terminal " << game->history_path(g.terminal_nodes_[term])
           << " for type profile (";
        for (int i = 0; i < g.n_; ++i) os << (i ? "," : "") << spec.types[i][tv[i]];
        os << ")";
        throw PayoffMissing(os.str());
      }

  g.index_layout();
  g.validate();
  return game;
}

void MultiStageGame::index_profiles() {
  type_stride_.assign(n_, 1);
  for (int i = n_ - 2; i >= 0; --i)
    type_stride_[i] = type_stride_[i + 1] * num_types(i + 1);
  num_type_profiles_ = type_stride_[0] * num_types(0);

  opp_count_.assign(n_, 1);
  opp_base_.assign(n_, {});
  opp_index_.assign(n_, {});
  for (int i = 0; i < n_; ++i) {
    for (int j = 0; j < n_; ++j)
      if (j != i) opp_count_[i] *= num_types(j);
    opp_base_[i].assign(opp_count_[i], 0);
    for (int op = 0; op < opp_count_[i]; ++op) {
      int rem = op, tp = 0;
      for (int j = n_ - 1; j >= 0; --j) {
        if (j == i) continue;
        tp += (rem % num_types(j)) * type_stride_[j];
        rem /= num_types(j);
      }
      opp_base_[i][op] = tp;
    }
    opp_index_[i].assign(num_type_profiles_, 0);
    for (int op = 0; op < opp_count_[i]; ++op)
      for (int t = 0; t < num_types(i); ++t)
        opp_index_[i][opp_base_[i][op] + t * type_stride_[i]] = op;
  }
}

void MultiStageGame::index_layout() {
  strat_off_.assign(static_cast<size_t>(num_nonterminal_) * n_, 0);
  belief_off_.assign(static_cast<size_t>(num_nonterminal_) * n_, 0);
  cell_off_.assign(static_cast<size_t>(num_nonterminal_) * n_, 0);
  int s = 0, b = 0, c = 0;
  for (int h : nonterminal_nodes_) {
    const HistoryNode& node = nodes_[h];
    for (int i = 0; i < n_; ++i) {
      size_t slot = static_cast<size_t>(node.nonterminal_index) * n_ + i;
      strat_off_[slot] = s;
      belief_off_[slot] = b;
      cell_off_[slot] = c;
      s += num_types(i) * node.action_count[i];
      b += num_types(i) * opp_count_[i];
      c += num_types(i);
    }
  }
  strat_size_ = s;
  belief_size_ = b;
  cell_count_ = c;
}

void MultiStageGame::validate() const {
  double sum = std::accumulate(prior_.begin(), prior_.end(), 0.0);
  if (std::abs(sum - 1.0) > kInputTol) throw NonPositivePrior("prior does not sum to 1");
  for (const HistoryNode& node : nodes_) {
    if (node.terminal_index >= 0) {
      if (node.depth != stages_) throw RaggedTree("terminal history at wrong depth");
      continue;
    }
    if (node.depth >= stages_) throw RaggedTree("non-terminal history at the horizon");
    int expect = 1;
    for (int i = 0; i < n_; ++i) expect *= node.action_count[i];
    if (expect != static_cast<int>(node.children.size()))
      throw RaggedTree("child count does not match joint action count");
  }
}

int MultiStageGame::type_profile_index(const std::vector<int>& types) const {
  int tp = 0;
  for (int i = 0; i < n_; ++i) tp += types[i] * type_stride_[i];
  return tp;
}

std::vector<int> MultiStageGame::type_profile(int tp) const {
  std::vector<int> tv(n_);
  for (int i = 0; i < n_; ++i) tv[i] = (tp / type_stride_[i]) % num_types(i);
  return tv;
}

std::vector<double> MultiStageGame::conditional_prior(int i, int theta_i) const {
  if (i < 0 || i >= n_) throw UnknownType("player out of range");
  if (theta_i < 0 || theta_i >= num_types(i)) throw UnknownType("type out of range");
  std::vector<double> out(opp_count_[i]);
  double total = 0.0;
  for (int op = 0; op < opp_count_[i]; ++op) {
    out[op] = prior_[compose(i, theta_i, op)];
    total += out[op];
  }
  for (double& w : out) w /= total;
  return out;
}

std::vector<int> MultiStageGame::histories_at(int t) const {
  if (t < 0 || t > stages_) throw StageOutOfRange("stage out of range");
  std::vector<int> out;
  for (int h = 0; h < static_cast<int>(nodes_.size()); ++h)
    if (nodes_[h].depth == t) out.push_back(h);
  return out;
}

std::string MultiStageGame::history_path(int h) const {
  // Walk up to the root collecting joint labels, omitting singleton movers.
  std::vector<std::string> parts;
  int cur = h;
  while (nodes_[cur].parent >= 0) {
    const HistoryNode& par = nodes_[nodes_[cur].parent];
    int joint = nodes_[cur].incoming;
    std::string tuple;
    for (int i = 0; i < n_; ++i) {
      if (par.action_count[i] <= 1) continue;
      int ai = (joint / par.stride[i]) % par.action_count[i];
      if (!tuple.empty()) tuple += ',';
      tuple += par.actions[i][ai];
    }
    if (tuple.empty()) tuple = "-";
    parts.push_back(std::move(tuple));
    cur = nodes_[cur].parent;
  }
  if (parts.empty()) return "";
  std::string out;
  for (auto it = parts.rbegin(); it != parts.rend(); ++it) {
    if (!out.empty()) out += '/';
    out += *it;
  }
  return out;
}

int MultiStageGame::find_history(const std::vector<std::vector<std::string>>& path) const {
  int cur = 0;
  for (const auto& tuple : path) {
    const HistoryNode& node = nodes_[cur];
    if (node.terminal_index >= 0) return -1;
    if (static_cast<int>(tuple.size()) != n_) return -1;
    int joint = 0;
    for (int i = 0; i < n_; ++i) {
      int ai = label_index(node.actions[i], tuple[i]);
      if (ai < 0) return -1;
      joint += ai * node.stride[i];
    }
    cur = node.children[joint];
  }
  return cur;
}

}  // namespace cse
