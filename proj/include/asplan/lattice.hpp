#pragma once

#include <cstdint>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "asplan/feasibility.hpp"
#include "asplan/world.hpp"

namespace asplan {

// reward in {-1, 0, +1}; +1 and -1 always terminate the episode
struct RewardOutcome {
  int reward = 0;
  bool done = false;
};

enum class EdgeLabel : std::int8_t { Unknown = -1, Infeasible = 0, Feasible = 1 };

// The subassembly lattice of one instance: 2^M nodes, one per part subset,
// with an edge (v, v+{p}) for every admissible single-part action. Edge
// labels come from the feasibility oracle, are memoized, and never change
// once set. Reachability of the full assembly is memoized per node.
//
// Not internally synchronized; use one graph per thread or serialize writes.
class AssemblyGraph {
 public:
  explicit AssemblyGraph(Instance instance, FeasibilityOptions opts = {})
      : instance_(std::move(instance)), opts_(opts) {
    m_ = instance_.m();
    if (m_ > 16) throw std::invalid_argument("AssemblyGraph: lattice too large (m > 16)");
    labels_.assign(static_cast<std::size_t>(node_count()) * m_, EdgeLabel::Unknown);
    reach_.assign(node_count(), -1);
  }

  const Instance& instance() const { return instance_; }
  const FeasibilityOptions& options() const { return opts_; }
  int m() const { return m_; }
  std::uint32_t node_count() const { return 1u << m_; }
  std::uint32_t edge_count() const { return static_cast<std::uint32_t>(m_) << (m_ - 1); }
  Mask full_mask() const { return Mask::full(m_); }

  // Admissible successors {(p, v+{p}) : p not in v}, ascending part id.
  std::vector<std::pair<int, Mask>> out_neighbors(Mask v) const {
    check_node(v);
    std::vector<std::pair<int, Mask>> out;
    for (int p = 0; p < m_; ++p)
      if (!v.contains(p)) out.emplace_back(p, v.with(p));
    return out;
  }

  // Memoized feasibility label of the admissible edge (v, u).
  EdgeLabel label_edge(Mask v, Mask u) {
    const int p = edge_part(v, u);
    EdgeLabel& slot = labels_[static_cast<std::size_t>(v.bits) * m_ + p];
    if (slot == EdgeLabel::Unknown) {
      ++oracle_calls_;
      const FeasibilityResult r = check_action_feasible(instance_, v, p, opts_);
      if (r.budget_exhausted) ++budget_exhaustions_;
      slot = r.feasible ? EdgeLabel::Feasible : EdgeLabel::Infeasible;
    }
    return slot;
  }

  // True iff a path of feasible edges leads from v to the full assembly.
  bool reachable_to_full(Mask v) {
    check_node(v);
    std::int8_t& slot = reach_[v.bits];
    if (slot >= 0) return slot == 1;
    if (v.bits == full_mask().bits) {
      slot = 1;
      return true;
    }
    bool ok = false;
    for (const auto& [p, u] : out_neighbors(v)) {
      if (label_edge(v, u) == EdgeLabel::Feasible && reachable_to_full(u)) {
        ok = true;
        break;
      }
    }
    slot = ok ? 1 : 0;
    return ok;
  }

  // Delayed assignment: reward is withheld until the successor is known to
  // still reach the full assembly; dead-end successors terminate with -1.
  RewardOutcome delayed_reward(Mask v, Mask u) {
    if (label_edge(v, u) == EdgeLabel::Infeasible) return {-1, true};
    if (u.bits == full_mask().bits) return {+1, true};
    if (reachable_to_full(u)) return {0, false};
    return {-1, true};
  }

  // Non-delayed baseline: only physical feasibility of the step itself.
  RewardOutcome immediate_reward(Mask v, Mask u) {
    if (label_edge(v, u) == EdgeLabel::Infeasible) return {-1, true};
    if (u.bits == full_mask().bits) return {+1, true};
    return {0, false};
  }

  // Oracle bookkeeping (memoization and budget reporting).
  std::uint64_t oracle_calls() const { return oracle_calls_; }
  std::uint64_t budget_exhaustions() const { return budget_exhaustions_; }

  EdgeLabel peek_label(Mask v, int p) const {
    return labels_[static_cast<std::size_t>(v.bits) * m_ + p];
  }

  std::uint32_t labeled_edge_count() const {
    std::uint32_t n = 0;
    for (std::uint32_t v = 0; v < node_count(); ++v)
      for (int p = 0; p < m_; ++p)
        if (!Mask{v}.contains(p) && labels_[static_cast<std::size_t>(v) * m_ + p] != EdgeLabel::Unknown)
          ++n;
    return n;
  }

  // Labels every admissible edge and the reachability of every node.
  void label_all() {
    for (std::uint32_t v = 0; v < node_count(); ++v)
      for (const auto& [p, u] : out_neighbors(Mask{v})) label_edge(Mask{v}, u);
    for (std::uint32_t v = 0; v < node_count(); ++v) reachable_to_full(Mask{v});
  }

  // ---- label-cache persistence -------------------------------------------
  // Text format, one record per line:
  //   E <v_bits> <u_bits> <0|1>     edge label
  //   R <v_bits> <0|1>              reachability of the full assembly

  void save_labels(const std::string& path) const {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot open for write: " + path);
    out << "asplan-labels 1 m " << m_ << "\n";
    for (std::uint32_t v = 0; v < node_count(); ++v) {
      for (int p = 0; p < m_; ++p) {
        if (Mask{v}.contains(p)) continue;
        const EdgeLabel l = labels_[static_cast<std::size_t>(v) * m_ + p];
        if (l == EdgeLabel::Unknown) continue;
        out << "E " << v << " " << Mask{v}.with(p).bits << " " << static_cast<int>(l) << "\n";
      }
    }
    for (std::uint32_t v = 0; v < node_count(); ++v)
      if (reach_[v] >= 0) out << "R " << v << " " << static_cast<int>(reach_[v]) << "\n";
    if (!out) throw std::runtime_error("write failed: " + path);
  }

  // Merges persisted labels; re-labeling an already-set edge must agree.
  void load_labels(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open: " + path);
    std::string header, tag;
    int version = 0, m = 0;
    in >> header >> version >> tag >> m;
    if (header != "asplan-labels" || version != 1 || tag != "m")
      throw std::invalid_argument(path + ": bad label file header");
    if (m != m_) throw std::invalid_argument(path + ": label file is for m=" + std::to_string(m));
    std::string kind;
    while (in >> kind) {
      if (kind == "E") {
        std::uint32_t v = 0, u = 0;
        int y = 0;
        if (!(in >> v >> u >> y) || (y != 0 && y != 1) || v >= node_count() || u >= node_count())
          throw std::invalid_argument(path + ": malformed edge record");
        const int p = edge_part(Mask{v}, Mask{u});
        set_label(Mask{v}, p, static_cast<EdgeLabel>(y));
      } else if (kind == "R") {
        std::uint32_t v = 0;
        int r = 0;
        if (!(in >> v >> r) || (r != 0 && r != 1) || v >= node_count())
          throw std::invalid_argument(path + ": malformed reachability record");
        if (reach_[v] >= 0 && reach_[v] != r)
          throw std::invalid_argument(path + ": reachability record contradicts cache");
        reach_[v] = static_cast<std::int8_t>(r);
      } else {
        throw std::invalid_argument(path + ": unknown record kind '" + kind + "'");
      }
    }
  }

 private:
  void check_node(Mask v) const {
    if (v.bits >= node_count()) throw std::invalid_argument("mask outside lattice");
  }

  // (v, u) must be admissible: u = v + exactly one new part.
  int edge_part(Mask v, Mask u) const {
    check_node(v);
    check_node(u);
    const std::uint32_t diff = u.bits ^ v.bits;
    if ((u.bits & v.bits) != v.bits || std::popcount(diff) != 1)
      throw std::invalid_argument("not an admissible edge");
    return std::countr_zero(diff);
  }

  void set_label(Mask v, int p, EdgeLabel y) {
    EdgeLabel& slot = labels_[static_cast<std::size_t>(v.bits) * m_ + p];
    if (slot != EdgeLabel::Unknown && slot != y)
      throw std::logic_error("label cache is append-only; conflicting relabel");
    slot = y;
  }

  Instance instance_;
  FeasibilityOptions opts_;
  int m_ = 0;
  std::vector<EdgeLabel> labels_;
  std::vector<std::int8_t> reach_;
  std::uint64_t oracle_calls_ = 0;
  std::uint64_t budget_exhaustions_ = 0;
};

}  // namespace asplan
