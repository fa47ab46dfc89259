#pragma once

#include <bitset>
#include <cmath>
#include <cstdint>
#include <deque>
#include <optional>
#include <stdexcept>
#include <vector>

#include "asplan/world.hpp"

namespace asplan {

// Deterministic geometric feasibility oracle. An assembly action is feasible
// when the part body admits a collision-free translation path into its target
// pose, the gripper can manipulate it there (grasp-only preferred, grasp at a
// one-cell offset plus a straight push otherwise), and the resulting
// subassembly is statically supported.

struct GripperModel {
  double max_opening = 3.0;  // voxel units
  int tip_cells = 1;         // cells occupied by each tip when closed on a face
};

struct FeasibilityOptions {
  int search_budget = 50000;  // max expanded poses; effectively exhaustive here
  int workspace_margin = 2;   // workspace = target grid dilated by this many cells per axis
  GripperModel gripper;
};

enum class Axis : int { X = 0, Y = 1, Z = 2 };

inline Cell axis_unit(Axis a) {
  switch (a) {
    case Axis::X: return {1, 0, 0};
    case Axis::Y: return {0, 1, 0};
    default: return {0, 0, 1};
  }
}

// Parallel-jaw grasp across two opposite faces of one unit cube of the part.
struct GraspConfig {
  Cell cube;
  Axis axis;
  int yaw_index = 0;  // multiple of 90 degrees about the grasp axis
};

struct Vec3 {
  double x = 0, y = 0, z = 0;
};

inline Vec3 operator-(Vec3 a, Vec3 b) { return {a.x - b.x, a.y - b.y, a.z - b.z}; }
inline double dot(Vec3 a, Vec3 b) { return a.x * b.x + a.y * b.y + a.z * b.z; }
inline double norm(Vec3 a) { return std::sqrt(dot(a, a)); }
// z-component of a x b; the push criteria live in the horizontal plane.
inline double cross_z(Vec3 a, Vec3 b) { return a.x * b.y - a.y * b.x; }

struct PushPlan {
  Vec3 p_left, p_right;   // contact points at the center-of-mass height
  Vec3 n_left, n_right;   // inward unit normals
  Vec3 v_b;               // desired unit moving direction, horizontal
  Vec3 p_cm;              // part center of mass
};

// Unit-step translations from a pose clear of the target box down to the
// target pose. offsets.front() is the outside start, offsets.back() is {0,0,0}.
struct InsertionPath {
  std::vector<Cell> offsets;
};

struct PathSearchResult {
  std::optional<InsertionPath> path;
  bool budget_exhausted = false;
};

struct FeasibilityResult {
  bool feasible = false;
  bool budget_exhausted = false;
};

inline std::bitset<kGridCells> placed_bitset(const Instance& inst, Mask v) {
  std::bitset<kGridCells> b;
  for (const Part& p : inst.parts)
    if (v.contains(p.id)) b |= cells_bitset(p.cells);
  return b;
}

// A part is supported when one of its cells rests on the floor or directly
// atop a cell of a supported part. Stability = every placed part supported,
// computed as a fixed point seeded from the floor-touching parts.
inline bool check_stability(const Instance& inst, Mask v) {
  const int m = inst.m();
  std::array<int, kGridCells> owner;
  owner.fill(-1);
  std::vector<int> placed;
  for (int p = 0; p < m; ++p) {
    if (!v.contains(p)) continue;
    placed.push_back(p);
    for (const Cell& c : inst.parts[p].cells) owner[cell_index(c)] = p;
  }
  if (placed.empty()) return true;

  std::vector<bool> supported(m, false);
  bool changed = true;
  while (changed) {
    changed = false;
    for (int p : placed) {
      if (supported[p]) continue;
      for (const Cell& c : inst.parts[p].cells) {
        if (c.z == 0) {
          supported[p] = true;
          break;
        }
        const int below = owner[cell_index({c.x, c.y, c.z - 1})];
        if (below >= 0 && below != p && supported[below]) {
          supported[p] = true;
          break;
        }
      }
      changed = changed || supported[p];
    }
  }
  for (int p : placed)
    if (!supported[p]) return false;
  return true;
}

namespace detail {

struct PoseSpace {
  int margin;
  int side;    // offsets per axis: [-(margin+kGridDim-1), margin+kGridDim-1] is ample
  int radius;  // index offset

  explicit PoseSpace(int margin_)
      : margin(margin_), side(2 * (margin_ + kGridDim) + 1), radius(margin_ + kGridDim) {}

  int size() const { return side * side * side; }
  bool in_range(Cell t) const {
    return std::abs(t.x) <= radius && std::abs(t.y) <= radius && std::abs(t.z) <= radius;
  }
  int index(Cell t) const {
    return (t.x + radius) + side * (t.y + radius) + side * side * (t.z + radius);
  }
};

// Pose legality: inside the dilated workspace, above the floor, and not
// overlapping any placed part.
inline bool pose_free(const std::vector<Cell>& cells, Cell t, int margin,
                      const std::bitset<kGridCells>& placed) {
  for (const Cell& c : cells) {
    const Cell w = c + t;
    if (w.z < 0) return false;  // floor
    if (w.x < -margin || w.x >= kGridDim + margin || w.y < -margin ||
        w.y >= kGridDim + margin || w.z >= kGridDim + margin)
      return false;  // outside workspace
    if (in_grid(w) && placed.test(cell_index(w))) return false;
  }
  return true;
}

inline bool pose_outside_target(const std::vector<Cell>& cells, Cell t) {
  for (const Cell& c : cells)
    if (in_grid(c + t)) return false;
  return true;
}

}  // namespace detail

// Breadth-first search over integer translations of the part, run backward
// from the target pose; the returned path is forward-ordered. Absence with
// budget_exhausted=false means exhaustively proven unreachable.
inline PathSearchResult find_insertion_path(const Instance& inst, Mask v, int part,
                                            const FeasibilityOptions& opts = {}) {
  if (v.contains(part)) throw std::invalid_argument("find_insertion_path: part already placed");
  const std::vector<Cell>& cells = inst.parts[part].cells;
  const auto placed = placed_bitset(inst, v);
  const detail::PoseSpace space(opts.workspace_margin);

  const Cell start{0, 0, 0};
  if (!detail::pose_free(cells, start, opts.workspace_margin, placed)) return {};

  std::vector<int> parent(space.size(), -2);  // -2 unvisited, -1 root
  std::deque<Cell> queue;
  parent[space.index(start)] = -1;
  queue.push_back(start);
  int expanded = 0;

  while (!queue.empty()) {
    if (expanded >= opts.search_budget) return {.path = std::nullopt, .budget_exhausted = true};
    const Cell t = queue.front();
    queue.pop_front();
    ++expanded;

    if (detail::pose_outside_target(cells, t)) {
      InsertionPath path;
      Cell cur = t;
      while (true) {
        path.offsets.push_back(cur);
        const int par = parent[space.index(cur)];
        if (par < 0) break;
        const int r = space.side;
        cur = {par % r - space.radius, (par / r) % r - space.radius,
               par / (r * r) - space.radius};
      }
      return {.path = std::move(path), .budget_exhausted = false};
    }
    for (const Cell& d : face_neighbors()) {
      const Cell n = t + d;
      if (!space.in_range(n)) continue;
      int& slot = parent[space.index(n)];
      if (slot != -2) continue;
      if (!detail::pose_free(cells, n, opts.workspace_margin, placed)) {
        slot = -3;  // visited, blocked
        continue;
      }
      slot = space.index(t);
      queue.push_back(n);
    }
  }
  return {.path = std::nullopt, .budget_exhausted = false};
}

// Enumerates (cube, axis, yaw) grasp candidates in a fixed order and returns
// the first whose two tip cells clash with neither placed parts nor the part
// itself. Tips sit just beyond the two opposite faces of the grasped cube.
inline std::optional<GraspConfig> select_grasp_at(const std::vector<Cell>& part_cells,
                                                  const std::bitset<kGridCells>& placed,
                                                  const GripperModel& gripper = {}) {
  if (gripper.max_opening < 1.0) return std::nullopt;  // cannot span a unit cube

  auto occupied_by_part = [&](Cell c) {
    for (const Cell& pc : part_cells)
      if (pc == c) return true;
    return false;
  };
  auto tip_ok = [&](Cell tip) {
    if (tip.z < 0) return false;
    if (in_grid(tip) && placed.test(cell_index(tip))) return false;
    return !occupied_by_part(tip);
  };

  // fixed enumeration order: cube, then axis, then yaw; unit-cell tips make
  // the four yaws geometrically equivalent, so the first one is returned
  for (const Cell& cube : part_cells) {
    for (int a = 0; a < 3; ++a) {
      const Cell u = axis_unit(static_cast<Axis>(a));
      if (tip_ok(cube + u) && tip_ok(cube - u))
        return GraspConfig{cube, static_cast<Axis>(a), 0};
    }
  }
  return std::nullopt;
}

inline std::optional<GraspConfig> select_grasp(const Instance& inst, Mask v, int part,
                                               const FeasibilityOptions& opts = {}) {
  if (v.contains(part)) throw std::invalid_argument("select_grasp: part already placed");
  return select_grasp_at(inst.parts[part].cells, placed_bitset(inst, v), opts.gripper);
}

// Push contact-point selection in the horizontal plane through the part's
// center of mass. Candidate points are face centers of the boundary faces of
// the slice layer. The returned pair satisfies, with 1e-9 margins:
//   (1) opening width below the gripper maximum, both tip cells free,
//   (2) both inward normals strictly aligned with the push direction,
//   (3) strictly opposite torque signs about the center of mass.
inline std::optional<PushPlan> select_push_contacts(const std::vector<Cell>& part_cells,
                                                    Vec3 v_b,
                                                    const GripperModel& gripper = {},
                                                    const std::bitset<kGridCells>& placed = {}) {
  constexpr double kTol = 1e-9;
  if (std::abs(v_b.z) > kTol) throw std::invalid_argument("select_push_contacts: v_b not horizontal");
  const double len = norm(v_b);
  if (len < kTol) throw std::invalid_argument("select_push_contacts: v_b is zero");
  v_b = {v_b.x / len, v_b.y / len, 0.0};

  Vec3 cm{0, 0, 0};
  for (const Cell& c : part_cells) {
    cm.x += c.x + 0.5;
    cm.y += c.y + 0.5;
    cm.z += c.z + 0.5;
  }
  const double n = static_cast<double>(part_cells.size());
  cm = {cm.x / n, cm.y / n, cm.z / n};

  // Slice layer containing the center-of-mass plane. Face-connected parts
  // occupy a contiguous z interval, so this layer is never empty.
  const int z_layer = static_cast<int>(std::floor(cm.z));

  struct Candidate {
    Vec3 point;
    Vec3 normal;
    Cell tip;
  };
  static const std::array<Cell, 4> kDirs = {{{1, 0, 0}, {-1, 0, 0}, {0, 1, 0}, {0, -1, 0}}};

  std::vector<Candidate> cands;
  for (const Cell& c : part_cells) {
    if (c.z != z_layer) continue;
    for (const Cell& d : kDirs) {
      const Cell nb = c + d;
      bool boundary = true;
      for (const Cell& other : part_cells) {
        if (other == nb) {
          boundary = false;
          break;
        }
      }
      if (!boundary) continue;
      Candidate cand;
      cand.point = {c.x + 0.5 + 0.5 * d.x, c.y + 0.5 + 0.5 * d.y, cm.z};
      cand.normal = {-static_cast<double>(d.x), -static_cast<double>(d.y), 0.0};
      cand.tip = nb;
      cands.push_back(cand);
    }
  }

  auto tip_ok = [&](Cell tip) {
    if (tip.z < 0) return false;
    return !(in_grid(tip) && placed.test(cell_index(tip)));
  };

  for (std::size_t i = 0; i < cands.size(); ++i) {
    for (std::size_t j = i + 1; j < cands.size(); ++j) {
      const Candidate& a = cands[i];
      const Candidate& b = cands[j];
      if (dot(a.normal, v_b) <= kTol || dot(b.normal, v_b) <= kTol) continue;
      const double width = norm(a.point - b.point);
      if (!(width < gripper.max_opening - kTol)) continue;
      if (!tip_ok(a.tip) || !tip_ok(b.tip)) continue;
      const double ta = cross_z(cm - a.point, v_b);
      const double tb = cross_z(cm - b.point, v_b);
      if (ta > kTol && tb < -kTol)
        return PushPlan{a.point, b.point, a.normal, b.normal, v_b, cm};
      if (tb > kTol && ta < -kTol)
        return PushPlan{b.point, a.point, b.normal, a.normal, v_b, cm};
    }
  }
  return std::nullopt;
}

namespace detail {

inline std::vector<Cell> translated(const std::vector<Cell>& cells, Cell t) {
  std::vector<Cell> out;
  out.reserve(cells.size());
  for (const Cell& c : cells) out.push_back(c + t);
  return out;
}

inline bool cells_free(const std::vector<Cell>& cells, const std::bitset<kGridCells>& placed) {
  for (const Cell& c : cells) {
    if (c.z < 0) return false;
    if (in_grid(c) && placed.test(cell_index(c))) return false;
  }
  return true;
}

}  // namespace detail

// Action feasibility: a collision-free insertion path exists, the part can be
// manipulated into place (grasp at the target pose, or grasp at a one-cell
// horizontal offset followed by a contact-valid straight push), and the grown
// subassembly stays stable. Grasp-only is tried before grasp-plus-push.
inline FeasibilityResult check_action_feasible(const Instance& inst, Mask v, int part,
                                               const FeasibilityOptions& opts = {}) {
  if (v.contains(part)) throw std::invalid_argument("check_action_feasible: part already placed");

  const PathSearchResult path = find_insertion_path(inst, v, part, opts);
  if (!path.path.has_value()) return {.feasible = false, .budget_exhausted = path.budget_exhausted};

  const auto placed = placed_bitset(inst, v);
  const std::vector<Cell>& target_cells = inst.parts[part].cells;

  bool manipulable = select_grasp_at(target_cells, placed, opts.gripper).has_value();
  if (!manipulable) {
    static const std::array<Cell, 4> kOffsets = {{{1, 0, 0}, {-1, 0, 0}, {0, 1, 0}, {0, -1, 0}}};
    for (const Cell& o : kOffsets) {
      const std::vector<Cell> offset_cells = detail::translated(target_cells, o);
      if (!detail::cells_free(offset_cells, placed)) continue;
      if (!select_grasp_at(offset_cells, placed, opts.gripper).has_value()) continue;
      const Vec3 push_dir{-static_cast<double>(o.x), -static_cast<double>(o.y), 0.0};
      if (!select_push_contacts(offset_cells, push_dir, opts.gripper, placed).has_value())
        continue;
      // swept volume of the one-cell push
      std::vector<Cell> swept = offset_cells;
      swept.insert(swept.end(), target_cells.begin(), target_cells.end());
      if (!detail::cells_free(swept, placed)) continue;
      manipulable = true;
      break;
    }
  }
  if (!manipulable) return {.feasible = false, .budget_exhausted = false};

  const bool stable = check_stability(inst, v.with(part));
  return {.feasible = stable, .budget_exhausted = false};
}

}  // namespace asplan
