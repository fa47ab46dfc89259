#pragma once

#include <algorithm>
#include <array>
#include <bit>
#include <bitset>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <numeric>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "asplan/rng.hpp"

namespace asplan {

// Target structures are 3x3x3 voxel grids built from unit cubes.
inline constexpr int kGridDim = 3;
inline constexpr int kGridCells = kGridDim * kGridDim * kGridDim;

struct Cell {
  int x = 0, y = 0, z = 0;

  friend bool operator==(const Cell&, const Cell&) = default;
};

inline Cell operator+(Cell a, Cell b) { return {a.x + b.x, a.y + b.y, a.z + b.z}; }
inline Cell operator-(Cell a, Cell b) { return {a.x - b.x, a.y - b.y, a.z - b.z}; }

inline bool in_grid(Cell c) {
  return c.x >= 0 && c.x < kGridDim && c.y >= 0 && c.y < kGridDim &&
         c.z >= 0 && c.z < kGridDim;
}

// Row-major voxel index, x fastest. Fixed so features and file formats
// are reproducible.
inline int cell_index(Cell c) { return c.x + kGridDim * c.y + kGridDim * kGridDim * c.z; }

inline Cell cell_from_index(int i) {
  return {i % kGridDim, (i / kGridDim) % kGridDim, i / (kGridDim * kGridDim)};
}

inline bool cell_less(Cell a, Cell b) { return cell_index(a) < cell_index(b); }

inline const std::array<Cell, 6>& face_neighbors() {
  static const std::array<Cell, 6> k = {{{1, 0, 0},
                                         {-1, 0, 0},
                                         {0, 1, 0},
                                         {0, -1, 0},
                                         {0, 0, 1},
                                         {0, 0, -1}}};
  return k;
}

struct Part {
  int id = 0;
  std::vector<Cell> cells;  // placed pose in the target structure; kept sorted

  void normalize() {
    std::sort(cells.begin(), cells.end(), cell_less);
  }

  friend bool operator==(const Part&, const Part&) = default;
};

// Occupied-voxel bitset of a cell list, grid coordinates only.
inline std::bitset<kGridCells> cells_bitset(const std::vector<Cell>& cells) {
  std::bitset<kGridCells> b;
  for (const Cell& c : cells) b.set(cell_index(c));
  return b;
}

inline bool cells_face_connected(const std::vector<Cell>& cells) {
  if (cells.empty()) return false;
  std::vector<int> stack = {0};
  std::vector<bool> seen(cells.size(), false);
  seen[0] = true;
  std::size_t reached = 1;
  while (!stack.empty()) {
    const Cell c = cells[stack.back()];
    stack.pop_back();
    for (std::size_t j = 0; j < cells.size(); ++j) {
      if (seen[j]) continue;
      const Cell d = cells[j] - c;
      if (std::abs(d.x) + std::abs(d.y) + std::abs(d.z) == 1) {
        seen[j] = true;
        ++reached;
        stack.push_back(static_cast<int>(j));
      }
    }
  }
  return reached == cells.size();
}

struct Instance {
  std::vector<Part> parts;
  std::array<int, 3> grid_dims = {kGridDim, kGridDim, kGridDim};

  int m() const { return static_cast<int>(parts.size()); }
};

// Subassembly identified by an M-bit set; bit i set <=> part i placed.
// The empty mask is the root, the full mask the complete assembly.
struct Mask {
  std::uint32_t bits = 0;

  static Mask empty() { return Mask{0}; }
  static Mask full(int m) { return Mask{(1u << m) - 1u}; }

  bool contains(int part) const { return (bits >> part) & 1u; }
  Mask with(int part) const { return Mask{bits | (1u << part)}; }
  Mask without(int part) const { return Mask{bits & ~(1u << part)}; }
  int count() const { return std::popcount(bits); }
  bool is_full(int m) const { return bits == full(m).bits; }

  // Remaining part ids, ascending.
  std::vector<int> complement(int m) const {
    std::vector<int> out;
    for (int p = 0; p < m; ++p)
      if (!contains(p)) out.push_back(p);
    return out;
  }

  friend bool operator==(const Mask&, const Mask&) = default;
};

using FeatureVector = std::array<std::uint8_t, kGridCells>;

// Binary occupancy of the subassembly v over the 27 voxels.
inline FeatureVector voxelize(const Instance& inst, Mask v) {
  FeatureVector f{};
  for (const Part& part : inst.parts) {
    if (!v.contains(part.id)) continue;
    for (const Cell& c : part.cells) f[cell_index(c)] = 1;
  }
  return f;
}

// Structural validity shared by the generator and the file loader: ids are
// 0..M-1 in order, parts are face-connected, and the parts partition the
// full grid. Size balancing and the >=3-cell rule are generator guarantees,
// not load-time requirements (constructed fixtures may violate them).
inline void validate_instance(const Instance& inst) {
  if (inst.grid_dims != std::array<int, 3>{kGridDim, kGridDim, kGridDim})
    throw std::invalid_argument("instance: grid must be 3x3x3");
  if (inst.parts.empty()) throw std::invalid_argument("instance: no parts");
  std::bitset<kGridCells> covered;
  for (std::size_t i = 0; i < inst.parts.size(); ++i) {
    const Part& p = inst.parts[i];
    if (p.id != static_cast<int>(i))
      throw std::invalid_argument("instance: part ids must be 0..M-1 in order");
    if (p.cells.empty())
      throw std::invalid_argument("instance: part " + std::to_string(p.id) + " is empty");
    for (const Cell& c : p.cells) {
      if (!in_grid(c))
        throw std::invalid_argument("instance: part " + std::to_string(p.id) +
                                    " has a cell outside the grid");
      const int idx = cell_index(c);
      if (covered.test(idx))
        throw std::invalid_argument("instance: parts overlap at voxel " + std::to_string(idx));
      covered.set(idx);
    }
    if (!cells_face_connected(p.cells))
      throw std::invalid_argument("instance: part " + std::to_string(p.id) +
                                  " is not face-connected");
  }
  if (covered.count() != kGridCells)
    throw std::invalid_argument("instance: parts cover " + std::to_string(covered.count()) +
                                " of 27 voxels");
}

class GenerationError : public std::runtime_error {
 public:
  GenerationError(int attempts)
      : std::runtime_error("instance generation failed after " + std::to_string(attempts) +
                           " attempts; retry with a different seed"),
        attempts_(attempts) {}
  int attempts() const { return attempts_; }

 private:
  int attempts_;
};

namespace detail {

// Balanced size multiset: sizes differ by at most one and sum to 27.
inline std::vector<int> balanced_sizes(int m) {
  const int q = kGridCells / m, r = kGridCells % m;
  std::vector<int> sizes(m, q);
  for (int i = 0; i < r; ++i) sizes[i] += 1;
  return sizes;
}

// One growth attempt: seed M cells pairwise far apart, then grow each part
// by randomized accretion along face-adjacency until it reaches its size.
inline bool try_partition(int m, const std::vector<int>& sizes, Rng& rng,
                          std::vector<std::vector<Cell>>& out) {
  std::array<int, kGridCells> owner;
  owner.fill(-1);

  // Farthest-point seeding.
  std::vector<int> seeds;
  seeds.push_back(rng.index(kGridCells));
  while (static_cast<int>(seeds.size()) < m) {
    int best = -1, best_d = -1;
    std::vector<int> ties;
    for (int i = 0; i < kGridCells; ++i) {
      if (std::find(seeds.begin(), seeds.end(), i) != seeds.end()) continue;
      const Cell c = cell_from_index(i);
      int d = INT32_MAX;
      for (int s : seeds) {
        const Cell sc = cell_from_index(s);
        d = std::min(d, std::abs(c.x - sc.x) + std::abs(c.y - sc.y) + std::abs(c.z - sc.z));
      }
      if (d > best_d) {
        best_d = d;
        ties = {i};
      } else if (d == best_d) {
        ties.push_back(i);
      }
    }
    best = ties[rng.index(ties.size())];
    seeds.push_back(best);
  }
  for (int p = 0; p < m; ++p) owner[seeds[p]] = p;

  std::vector<int> count(m, 1);
  int assigned = m;
  while (assigned < kGridCells) {
    // Parts still below target size with at least one unassigned face-neighbor.
    std::vector<std::pair<int, int>> frontier;  // (part, cell index)
    for (int i = 0; i < kGridCells; ++i) {
      if (owner[i] < 0) continue;
      const int p = owner[i];
      if (count[p] >= sizes[p]) continue;
      const Cell c = cell_from_index(i);
      for (const Cell& d : face_neighbors()) {
        const Cell n = c + d;
        if (in_grid(n) && owner[cell_index(n)] < 0)
          frontier.emplace_back(p, cell_index(n));
      }
    }
    if (frontier.empty()) return false;  // dead end
    const auto [p, idx] = frontier[rng.index(frontier.size())];
    owner[idx] = p;
    ++count[p];
    ++assigned;
  }
  for (int p = 0; p < m; ++p)
    if (count[p] != sizes[p]) return false;

  out.assign(m, {});
  for (int i = 0; i < kGridCells; ++i) out[owner[i]].push_back(cell_from_index(i));
  return true;
}

}  // namespace detail

// Randomly partitions the 3x3x3 grid into M face-connected parts of balanced
// size. Deterministic per (m, seed). Throws GenerationError after the retry
// budget; callers retry with a fresh seed.
inline Instance generate_instance(int m, std::uint64_t seed, int max_attempts = 200) {
  if (m < 4 || m > 7) throw std::invalid_argument("generate_instance: m must be in {4,5,6,7}");
  const std::vector<int> sizes = detail::balanced_sizes(m);
  Rng rng(derive_seed(seed, 0x77026c));
  std::vector<std::vector<Cell>> cells;
  for (int attempt = 0; attempt < max_attempts; ++attempt) {
    if (!detail::try_partition(m, sizes, rng, cells)) continue;
    Instance inst;
    for (int p = 0; p < m; ++p) {
      Part part;
      part.id = p;
      part.cells = cells[p];
      part.normalize();
      inst.parts.push_back(std::move(part));
    }
    validate_instance(inst);
    return inst;
  }
  throw GenerationError(max_attempts);
}

// ---- instance files ----------------------------------------------------
// One JSON document per instance: {"m": M, "grid": [3,3,3],
// "parts": [{"id": i, "cells": [[x,y,z], ...]}, ...]}

inline nlohmann::json instance_to_json(const Instance& inst) {
  nlohmann::json j;
  j["m"] = inst.m();
  j["grid"] = inst.grid_dims;
  j["parts"] = nlohmann::json::array();
  for (const Part& p : inst.parts) {
    nlohmann::json jp;
    jp["id"] = p.id;
    jp["cells"] = nlohmann::json::array();
    for (const Cell& c : p.cells) jp["cells"].push_back({c.x, c.y, c.z});
    j["parts"].push_back(std::move(jp));
  }
  return j;
}

inline Instance instance_from_json(const nlohmann::json& j) {
  Instance inst;
  try {
    if (!j.contains("m")) throw std::invalid_argument("missing field 'm'");
    if (!j.contains("grid")) throw std::invalid_argument("missing field 'grid'");
    if (!j.contains("parts")) throw std::invalid_argument("missing field 'parts'");
    const auto grid = j.at("grid").get<std::array<int, 3>>();
    inst.grid_dims = grid;
    for (const auto& jp : j.at("parts")) {
      Part p;
      if (!jp.contains("id")) throw std::invalid_argument("part missing field 'id'");
      if (!jp.contains("cells")) throw std::invalid_argument("part missing field 'cells'");
      p.id = jp.at("id").get<int>();
      for (const auto& jc : jp.at("cells")) {
        if (!jc.is_array() || jc.size() != 3)
          throw std::invalid_argument("field 'cells' entries must be [x,y,z] triples");
        p.cells.push_back({jc[0].get<int>(), jc[1].get<int>(), jc[2].get<int>()});
      }
      p.normalize();
      inst.parts.push_back(std::move(p));
    }
    if (j.at("m").get<int>() != inst.m())
      throw std::invalid_argument("field 'm' disagrees with the number of parts");
  } catch (const nlohmann::json::exception& e) {
    throw std::invalid_argument(std::string("instance parse error: ") + e.what());
  }
  validate_instance(inst);
  return inst;
}

inline void save_instance(const Instance& inst, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot open for write: " + path);
  out << instance_to_json(inst).dump(1) << "\n";
  if (!out) throw std::runtime_error("write failed: " + path);
}

inline Instance load_instance(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open: " + path);
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw std::invalid_argument(path + ": instance parse error: " + e.what());
  }
  try {
    return instance_from_json(j);
  } catch (const std::invalid_argument& e) {
    throw std::invalid_argument(path + ": " + e.what());
  }
}

}  // namespace asplan
