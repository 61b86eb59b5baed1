#pragma once

#include <Eigen/Dense>
#include <complex>
#include <iosfwd>
#include <string>
#include <vector>

#include "nstab/rng.hpp"

namespace nstab::qmaxcut {

/// Nonnegative symmetric edge weights with zero diagonal.
struct WeightedGraph {
  int n = 0;
  Eigen::MatrixXd w;

  void validate() const;
  /// Edge-list text: lines "i j w" (0-indexed, undirected, duplicates
  /// rejected); an optional "n N" line declares the vertex count so isolated
  /// vertices can exist.
  static WeightedGraph parse_edge_list(std::istream& in);
  static WeightedGraph load_edge_list(const std::string& path);
};

using BlochAssignment = std::vector<Eigen::Vector3d>;
using SpinState = std::vector<int>;  // +1 / -1 per vertex
using Spinor = Eigen::Vector2cd;

/// sum_{i,j} w_ij (1 - <a_i, a_j>) over ordered pairs (both (i,j) and (j,i)
/// count, matching the Hamiltonian's double sum; a factor 2 against
/// per-edge conventions).
double product_state_energy(const WeightedGraph& graph,
                            const BlochAssignment& bloch);

/// u* [ sum_{i,j} w_ij (I - X_i X_j - Y_i Y_j - Z_i Z_j) ] u for the product
/// state u = u_1 x ... x u_n on the full 2^n space; n <= 12.
double tensor_oracle_energy(const WeightedGraph& graph,
                            const std::vector<Spinor>& spinors);

/// Bloch sphere <-> spinor correspondence; bloch_from_spinor is invariant
/// under a global phase and rejects the zero spinor.
Spinor spinor_from_bloch(const Eigen::Vector3d& a);
Eigen::Vector3d bloch_from_spinor(const Spinor& s);

struct LocalSearchResult {
  BlochAssignment assignment;
  double energy = 0.0;
  std::vector<double> energy_trace;  // per sweep, nondecreasing
  std::vector<int> flagged;          // vertices with zero neighborhood sum
  int sweeps = 0;
};

/// Coordinate ascent a_i <- -(sum_j w_ij a_j)/|.| from a random start.
LocalSearchResult local_search(const WeightedGraph& graph, SeededStream& stream,
                               int max_sweeps = 200);

/// Best of `restarts` runs with per-restart streams (seed, restart index).
LocalSearchResult local_search_multi(const WeightedGraph& graph,
                                     std::uint64_t seed, int restarts,
                                     int max_sweeps = 200, int workers = 1);

/// sum_{i,j} w_ij (1 - z_i z_j) over ordered pairs.
double maxcut_energy(const WeightedGraph& graph, const SpinState& spins);

struct MaxCutResult {
  SpinState spins;
  double energy = 0.0;
};

/// Exhaustive enumeration up to global spin flip; n <= 20.
MaxCutResult brute_force_maxcut(const WeightedGraph& graph);

}  // namespace nstab::qmaxcut
