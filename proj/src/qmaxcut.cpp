#include "nstab/qmaxcut.hpp"

#include <cmath>
#include <fstream>
#include <set>
#include <sstream>
#include <stdexcept>
#include <thread>

namespace nstab::qmaxcut {

void WeightedGraph::validate() const {
  if (n < 1) throw std::domain_error("WeightedGraph: n must be >= 1");
  if (w.rows() != n || w.cols() != n)
    throw std::domain_error("WeightedGraph: weight matrix shape");
  for (int i = 0; i < n; ++i) {
    if (w(i, i) != 0.0)
      throw std::domain_error("WeightedGraph: diagonal must be zero");
    for (int j = 0; j < n; ++j) {
      if (w(i, j) < 0.0)
        throw std::domain_error("WeightedGraph: weights must be nonnegative");
      if (w(i, j) != w(j, i))
        throw std::domain_error("WeightedGraph: weights must be symmetric");
    }
  }
}

WeightedGraph WeightedGraph::parse_edge_list(std::istream& in) {
  struct Edge {
    int i, j;
    double w;
  };
  std::vector<Edge> edges;
  std::set<std::pair<int, int>> seen;
  int declared_n = 0;
  int max_vertex = -1;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const size_t hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    std::istringstream ls(line);
    std::string first;
    if (!(ls >> first)) continue;
    if (first == "n") {
      if (!(ls >> declared_n) || declared_n < 1)
        throw std::runtime_error("edge list line " + std::to_string(lineno) +
                                 ": bad vertex count");
      continue;
    }
    Edge e{};
    try {
      e.i = std::stoi(first);
    } catch (...) {
      throw std::runtime_error("edge list line " + std::to_string(lineno) +
                               ": expected vertex index");
    }
    if (!(ls >> e.j >> e.w))
      throw std::runtime_error("edge list line " + std::to_string(lineno) +
                               ": expected 'i j w'");
    if (e.i < 0 || e.j < 0)
      throw std::runtime_error("edge list line " + std::to_string(lineno) +
                               ": negative vertex index");
    if (e.i == e.j)
      throw std::runtime_error("edge list line " + std::to_string(lineno) +
                               ": self loops not allowed");
    if (e.w < 0.0)
      throw std::runtime_error("edge list line " + std::to_string(lineno) +
                               ": negative weight");
    const auto key = std::minmax(e.i, e.j);
    if (!seen.insert(key).second)
      throw std::runtime_error("edge list line " + std::to_string(lineno) +
                               ": duplicate edge");
    max_vertex = std::max({max_vertex, e.i, e.j});
    edges.push_back(e);
  }
  WeightedGraph g;
  g.n = std::max(declared_n, max_vertex + 1);
  if (g.n < 1) throw std::runtime_error("edge list: no vertices");
  g.w = Eigen::MatrixXd::Zero(g.n, g.n);
  for (const Edge& e : edges) {
    g.w(e.i, e.j) = e.w;
    g.w(e.j, e.i) = e.w;
  }
  g.validate();
  return g;
}

WeightedGraph WeightedGraph::load_edge_list(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open graph file: " + path);
  return parse_edge_list(in);
}

double product_state_energy(const WeightedGraph& graph,
                            const BlochAssignment& bloch) {
  graph.validate();
  if (static_cast<int>(bloch.size()) != graph.n)
    throw std::domain_error("product_state_energy: assignment size mismatch");
  for (const Eigen::Vector3d& a : bloch)
    if (std::fabs(a.norm() - 1.0) > 1e-12)
      throw std::domain_error("product_state_energy: non-unit Bloch vector");
  double total = 0.0;
  for (int i = 0; i < graph.n; ++i)
    for (int j = 0; j < graph.n; ++j)
      if (graph.w(i, j) != 0.0)
        total += graph.w(i, j) * (1.0 - bloch[i].dot(bloch[j]));
  return total;
}

double tensor_oracle_energy(const WeightedGraph& graph,
                            const std::vector<Spinor>& spinors) {
  graph.validate();
  if (graph.n > 12)
    throw std::domain_error("tensor_oracle_energy: n > 12 not supported");
  if (static_cast<int>(spinors.size()) != graph.n)
    throw std::domain_error("tensor_oracle_energy: spinor count mismatch");
  for (const Spinor& s : spinors)
    if (std::fabs(s.norm() - 1.0) > 1e-12)
      throw std::domain_error("tensor_oracle_energy: non-unit spinor");

  const int n = graph.n;
  const size_t dim = size_t{1} << n;
  // u_b = prod_i (u_i)[bit_i(b)], qubit i on bit (n-1-i).
  std::vector<std::complex<double>> u(dim);
  for (size_t b = 0; b < dim; ++b) {
    std::complex<double> amp = 1.0;
    for (int i = 0; i < n; ++i) amp *= spinors[i][(b >> (n - 1 - i)) & 1];
    u[b] = amp;
  }

  std::complex<double> total = 0.0;
  for (int i = 0; i < n; ++i) {
    for (int j = i + 1; j < n; ++j) {
      if (graph.w(i, j) == 0.0) continue;
      const size_t mi = size_t{1} << (n - 1 - i);
      const size_t mj = size_t{1} << (n - 1 - j);
      std::complex<double> xx = 0.0, yy = 0.0;
      double zz = 0.0;
      for (size_t b = 0; b < dim; ++b) {
        const double zi = (b & mi) ? -1.0 : 1.0;
        const double zj = (b & mj) ? -1.0 : 1.0;
        zz += (zi * zj) * std::norm(u[b]);
        const std::complex<double> cross = std::conj(u[b]) * u[b ^ mi ^ mj];
        xx += cross;
        yy += -(zi * zj) * cross;  // Y|b> = i(-1)^b |1-b> per factor
      }
      // Ordered pairs (i,j) and (j,i) contribute equally.
      total += 2.0 * graph.w(i, j) * (1.0 - xx - yy - zz);
    }
  }
  if (std::fabs(total.imag()) > 1e-9)
    throw std::runtime_error("tensor_oracle_energy: non-real energy");
  return total.real();
}

Spinor spinor_from_bloch(const Eigen::Vector3d& a) {
  if (std::fabs(a.norm() - 1.0) > 1e-12)
    throw std::domain_error("spinor_from_bloch: Bloch vector must be unit");
  const double theta = std::acos(std::clamp(a.z(), -1.0, 1.0));
  const double phi = std::atan2(a.y(), a.x());
  Spinor s;
  s << std::cos(0.5 * theta),
      std::polar(std::sin(0.5 * theta), phi);
  return s;
}

Eigen::Vector3d bloch_from_spinor(const Spinor& s) {
  const double norm2 = std::norm(s[0]) + std::norm(s[1]);
  if (norm2 < 1e-300)
    throw std::domain_error("bloch_from_spinor: zero spinor");
  const std::complex<double> cross = std::conj(s[0]) * s[1];
  return Eigen::Vector3d(2.0 * cross.real(), 2.0 * cross.imag(),
                         std::norm(s[0]) - std::norm(s[1])) /
         norm2;
}

LocalSearchResult local_search(const WeightedGraph& graph, SeededStream& stream,
                               int max_sweeps) {
  graph.validate();
  LocalSearchResult res;
  res.assignment.resize(graph.n);
  for (Eigen::Vector3d& a : res.assignment) {
    const double z = 1.0 - 2.0 * stream.next_uniform();
    const double ang = 2.0 * M_PI * stream.next_uniform();
    const double rxy = std::sqrt(std::max(0.0, 1.0 - z * z));
    a = {rxy * std::cos(ang), rxy * std::sin(ang), z};
  }
  std::vector<bool> flagged(graph.n, false);
  double prev = product_state_energy(graph, res.assignment);
  res.energy_trace.push_back(prev);
  for (int sweep = 0; sweep < max_sweeps; ++sweep) {
    for (int i = 0; i < graph.n; ++i) {
      Eigen::Vector3d s = Eigen::Vector3d::Zero();
      for (int j = 0; j < graph.n; ++j)
        if (graph.w(i, j) != 0.0) s += graph.w(i, j) * res.assignment[j];
      const double norm = s.norm();
      if (norm < 1e-14) {
        flagged[i] = true;  // isolated or perfectly balanced neighborhood
        continue;
      }
      res.assignment[i] = -s / norm;
    }
    const double energy = product_state_energy(graph, res.assignment);
    res.energy_trace.push_back(energy);
    ++res.sweeps;
    if (energy - prev < 1e-13) {
      prev = energy;
      break;
    }
    prev = energy;
  }
  res.energy = prev;
  for (int i = 0; i < graph.n; ++i)
    if (flagged[i]) res.flagged.push_back(i);
  return res;
}

LocalSearchResult local_search_multi(const WeightedGraph& graph,
                                     std::uint64_t seed, int restarts,
                                     int max_sweeps, int workers) {
  if (restarts < 1)
    throw std::domain_error("local_search_multi: restarts >= 1");
  std::vector<LocalSearchResult> results(restarts);
  auto run_range = [&](int first, int stride) {
    for (int r = first; r < restarts; r += stride) {
      SeededStream stream(seed, static_cast<std::uint64_t>(r));
      results[r] = local_search(graph, stream, max_sweeps);
    }
  };
  if (workers <= 1) {
    run_range(0, 1);
  } else {
    std::vector<std::thread> pool;
    pool.reserve(workers);
    for (int w = 0; w < workers; ++w)
      pool.emplace_back(run_range, w, workers);
    for (auto& t : pool) t.join();
  }
  int best = 0;
  for (int r = 1; r < restarts; ++r)
    if (results[r].energy > results[best].energy) best = r;
  return results[best];
}

double maxcut_energy(const WeightedGraph& graph, const SpinState& spins) {
  graph.validate();
  if (static_cast<int>(spins.size()) != graph.n)
    throw std::domain_error("maxcut_energy: spin count mismatch");
  for (int z : spins)
    if (z != 1 && z != -1)
      throw std::domain_error("maxcut_energy: spins must be +-1");
  double total = 0.0;
  for (int i = 0; i < graph.n; ++i)
    for (int j = 0; j < graph.n; ++j)
      if (graph.w(i, j) != 0.0)
        total += graph.w(i, j) * (1.0 - spins[i] * spins[j]);
  return total;
}

MaxCutResult brute_force_maxcut(const WeightedGraph& graph) {
  graph.validate();
  if (graph.n > 20)
    throw std::domain_error("brute_force_maxcut: n > 20 not supported");
  MaxCutResult best;
  best.spins.assign(graph.n, 1);
  best.energy = 0.0;
  SpinState spins(graph.n);
  const std::uint64_t half = std::uint64_t{1} << (graph.n - 1);
  for (std::uint64_t mask = 0; mask < half; ++mask) {
    // Vertex 0 fixed to +1: energies are invariant under a global flip.
    spins[0] = 1;
    for (int i = 1; i < graph.n; ++i)
      spins[i] = (mask >> (i - 1)) & 1 ? -1 : 1;
    const double e = maxcut_energy(graph, spins);
    if (e > best.energy) {
      best.energy = e;
      best.spins = spins;
    }
  }
  return best;
}

}  // namespace nstab::qmaxcut
