#pragma once

#include <cstdint>
#include <random>
#include <stdexcept>
#include <vector>

#include "assembly.hpp"
#include "fields.hpp"
#include "mesh.hpp"

namespace parasrc {

// Per-slab observed trace values on the Gamma nodes (zero elsewhere),
// together with the noise level that produced them.
struct BoundaryObservation {
  TimeGrid grid;
  double delta = 0.0;
  std::uint64_t seed = 0;
  std::vector<NodalField> slabs;  // slab n at index n-1, full node length

  const NodalField& slab(int n) const { return slabs.at(n - 1); }
  NodalField& slab(int n) { return slabs.at(n - 1); }
};

// L2(Sigma) norm of a slab-constant boundary field: sum_n tau v_n^T B v_n.
inline double sigma_norm(const std::vector<NodalField>& slabs, const TimeGrid& grid, const SparseSymMatrix& bmass) {
  double s = 0.0;
  for (const auto& v : slabs) s += v.dot(bmass * v);
  return std::sqrt(std::max(0.0, grid.tau() * s));
}

inline double sigma_norm(const SpaceTimeField& f, const SparseSymMatrix& bmass) {
  return sigma_norm(f.slabs, f.grid, bmass);
}

namespace detail {

// Deterministic uniform(0,1) independent of the standard library's
// distribution implementation.
class UniformRng {
 public:
  explicit UniformRng(std::uint64_t seed) : eng_(seed) {}
  double next() { return (eng_() >> 11) * 0x1.0p-53; }

 private:
  std::mt19937_64 eng_;
};

}  // namespace detail

// Perturbs an exact slab trace with uniform(0,1) noise at the Gamma nodes,
// rescaled so the L2(Sigma) error equals delta exactly. delta = 0 returns the
// trace unchanged.
inline BoundaryObservation synthesize_observation(const std::vector<NodalField>& exact_trace, const TimeGrid& grid,
                                                  const std::vector<int>& gamma_node_ids,
                                                  const SparseSymMatrix& bmass, double delta, std::uint64_t seed) {
  if (delta < 0.0) throw std::invalid_argument("synthesize_observation: delta must be >= 0");
  if (static_cast<int>(exact_trace.size()) != grid.M)
    throw std::invalid_argument("synthesize_observation: slab count mismatch");

  BoundaryObservation z;
  z.grid = grid;
  z.delta = delta;
  z.seed = seed;
  z.slabs = exact_trace;
  if (delta == 0.0) return z;

  detail::UniformRng rng(seed);
  const int nodes = static_cast<int>(exact_trace.front().size());
  std::vector<NodalField> noise(grid.M, NodalField::Zero(nodes));
  double norm = 0.0;
  while (norm == 0.0) {
    for (int n = 0; n < grid.M; ++n)
      for (int id : gamma_node_ids) noise[n][id] = rng.next();
    norm = sigma_norm(noise, grid, bmass);
  }
  const double scale = delta / norm;
  for (int n = 0; n < grid.M; ++n)
    for (int id : gamma_node_ids) z.slabs[n][id] += scale * noise[n][id];
  return z;
}

}  // namespace parasrc
