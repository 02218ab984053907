#pragma once

#include <vector>

#include "wormpimc/lattice.hpp"

namespace wormpimc {

// Couplings of the layered Hamiltonian
//   H = -J  sum_{layer, <i,j>} a+ a  -  J' sum_{column, <l,l'>} a+ a
//       -V  sum_{column, <l,l'>} n n  -  sum_l mu_l N_l  +  U sum_i n(n-1).
// v_inter is stored as a positive magnitude and applied attractively.
struct ModelParams {
  double j_intra = 1.0;
  double j_inter = 0.0;
  double v_inter = 0.0;
  double u_onsite = 0.0;
  std::vector<double> mu;  // one entry per layer
  int n_max = 1;
  double beta = 1.0;

  double mu_of_layer(int layer) const { return mu.empty() ? 0.0 : mu[layer % (int)mu.size()]; }
  void validate(const LatticeGraph& g) const;  // throws std::runtime_error
};

using Occupations = std::vector<int>;  // one entry per site, 0..n_max

// H0 of the configuration: -V sum_inter n_i n_j + U sum n(n-1) - sum mu_l n.
double diagonal_energy(const Occupations& occ, const ModelParams& p, const LatticeGraph& g);

// <target| H1 |source> for a single hop along `bond`. Nonzero only when the
// states differ at exactly the bond's two sites, one raised by 1 and one
// lowered by 1 within 0..n_max; the value is -J_bond sqrt(n_to^tgt n_from^src)
// where the particle moves from->to.
double hop_matrix_element(const Occupations& target, const Occupations& source, const Bond& bond,
                          const ModelParams& p, const LatticeGraph& g);

// matrix element magnitude for a hop out of `n_from` into `n_to` occupations
// (source-side values); used by incremental weight updates.
double hop_element_value(int n_from_src, int n_to_src, BondKind kind, const ModelParams& p);

}  // namespace wormpimc
