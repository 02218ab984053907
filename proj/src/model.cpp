#include "wormpimc/model.hpp"

#include <cmath>
#include <stdexcept>

namespace wormpimc {

void ModelParams::validate(const LatticeGraph& g) const {
  if (n_max < 1) throw std::runtime_error("n_max must be >= 1");
  if (beta <= 0.0) throw std::runtime_error("beta must be positive");
  if (j_intra < 0.0 || j_inter < 0.0) throw std::runtime_error("hoppings must be >= 0");
  if (v_inter < 0.0) throw std::runtime_error("v_inter is a positive magnitude");
  if (!mu.empty() && (int)mu.size() != g.n_layers)
    throw std::runtime_error("mu must list one value per layer");
}

double diagonal_energy(const Occupations& occ, const ModelParams& p, const LatticeGraph& g) {
  double e = 0.0;
  for (const Bond& b : g.bonds)
    if (b.kind == BondKind::inter) e -= p.v_inter * occ[b.a] * occ[b.b];
  for (int s = 0; s < g.n_sites(); ++s) {
    const int n = occ[s];
    e += p.u_onsite * n * (n - 1);
    e -= p.mu_of_layer(g.layer_of(s)) * n;
  }
  return e;
}

double hop_element_value(int n_from_src, int n_to_src, BondKind kind, const ModelParams& p) {
  const double j = (kind == BondKind::intra) ? p.j_intra : p.j_inter;
  return -j * std::sqrt(double(n_to_src + 1) * double(n_from_src));
}

double hop_matrix_element(const Occupations& target, const Occupations& source, const Bond& bond,
                          const ModelParams& p, const LatticeGraph& g) {
  if (target.size() != source.size() || (int)target.size() != g.n_sites()) return 0.0;
  int from = -1, to = -1;
  for (int s = 0; s < (int)target.size(); ++s) {
    const int d = target[s] - source[s];
    if (d == 0) continue;
    if (d == 1 && to < 0)
      to = s;
    else if (d == -1 && from < 0)
      from = s;
    else
      return 0.0;  // more than one raised/lowered site
  }
  if (from < 0 || to < 0) return 0.0;
  const bool on_bond = (bond.a == from && bond.b == to) || (bond.a == to && bond.b == from);
  if (!on_bond) return 0.0;
  if (target[to] > p.n_max || source[from] < 1) return 0.0;
  return hop_element_value(source[from], source[to], bond.kind, p);
}

}  // namespace wormpimc
