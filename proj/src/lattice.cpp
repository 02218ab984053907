#include "wormpimc/lattice.hpp"

#include <cmath>
#include <cstdlib>
#include <stdexcept>

namespace wormpimc {

int LatticeGraph::ring_distance(int pos_a, int pos_b) const {
  int d = std::abs(pos_a - pos_b);
  if (pbc_intra) d = std::min(d, sites_per_layer - d);
  return d;
}

int LatticeGraph::layer_distance(int layer_a, int layer_b) const {
  int d = std::abs(layer_a - layer_b);
  if (pbc_inter && n_layers > 1) d = std::min(d, n_layers - d);
  return d;
}

int LatticeGraph::ring_displacement(int pos_a, int pos_b) const {
  int d = pos_b - pos_a;
  if (pbc_intra) {
    const int L = sites_per_layer;
    d = ((d % L) + L) % L;
    if (d > L / 2) d -= L;
  }
  return d;
}

bool LatticeGraph::sites_bonded(int a, int b, BondKind kind) const {
  const auto& nb = (kind == BondKind::intra) ? neighbors_intra[a] : neighbors_inter[a];
  for (int s : nb)
    if (s == b) return true;
  return false;
}

LatticeGraph build_layered_lattice(int n_layers, int sites_per_layer, bool pbc_intra,
                                   bool pbc_inter) {
  if (n_layers < 1 || sites_per_layer < 1)
    throw std::runtime_error("lattice extents must be positive");
  LatticeGraph g;
  g.n_layers = n_layers;
  g.sites_per_layer = sites_per_layer;
  g.pbc_intra = pbc_intra;
  g.pbc_inter = pbc_inter;
  const int n = g.n_sites();
  g.neighbors_intra.assign(n, {});
  g.neighbors_inter.assign(n, {});

  auto add_bond = [&g](int a, int b, BondKind kind) {
    for (const Bond& e : g.bonds)
      if ((e.a == a && e.b == b) || (e.a == b && e.b == a)) return;  // dedup wrap bonds
    g.bonds.push_back({a, b, kind});
    if (kind == BondKind::intra) {
      g.neighbors_intra[a].push_back(b);
      g.neighbors_intra[b].push_back(a);
    } else {
      g.neighbors_inter[a].push_back(b);
      g.neighbors_inter[b].push_back(a);
    }
  };

  for (int l = 0; l < n_layers; ++l) {
    for (int x = 0; x + 1 < sites_per_layer; ++x)
      add_bond(g.site_at(l, x), g.site_at(l, x + 1), BondKind::intra);
    if (pbc_intra && sites_per_layer > 1)
      add_bond(g.site_at(l, sites_per_layer - 1), g.site_at(l, 0), BondKind::intra);
  }
  for (int x = 0; x < sites_per_layer; ++x) {
    for (int l = 0; l + 1 < n_layers; ++l)
      add_bond(g.site_at(l, x), g.site_at(l + 1, x), BondKind::inter);
    if (pbc_inter && n_layers > 1)
      add_bond(g.site_at(n_layers - 1, x), g.site_at(0, x), BondKind::inter);
  }
  return g;
}

}  // namespace wormpimc
