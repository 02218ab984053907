#pragma once

#include <cstdint>
#include <vector>

namespace wormpimc {

enum class BondKind : std::uint8_t { intra = 0, inter = 1 };

struct Bond {
  int a = -1;
  int b = -1;
  BondKind kind = BondKind::intra;
};

// M stacked rings/chains of L sites. Site id = layer * L + pos. Intra-layer
// bonds carry hopping J; inter-layer bonds (same column, adjacent layers)
// carry J' hopping and the density-density coupling V.
struct LatticeGraph {
  int n_layers = 1;
  int sites_per_layer = 1;
  bool pbc_intra = true;
  bool pbc_inter = true;
  std::vector<Bond> bonds;                         // unordered pairs, no duplicates
  std::vector<std::vector<int>> neighbors_intra;   // per site
  std::vector<std::vector<int>> neighbors_inter;   // per site

  int n_sites() const { return n_layers * sites_per_layer; }
  int layer_of(int site) const { return site / sites_per_layer; }
  int pos_of(int site) const { return site % sites_per_layer; }
  int site_at(int layer, int pos) const { return layer * sites_per_layer + pos; }

  // minimum-image ring distance within a layer
  int ring_distance(int pos_a, int pos_b) const;
  // layer separation (minimum-image when pbc_inter)
  int layer_distance(int layer_a, int layer_b) const;
  // in-layer distance plus layer separation; the tether metric
  int graph_distance(int site_a, int site_b) const {
    return ring_distance(pos_of(site_a), pos_of(site_b)) +
           layer_distance(layer_of(site_a), layer_of(site_b));
  }
  // signed minimum-image displacement pos_b - pos_a, in (-L/2, L/2]
  int ring_displacement(int pos_a, int pos_b) const;

  bool sites_bonded(int a, int b, BondKind kind) const;
};

// Throws std::runtime_error on invalid extents. A two-layer stack with
// periodic inter-layer wrap would duplicate each column bond; the wrap bond is
// dropped in that case. Same for a two-site ring.
LatticeGraph build_layered_lattice(int n_layers, int sites_per_layer, bool pbc_intra,
                                   bool pbc_inter);

}  // namespace wormpimc
