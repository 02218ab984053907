#pragma once

#include <vector>

#include "wormpimc/lattice.hpp"
#include "wormpimc/model.hpp"
#include "wormpimc/rng.hpp"
#include "wormpimc/worldlines.hpp"

namespace wormpimc {

enum class WormMode { single, indist, per_layer };

// How many worms live in the G sector and which sites each may touch.
// per_layer pins worm k to layer k (one worm per layer) and requires j_inter
// to vanish so the species label is conserved.
struct WormSpec {
  WormMode mode = WormMode::single;
  int n = 1;  // worm count for indist; ignored otherwise

  int n_worms(int n_layers) const;
  int species_of_worm(int k) const { return mode == WormMode::per_layer ? k : 0; }
  bool layer_locked() const { return mode == WormMode::per_layer; }
  void check(const ModelParams& p, const LatticeGraph& g) const;  // throws
};

struct UpdateParams {
  double gamma = 1.0;
  double xi_space = 2.0;
  double xi_time = 0.0;         // <= 0: engine picks 2 / max(J, J')
  double max_shift_window = 0;  // <= 0: engine picks beta / 4
  double p_create = 0.2;
  double p_shift = 0.4;
  double p_kink = 0.4;
  WormSpec worms;
  bool debug_weights = false;  // recompute the full weight after every accepted move
};

// log of the tether factor w <= 1 that keeps the open ends of a multiworm
// configuration near each other: for every same-kind pair of ends,
// graph_distance/xi_space plus cyclic time distance/xi_time, negated.
double tether_log_weight(const std::vector<WormEnd>& ends, const LatticeGraph& g,
                         double beta, double xi_space, double xi_time);

// Two-sided truncated exponential for time offsets on the beta circle;
// normalized density over offsets in (-beta/2, beta/2].
struct TimeKernel {
  double beta = 1.0;
  double xi = 1.0;

  double sample_offset(RngStream& rng) const;
  // dt may be any real; only its min-image distance matters
  double log_density(double dt) const;
};

// exp(-graph_distance/xi) site selection over an allowed set.
class SiteKernel {
 public:
  SiteKernel(const LatticeGraph& g, const std::vector<int>& allowed, int anchor, double xi);
  int sample(RngStream& rng) const;
  double log_prob(int site) const;  // -inf when site is not in the allowed set

 private:
  std::vector<int> sites_;
  std::vector<double> weight_;
  double total_ = 0.0;
};

}  // namespace wormpimc
