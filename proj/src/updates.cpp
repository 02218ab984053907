#include "wormpimc/updates.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>

namespace wormpimc {

int WormSpec::n_worms(int n_layers) const {
  switch (mode) {
    case WormMode::single:
      return 1;
    case WormMode::indist:
      return n;
    case WormMode::per_layer:
      return n_layers;
  }
  return 1;
}

void WormSpec::check(const ModelParams& p, const LatticeGraph& g) const {
  if (mode == WormMode::indist && n < 1)
    throw std::invalid_argument("worm spec: indistinguishable count must be >= 1");
  if (mode == WormMode::per_layer && p.j_inter != 0.0)
    throw std::invalid_argument("worm spec: per-layer worms require j_inter == 0");
  if (n_worms(g.n_layers) < 1) throw std::invalid_argument("worm spec: no worms");
}

double tether_log_weight(const std::vector<WormEnd>& ends, const LatticeGraph& g,
                         double beta, double xi_space, double xi_time) {
  double acc = 0.0;
  for (std::size_t i = 0; i < ends.size(); ++i) {
    for (std::size_t j = i + 1; j < ends.size(); ++j) {
      if (ends[i].head != ends[j].head) continue;
      double dt = std::fabs(ends[i].time - ends[j].time);
      dt = std::min(dt, beta - dt);
      acc -= g.graph_distance(ends[i].site, ends[j].site) / xi_space + dt / xi_time;
    }
  }
  return acc;
}

double TimeKernel::sample_offset(RngStream& rng) const {
  double sign = rng.coin() ? 1.0 : -1.0;
  double cap = 1.0 - std::exp(-beta / (2.0 * xi));
  double m = -xi * std::log1p(-rng.uniform() * cap);
  return sign * m;
}

double TimeKernel::log_density(double dt) const {
  double d = std::fabs(std::remainder(dt, beta));
  double cap = 1.0 - std::exp(-beta / (2.0 * xi));
  return -d / xi - std::log(2.0 * xi * cap);
}

SiteKernel::SiteKernel(const LatticeGraph& g, const std::vector<int>& allowed, int anchor,
                       double xi) {
  sites_ = allowed;
  weight_.reserve(allowed.size());
  for (int s : allowed) {
    double w = std::exp(-g.graph_distance(anchor, s) / xi);
    weight_.push_back(w);
    total_ += w;
  }
  if (sites_.empty() || total_ <= 0.0) throw std::invalid_argument("site kernel: empty support");
}

int SiteKernel::sample(RngStream& rng) const {
  double u = rng.uniform() * total_;
  for (std::size_t k = 0; k + 1 < sites_.size(); ++k) {
    if (u < weight_[k]) return sites_[k];
    u -= weight_[k];
  }
  return sites_.back();
}

double SiteKernel::log_prob(int site) const {
  for (std::size_t k = 0; k < sites_.size(); ++k)
    if (sites_[k] == site) return std::log(weight_[k] / total_);
  return -std::numeric_limits<double>::infinity();
}

}  // namespace wormpimc
