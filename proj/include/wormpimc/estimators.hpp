#pragma once

#include <array>
#include <cstdint>
#include <iosfwd>
#include <vector>

#include "wormpimc/lattice.hpp"
#include "wormpimc/model.hpp"
#include "wormpimc/stats.hpp"
#include "wormpimc/updates.hpp"
#include "wormpimc/worldlines.hpp"

namespace wormpimc {

// Diagonal observables, recorded only in the Z sector. Raw sample series are
// kept so that merging two accumulators is exactly the accumulator of the
// concatenated streams, bit for bit.
class DiagonalAccumulator {
 public:
  DiagonalAccumulator() = default;
  DiagonalAccumulator(const LatticeGraph& g, const ModelParams& p);

  // one sample of every scalar; throws std::logic_error on a G-sector state
  void record(const Worldlines& wl);
  // equal-time density-density snapshot at tau = 0. Integer sums, so merges
  // commute exactly. Cadence is the caller's business.
  void record_structure(const Worldlines& wl);

  std::size_t n_samples() const { return total_n_.size(); }
  long long n_structure() const { return struct_n_; }

  BlockedStats total_n() const { return blocking_errors(total_n_); }
  BlockedStats filling(int layer) const;
  BlockedStats diag_energy() const { return blocking_errors(e_diag_); }
  BlockedStats kink_count() const { return blocking_errors(kinks_); }
  BlockedStats kinetic_energy() const;  // -<kinks>/beta

  // <n_{l,x} n_{l,x+dx}> averaged over l, x; dx = 0..L/2
  std::vector<double> structure_intra() const;
  // <n_{l,x} n_{l+dl,x}> averaged over columns; dl = 1..max layer distance
  std::vector<double> structure_inter() const;

  const std::vector<double>& total_n_series() const { return total_n_; }
  const std::vector<double>& kink_series() const { return kinks_; }
  const std::vector<double>& diag_energy_series() const { return e_diag_; }

  void merge(const DiagonalAccumulator& o);  // o's stream appended after ours
  void save(std::ostream& os) const;
  static DiagonalAccumulator load(std::istream& is, const LatticeGraph& g, const ModelParams& p);

 private:
  LatticeGraph g_;
  ModelParams p_;
  std::vector<double> total_n_, e_diag_, kinks_;
  std::vector<std::vector<double>> fill_;  // per layer
  std::vector<long long> s_intra_, s_inter_;
  long long struct_n_ = 0;
};

struct MeanErr {
  double mean = 0.0;
  double err = 0.0;
};

// Normalized binned curve with per-bin jackknife errors and raw tallies.
struct Curve {
  std::vector<double> x, value, sigma;
  std::vector<long long> count;  // unweighted records per bin
};

struct TableEntry {
  std::array<int, 4> sites{-1, -1, -1, -1};  // green: {head, tail}; pair: {h1, t1, h2, t2}
  double value = 0.0;
  double sigma = 0.0;
  long long count = 0;
};

enum class DnMode : int {
  displacements = 0,  // in-layer end displacements: d, f1/f2, symmetry channels
  green_table = 1,    // site-resolved 1-worm table, matches integrated_green
  pair_table = 2,     // site-resolved 2-worm tuple table, matches integrated_two_worm
};

// G-sector density-matrix statistics. Every record carries weight 1/w so the
// tether bias divides out; Z-sector visits are counted for the absolute
// normalization of the site tables. Raw records are kept (24 bytes apiece)
// for exact merges.
class DnHistogram {
 public:
  DnHistogram() = default;
  DnHistogram(DnMode mode, const LatticeGraph& g, const WormSpec& spec, double beta, double gamma,
              double xi_space, double xi_time);

  void record_z() { ++n_z_; }
  // throws std::logic_error when the state's worm multiset does not match the spec
  void record(const Worldlines& wl);
  // raw entry: id-ordered ends (tail, head per worm) plus their tether log-weight
  void record_ends(const std::vector<WormEnd>& ends, double log_w);

  DnMode mode() const { return mode_; }
  std::uint64_t n_z() const { return n_z_; }
  std::size_t n_records() const { return recs_.size(); }
  int n_worms() const { return n_worms_; }

  // mean min-image separation over same-kind end pairs (all pairs pooled),
  // jackknifed; channel >= 0 restricts to one pair. Throws on no data.
  MeanErr mean_end_distance(bool heads = true, int channel = -1) const;
  // normalized |X| histogram of one pair channel (all pooled when channel < 0)
  Curve separation_curve(bool heads = true, int channel = -1) const;
  // signed min-image profile; kind 0: head-head, 1: tail-tail, 2: tail->head
  Curve signed_profile(int kind, int channel) const;
  // layer-locked N=3 chain profiles
  Curve f1() const;  // heads of worms 0 and 1
  Curve f2() const;  // worm 0 tail to head
  Curve f1_pair(int a, int b) const;
  Curve f2_of(int worm) const;

  // site tables normalized by the Z count: green S/(N_Z gamma^2 beta),
  // pair S/(N_Z gamma^4); only occupied bins are returned
  std::vector<TableEntry> table() const;

  void merge(const DnHistogram& o);
  void save(std::ostream& os) const;
  static DnHistogram load(std::istream& is, const LatticeGraph& g);

 private:
  struct Rec {
    double invw = 1.0;
    std::array<std::int8_t, 3> hh{}, tt{}, th{};
    std::uint32_t packed = 0;
  };

  Curve fold_curve(int kind, int channel) const;
  void check_meta(const DnHistogram& o) const;
  int pair_count() const { return n_worms_ == 3 ? 3 : (n_worms_ == 2 ? 1 : 0); }

  DnMode mode_ = DnMode::displacements;
  int n_worms_ = 1;
  bool layer_locked_ = false;
  int layers_ = 1, spl_ = 1;
  double beta_ = 1.0, gamma_ = 1.0, xi_s_ = 2.0, xi_t_ = 1.0;
  LatticeGraph g_;
  std::uint64_t n_z_ = 0;
  std::vector<Rec> recs_;
};

struct DecayFit {
  enum class Model { exponential, algebraic, inconclusive, no_fit };
  Model preferred = Model::no_fit;
  double rate = 0.0, rate_err = 0.0;          // e^{-rate |X|}
  double exponent = 0.0, exponent_err = 0.0;  // |X|^{-exponent}
  double chi2_exp = 0.0, chi2_alg = 0.0;
  int n_bins_used = 0;
};

// Weighted least squares in log and log-log space over the bins with
// relative error < 50% and x > 0; the preferred model needs a 20% residual
// margin, otherwise the fit is inconclusive. Fewer than 6 usable bins: no_fit.
DecayFit fit_decay(const Curve& c);

}  // namespace wormpimc
