#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <vector>

#include "wormpimc/updates.hpp"

namespace wormpimc {

enum class Sector : std::uint8_t { Z = 0, G = 1 };

enum class MoveKind : std::uint8_t {
  create = 0,
  annihilate = 1,
  shift = 2,
  kink_insert = 3,
  kink_remove = 4,
};
constexpr int kMoveKinds = 5;

struct MoveCounters {
  std::uint64_t proposed[kMoveKinds] = {};
  std::uint64_t accepted[kMoveKinds] = {};
  std::uint64_t steps = 0;

  std::uint64_t proposed_total() const {
    std::uint64_t s = 0;
    for (auto v : proposed) s += v;
    return s;
  }
  std::uint64_t accepted_total() const {
    std::uint64_t s = 0;
    for (auto v : accepted) s += v;
    return s;
  }
};

// Scripted proposals. metropolis_step samples these through the propose_*
// functions; tests build them directly to audit single transitions.
struct CreateChoice {
  std::vector<PairSpec> pairs;  // one per worm, creation order
};
struct AnnihilateChoice {
  std::vector<bool> raise_sense;  // per worm; consulted only when both senses work
};
struct ShiftChoice {
  int end_index = 0;  // into worm_ends() order
  double new_time = 0.0;
};
struct KinkInsertChoice {
  int end_index = 0;
  bool up = true;  // kink cyclically after the end
  int target_site = -1;
  double kink_time = 0.0;
};
struct KinkRemoveChoice {
  int end_index = 0;
  bool up = true;
};

// One Markov chain: worldlines configuration plus its random stream and
// acceptance bookkeeping. Moves preserve the path-weight invariants checked
// by Worldlines::validate; every accepted move keeps sign == 1.
class Engine {
 public:
  Engine(const LatticeGraph& g, const ModelParams& p, const UpdateParams& u, std::uint64_t seed,
         std::uint64_t chain);

  void metropolis_step();
  // hook(const Engine&) runs after every sweep
  void run_sweeps(int n);
  template <class Hook>
  void run_sweeps(int n, Hook&& hook) {
    for (int k = 0; k < n; ++k) {
      for (int s = 0; s < steps_per_sweep_; ++s) metropolis_step();
      hook(static_cast<const Engine&>(*this));
    }
  }
  int steps_per_sweep() const { return steps_per_sweep_; }

  Sector sector() const { return wl_.worm_ends().empty() ? Sector::Z : Sector::G; }
  const Worldlines& worldlines() const { return wl_; }
  const LatticeGraph& graph() const { return g_; }
  const ModelParams& model() const { return p_; }
  const UpdateParams& update_params() const { return u_; }
  const MoveCounters& counters() const { return c_; }
  double tether_log_w() const;
  double xi_time() const { return xi_t_; }
  double shift_window() const { return shift_w_; }
  int n_worms() const { return n_worms_; }

  // Evaluate one move: returns the log acceptance ratio and leaves the move
  // applied (undo via rollback), or nullopt with the state untouched when the
  // proposal is outside its support or hits zero weight.
  std::optional<double> try_create(const CreateChoice& ch);
  std::optional<double> try_annihilate(const AnnihilateChoice& ch);
  std::optional<double> try_shift(const ShiftChoice& ch);
  std::optional<double> try_kink_insert(const KinkInsertChoice& ch);
  std::optional<double> try_kink_remove(const KinkRemoveChoice& ch);
  void rollback();  // undo the move left applied by the last try_*
  void commit();    // forget the undo record instead
  // weight + tether part of the last try_* result (debug cross-checks)
  double last_weight_delta() const { return last_dw_; }

  // proposal samplers used by metropolis_step
  CreateChoice propose_create();
  AnnihilateChoice propose_annihilate();
  ShiftChoice propose_shift();
  KinkInsertChoice propose_kink_insert();
  KinkRemoveChoice propose_kink_remove();

  const std::vector<int>& allowed_sites(int species) const;
  std::vector<int> allowed_targets(int site, int species) const;

  void save_state(std::ostream& os) const;
  void load_state(std::istream& is);  // throws on mismatch

 private:
  struct RemovedPair {
    PairSpec spec;
    Worldlines::PairIds ids;
  };
  struct Undo {
    MoveKind kind;
    std::vector<std::pair<Worldlines::PairIds, bool>> created;
    std::vector<RemovedPair> removed;
    std::uint64_t saved_next_id = 0;
    std::uint64_t end_id = 0;
    double old_time = 0.0;
    std::uint64_t kink_id = 0;
    int rejump_site = -1;
    double rejump_time = 0.0;
    bool up = true;
  };

  std::optional<double> add_pair_delta(const PairSpec& spec, Worldlines::PairIds* ids);
  std::optional<double> remove_pair_delta(const WormEnd& wt, const WormEnd& wh, bool raise);
  double end_log_factor(int site, double t) const;
  double kink_log_element(int site, double t) const;
  double create_log_density(const std::vector<PairSpec>& pairs) const;
  double signed_offset(double t, double t0) const;
  void bump(MoveKind k, std::optional<double> ln_r);

  const LatticeGraph& g_;
  ModelParams p_;
  UpdateParams u_;
  Worldlines wl_;
  RngStream rng_;
  MoveCounters c_;
  int steps_per_sweep_ = 1;
  int n_worms_ = 1;
  double xi_t_ = 1.0;
  double shift_w_ = 0.25;
  std::vector<std::vector<int>> allowed_;  // per species
  std::optional<Undo> undo_;
  double last_dw_ = 0.0;
};

}  // namespace wormpimc
