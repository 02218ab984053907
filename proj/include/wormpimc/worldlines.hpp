#pragma once

#include <cstdint>
#include <iosfwd>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "wormpimc/model.hpp"

namespace wormpimc {

enum class EventKind : std::uint8_t { kink_out = 0, kink_in = 1, worm_head = 2, worm_tail = 3 };

inline int event_step(EventKind k) {
  return (k == EventKind::kink_in || k == EventKind::worm_tail) ? +1 : -1;
}

struct Event {
  EventKind kind;
  int partner_site = -1;  // kinks only
  int species = 0;
  std::uint64_t id = 0;  // shared by the two halves of a kink; unique per worm end
  int n_after = 0;       // occupation on [this time, next event)
};

struct WormEnd {
  std::uint64_t id = 0;
  bool head = false;  // head annihilates, tail creates
  int site = -1;
  double time = 0.0;
  int species = 0;
};

struct KinkSpec {
  double time = 0.0;
  int from_site = -1;  // particle leaves
  int to_site = -1;    // particle arrives
  int species = 0;
};

struct PairSpec {
  int site = -1;
  double tail_time = 0.0;
  double head_time = 0.0;
  int species = 0;
  bool raise = true;  // raise: +1 on (tail -> head); lower: -1 on (head -> tail)
};

struct PathWeight {
  double log_magnitude = 0.0;
  int sign = 1;  // 0 when the weight vanishes
  int order = 0; // kink count
};

enum class WlStatus : std::uint8_t { ok, collision, occupancy, geometry, missing };

// Piecewise-constant site worldlines on the imaginary-time circle [0, beta).
// Per site a time-ordered event map; segment occupation is the n_after of the
// segment's left event. Invariants: every event steps its site by +-1
// matching its kind; occupations stay in 0..n_max; the chain closes
// periodically on every site; kink halves share id and time; per species the
// open ends balance (heads == tails).
class Worldlines {
 public:
  Worldlines() = default;
  Worldlines(int n_sites, double beta, int n_max);

  double beta() const { return beta_; }
  int n_max() const { return n_max_; }
  int n_sites() const { return (int)ev_.size(); }

  int occupation_at(int site, double time) const;      // segment right after `time`
  int occupation_before(int site, double time) const;  // segment ending at `time`
  double occupation_integral(int site, double a, double b) const;  // cyclic [a,b)
  double total_occupation_integral(int site) const;

  std::size_t event_count(int site) const { return ev_[site].size(); }
  std::size_t total_event_count() const;
  int kink_count() const { return n_kinks_; }
  const std::vector<WormEnd>& worm_ends() const { return worms_; }
  const WormEnd* find_end(std::uint64_t id) const;
  bool has_event_at(int site, double time) const;
  const std::map<double, Event>& site_events(int site) const { return ev_[site]; }

  // distance (cyclic, forward) from `t` to the next event strictly after it;
  // beta when the site has no other event. `skip` ignores one event id.
  double gap_to_next(int site, double t, std::uint64_t skip = 0) const;
  double gap_to_prev(int site, double t, std::uint64_t skip = 0) const;
  // the event reached by gap_to_next / gap_to_prev, nullptr if none
  const Event* next_event(int site, double t, double* when = nullptr,
                          std::uint64_t skip = 0) const;
  const Event* prev_event(int site, double t, double* when = nullptr,
                          std::uint64_t skip = 0) const;

  // -- mutations: on failure the configuration is unchanged --

  // constant worldline on an event-free site
  WlStatus set_flat(int site, int n);

  struct PairIds {
    std::uint64_t tail = 0, head = 0;
  };
  // place one worm's two ends on a site, toggling the spanned side; the
  // spanned range may cross existing events while bounds hold
  WlStatus place_pair(const PairSpec& spec, PairIds* out = nullptr);
  // inverse of place_pair with the given sense
  WlStatus remove_pair(std::uint64_t tail_id, std::uint64_t head_id, bool raise);
  // which removal senses are currently valid for a same-site pair
  struct RemovalSides {
    bool raise_ok = false, lower_ok = false;
    bool raise_clear = false, lower_clear = false;  // side free of other events
  };
  RemovalSides pair_removal_sides(std::uint64_t tail_id, std::uint64_t head_id) const;

  // slide a worm end to new_time; one side of the sweep must be event-free
  WlStatus move_end(std::uint64_t end_id, double new_time);

  // relocate the end across a bond, inserting the connecting kink at
  // kink_time; `up` means the kink lies cyclically after the end's time with
  // nothing between them on either site
  WlStatus kink_jump(std::uint64_t end_id, int target_site, double kink_time, bool up,
                     std::uint64_t* kink_id = nullptr);
  // inverse: remove the kink adjacent to the end and relocate the end back.
  // When the end and the kink half are each other's only neighbors on the
  // site, both orientations are adjacent but retract different arcs; the
  // two-argument form takes the first that clears, the explicit form commits
  // to one
  WlStatus kink_unjump(std::uint64_t end_id, std::uint64_t kink_id);
  WlStatus kink_unjump(std::uint64_t end_id, std::uint64_t kink_id, bool up);

  // spec-level kink ops: locate the worm end the worldline continuity ties to
  // this kink (head on from-side, tail on to-side) and jump it
  WlStatus insert_kink(const KinkSpec& k, std::uint64_t* kink_id = nullptr);
  WlStatus remove_kink(std::uint64_t kink_id);

  // place/remove a whole list of pairs atomically (all or nothing)
  WlStatus place_worm_ends(const std::vector<PairSpec>& pairs, std::vector<PairIds>* out = nullptr);
  WlStatus remove_worm_ends(const std::vector<std::pair<PairIds, bool>>& pairs_with_sense);

  // integrated H0 change if `site` occupation were bumped by delta on cyclic
  // [a, b); includes the V coupling to inter-layer neighbor worldlines
  double range_energy_delta(int site, double a, double b, int delta, const ModelParams& p,
                            const LatticeGraph& g) const;
  // summed log matrix-element magnitudes of kinks and worm ends lying in
  // cyclic [a, b) on `site` (gamma per end included)
  double range_log_factors(int site, double a, double b, const ModelParams& p,
                           const LatticeGraph& g, double gamma) const;

  double diag_energy_integral(const ModelParams& p, const LatticeGraph& g) const;
  PathWeight compute_path_weight(const ModelParams& p, const LatticeGraph& g,
                                 double gamma = 1.0) const;

  std::vector<std::string> validate(const LatticeGraph* g = nullptr) const;

  std::uint64_t next_id() const { return next_id_; }
  void set_next_id(std::uint64_t v) { next_id_ = v; }

  void save(std::ostream& os) const;
  static Worldlines load(std::istream& is);  // throws std::runtime_error
  bool operator==(const Worldlines& o) const;

  // deterministic wrap into [0, beta)
  double wrap(double t) const;
  // forward cyclic distance a -> b in (0, beta]
  double fwd(double a, double b) const;
  // t strictly inside the forward-cyclic open interval (a, b)
  bool in_open(double a, double b, double t) const;

  // test support: build from explicit parts; throws on inconsistency
  static Worldlines from_parts(int n_sites, double beta, int n_max,
                               const std::vector<int>& anchor_occ,
                               const std::vector<KinkSpec>& kinks,
                               const std::vector<WormEnd>& ends);

 private:
  using EvMap = std::map<double, Event>;
  double beta_ = 1.0;
  int n_max_ = 1;
  std::vector<EvMap> ev_;
  std::vector<int> base_occ_;  // live only while a site has no events; stale otherwise
  std::vector<WormEnd> worms_;
  std::uint64_t next_id_ = 1;
  int n_kinks_ = 0;

  EvMap::const_iterator seg_owner(int site, double t) const;  // segment containing t
  void erase_event(int site, double t);
  // add delta to n_after of every event with time in cyclic [a, b); returns
  // false (no change) if any touched segment would leave 0..n_max
  bool bump_range(int site, double a, double b, int delta);
  bool range_bump_valid(int site, double a, double b, int delta) const;
  WormEnd* find_end_mut(std::uint64_t id);
  friend struct WorldlinesTestAccess;
};

}  // namespace wormpimc
