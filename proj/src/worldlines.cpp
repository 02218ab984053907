#include "wormpimc/worldlines.hpp"

#include <algorithm>
#include <cassert>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <cstring>
#include <istream>
#include <limits>
#include <ostream>
#include <sstream>
#include <stdexcept>

namespace wormpimc {

namespace {

std::string hexd(double v) {
  char buf[48];
  std::snprintf(buf, sizeof buf, "%a", v);
  return buf;
}

double parse_hexd(const std::string& s) {
  const char* c = s.c_str();
  char* end = nullptr;
  double v = std::strtod(c, &end);
  if (end != c + s.size()) throw std::runtime_error("worldlines: bad float token '" + s + "'");
  return v;
}

}  // namespace

Worldlines::Worldlines(int n_sites, double beta, int n_max)
    : beta_(beta), n_max_(n_max), ev_(n_sites), base_occ_(n_sites, 0) {
  if (n_sites <= 0 || beta <= 0 || n_max < 1) throw std::runtime_error("worldlines: bad dimensions");
}

double Worldlines::wrap(double t) const {
  t -= beta_ * std::floor(t / beta_);
  if (t >= beta_) t -= beta_;
  if (t < 0) t = 0;
  return t;
}

double Worldlines::fwd(double a, double b) const {
  double d = b - a;
  if (d <= 0) d += beta_;
  return d;
}

bool Worldlines::in_open(double a, double b, double t) const {
  if (t == a || t == b) return false;
  return fwd(a, t) < fwd(a, b);
}

Worldlines::EvMap::const_iterator Worldlines::seg_owner(int site, double t) const {
  const EvMap& m = ev_[site];
  auto it = m.upper_bound(t);
  if (it == m.begin()) it = m.end();
  --it;
  return it;
}

int Worldlines::occupation_at(int site, double time) const {
  if (ev_[site].empty()) return base_occ_[site];
  return seg_owner(site, time)->second.n_after;
}

int Worldlines::occupation_before(int site, double time) const {
  const EvMap& m = ev_[site];
  if (m.empty()) return base_occ_[site];
  auto it = m.lower_bound(time);
  if (it == m.begin()) it = m.end();
  --it;
  return it->second.n_after;
}

const Event* Worldlines::next_event(int site, double t, double* when, std::uint64_t skip) const {
  const EvMap& m = ev_[site];
  if (m.empty()) return nullptr;
  auto it = m.upper_bound(t);
  for (std::size_t hops = 0; hops <= m.size(); ++hops) {
    if (it == m.end()) it = m.begin();
    if (skip == 0 || it->second.id != skip) {
      if (when) *when = it->first;
      return &it->second;
    }
    ++it;
  }
  return nullptr;
}

const Event* Worldlines::prev_event(int site, double t, double* when, std::uint64_t skip) const {
  const EvMap& m = ev_[site];
  if (m.empty()) return nullptr;
  auto it = m.lower_bound(t);
  for (std::size_t hops = 0; hops <= m.size(); ++hops) {
    if (it == m.begin()) it = m.end();
    --it;
    if (skip == 0 || it->second.id != skip) {
      if (when) *when = it->first;
      return &it->second;
    }
  }
  return nullptr;
}

double Worldlines::gap_to_next(int site, double t, std::uint64_t skip) const {
  double when;
  const Event* e = next_event(site, t, &when, skip);
  return e ? fwd(t, when) : beta_;
}

double Worldlines::gap_to_prev(int site, double t, std::uint64_t skip) const {
  double when;
  const Event* e = prev_event(site, t, &when, skip);
  return e ? fwd(when, t) : beta_;
}

bool Worldlines::has_event_at(int site, double time) const {
  return ev_[site].count(time) != 0;
}

std::size_t Worldlines::total_event_count() const {
  std::size_t n = 0;
  for (const auto& m : ev_) n += m.size();
  return n;
}

const WormEnd* Worldlines::find_end(std::uint64_t id) const {
  for (const auto& w : worms_)
    if (w.id == id) return &w;
  return nullptr;
}

WormEnd* Worldlines::find_end_mut(std::uint64_t id) {
  for (auto& w : worms_)
    if (w.id == id) return &w;
  return nullptr;
}

double Worldlines::occupation_integral(int site, double a, double b) const {
  if (a == b) return 0.0;
  const EvMap& m = ev_[site];
  double len = fwd(a, b);
  if (m.empty()) return base_occ_[site] * len;
  double acc = 0.0, cur_t = a;
  int cur_n = occupation_at(site, a);
  auto visit = [&](EvMap::const_iterator it) {
    acc += cur_n * fwd(cur_t, it->first);
    cur_n = it->second.n_after;
    cur_t = it->first;
  };
  // events strictly inside (a, b)
  if (a < b) {
    for (auto it = m.upper_bound(a); it != m.end() && it->first < b; ++it) visit(it);
  } else {
    for (auto it = m.upper_bound(a); it != m.end(); ++it) visit(it);
    for (auto it = m.begin(); it != m.end() && it->first < b; ++it) visit(it);
  }
  acc += cur_n * (cur_t == a ? len : fwd(cur_t, b));
  return acc;
}

double Worldlines::total_occupation_integral(int site) const {
  const EvMap& m = ev_[site];
  if (m.empty()) return base_occ_[site] * beta_;
  double acc = 0.0;
  for (auto it = m.begin(); it != m.end(); ++it) {
    auto nx = std::next(it);
    double until = (nx == m.end()) ? m.begin()->first : nx->first;
    acc += it->second.n_after * fwd(it->first, until);
  }
  return acc;
}

void Worldlines::erase_event(int site, double t) {
  EvMap& m = ev_[site];
  auto it = m.find(t);
  assert(it != m.end());
  if (m.size() == 1) base_occ_[site] = it->second.n_after;
  m.erase(it);
}

bool Worldlines::range_bump_valid(int site, double a, double b, int delta) const {
  const EvMap& m = ev_[site];
  bool ok = true;
  auto check = [&](EvMap::const_iterator it) {
    int v = it->second.n_after + delta;
    if (v < 0 || v > n_max_) ok = false;
  };
  if (a < b) {
    for (auto it = m.lower_bound(a); it != m.end() && it->first < b; ++it) check(it);
  } else {
    for (auto it = m.lower_bound(a); it != m.end(); ++it) check(it);
    for (auto it = m.begin(); it != m.end() && it->first < b; ++it) check(it);
  }
  return ok;
}

bool Worldlines::bump_range(int site, double a, double b, int delta) {
  if (!range_bump_valid(site, a, b, delta)) return false;
  EvMap& m = ev_[site];
  auto apply = [&](EvMap::iterator it) { it->second.n_after += delta; };
  if (a < b) {
    for (auto it = m.lower_bound(a); it != m.end() && it->first < b; ++it) apply(it);
  } else {
    for (auto it = m.lower_bound(a); it != m.end(); ++it) apply(it);
    for (auto it = m.begin(); it != m.end() && it->first < b; ++it) apply(it);
  }
  return true;
}

WlStatus Worldlines::set_flat(int site, int n) {
  if (site < 0 || site >= n_sites()) return WlStatus::geometry;
  if (!ev_[site].empty()) return WlStatus::collision;
  if (n < 0 || n > n_max_) return WlStatus::occupancy;
  base_occ_[site] = n;
  return WlStatus::ok;
}

WlStatus Worldlines::place_pair(const PairSpec& spec, PairIds* out) {
  int s = spec.site;
  if (s < 0 || s >= n_sites()) return WlStatus::geometry;
  double tt = wrap(spec.tail_time), th = wrap(spec.head_time);
  if (tt == th) return WlStatus::collision;
  if (has_event_at(s, tt) || has_event_at(s, th)) return WlStatus::collision;
  double a = spec.raise ? tt : th;
  double b = spec.raise ? th : tt;
  int delta = spec.raise ? +1 : -1;
  int pre_a = occupation_at(s, a);
  int pre_b = occupation_at(s, b);
  if (pre_a + delta < 0 || pre_a + delta > n_max_) return WlStatus::occupancy;
  if (!range_bump_valid(s, a, b, delta)) return WlStatus::occupancy;

  Event tail{EventKind::worm_tail, -1, spec.species, next_id_++, spec.raise ? pre_a : pre_b};
  Event head{EventKind::worm_head, -1, spec.species, next_id_++, spec.raise ? pre_b : pre_a};
  ev_[s].emplace(tt, tail);
  ev_[s].emplace(th, head);
  bump_range(s, a, b, delta);

  WormEnd wt{tail.id, false, s, tt, spec.species};
  WormEnd wh{head.id, true, s, th, spec.species};
  auto ins = [&](const WormEnd& w) {
    auto pos = std::lower_bound(worms_.begin(), worms_.end(), w.id,
                                [](const WormEnd& x, std::uint64_t v) { return x.id < v; });
    worms_.insert(pos, w);
  };
  ins(wt);
  ins(wh);
  if (out) *out = PairIds{tail.id, head.id};
  return WlStatus::ok;
}

WlStatus Worldlines::remove_pair(std::uint64_t tail_id, std::uint64_t head_id, bool raise) {
  const WormEnd* wt = find_end(tail_id);
  const WormEnd* wh = find_end(head_id);
  if (!wt || !wh || wt->head || !wh->head) return WlStatus::missing;
  if (wt->site != wh->site || wt->species != wh->species) return WlStatus::geometry;
  int s = wt->site;
  double a = raise ? wt->time : wh->time;
  double b = raise ? wh->time : wt->time;
  int delta = raise ? -1 : +1;
  if (!range_bump_valid(s, a, b, delta)) return WlStatus::occupancy;
  bump_range(s, a, b, delta);
  erase_event(s, wh->time);
  erase_event(s, wt->time);
  auto drop = [&](std::uint64_t id) {
    worms_.erase(std::find_if(worms_.begin(), worms_.end(),
                              [&](const WormEnd& w) { return w.id == id; }));
  };
  drop(head_id);
  drop(tail_id);
  return WlStatus::ok;
}

Worldlines::RemovalSides Worldlines::pair_removal_sides(std::uint64_t tail_id,
                                                        std::uint64_t head_id) const {
  RemovalSides r;
  const WormEnd* wt = find_end(tail_id);
  const WormEnd* wh = find_end(head_id);
  if (!wt || !wh || wt->head || !wh->head || wt->site != wh->site ||
      wt->species != wh->species)
    return r;
  int s = wt->site;
  r.raise_ok = range_bump_valid(s, wt->time, wh->time, -1);
  r.lower_ok = range_bump_valid(s, wh->time, wt->time, +1);
  auto clear_between = [&](double a, double b) { return gap_to_next(s, a) >= fwd(a, b); };
  r.raise_clear = clear_between(wt->time, wh->time);
  r.lower_clear = clear_between(wh->time, wt->time);
  return r;
}

WlStatus Worldlines::move_end(std::uint64_t end_id, double new_time) {
  WormEnd* w = find_end_mut(end_id);
  if (!w) return WlStatus::missing;
  int s = w->site;
  double told = w->time, tnew = wrap(new_time);
  if (tnew == told) return WlStatus::collision;
  if (has_event_at(s, tnew)) return WlStatus::collision;
  bool fwd_clear = gap_to_next(s, told) >= fwd(told, tnew);
  bool bwd_clear = gap_to_prev(s, told) >= fwd(tnew, told);
  if (!fwd_clear && !bwd_clear) return WlStatus::geometry;
  Event e = ev_[s].at(told);
  erase_event(s, told);
  ev_[s].emplace(tnew, e);
  w->time = tnew;
  return WlStatus::ok;
}

WlStatus Worldlines::kink_jump(std::uint64_t end_id, int target_site, double kink_time, bool up,
                               std::uint64_t* kink_id) {
  WormEnd* w = find_end_mut(end_id);
  if (!w) return WlStatus::missing;
  int s = w->site, j = target_site;
  if (j < 0 || j >= n_sites() || j == s) return WlStatus::geometry;
  double te = w->time, tk = wrap(kink_time);
  if (tk == te) return WlStatus::collision;
  if (has_event_at(s, tk) || has_event_at(j, tk) || has_event_at(j, te)) return WlStatus::collision;
  double a = up ? te : tk;
  double b = up ? tk : te;
  double len = fwd(a, b);
  if (up) {
    if (gap_to_next(s, te) < len || gap_to_next(j, te) < len) return WlStatus::geometry;
  } else {
    if (gap_to_prev(s, te) < len || gap_to_prev(j, te) < len) return WlStatus::geometry;
  }
  int m = occupation_at(j, a);
  bool head = w->head;
  // value on the toggled target range [a, b): a head leaves a deficit before
  // its annihilation point when the kink lies ahead, a surplus after it when
  // the kink lies behind; tails mirror
  int mt = m + (head ? -1 : +1) * (up ? +1 : -1);
  if (mt < 0 || mt > n_max_) return WlStatus::occupancy;

  Event origin_end = ev_[s].at(te);
  std::uint64_t kid = next_id_++;
  EventKind origin_kind = head ? EventKind::kink_out : EventKind::kink_in;
  EventKind target_kind = head ? EventKind::kink_in : EventKind::kink_out;
  erase_event(s, te);
  ev_[s].emplace(tk, Event{origin_kind, j, w->species, kid, origin_end.n_after});
  int target_kink_after = up ? m : mt;
  int target_end_after = up ? mt : m;
  ev_[j].emplace(tk, Event{target_kind, s, w->species, kid, target_kink_after});
  ev_[j].emplace(te, Event{origin_end.kind, -1, w->species, w->id, target_end_after});
  w->site = j;
  ++n_kinks_;
  if (kink_id) *kink_id = kid;
  return WlStatus::ok;
}

WlStatus Worldlines::kink_unjump(std::uint64_t end_id, std::uint64_t kink_id) {
  WlStatus st = kink_unjump(end_id, kink_id, true);
  if (st == WlStatus::ok) return st;
  return kink_unjump(end_id, kink_id, false);
}

WlStatus Worldlines::kink_unjump(std::uint64_t end_id, std::uint64_t kink_id, bool up) {
  WormEnd* w = find_end_mut(end_id);
  if (!w) return WlStatus::missing;
  int s = w->site;
  double te = w->time;
  EventKind adj_kind = w->head ? EventKind::kink_in : EventKind::kink_out;
  const Event* kn = nullptr;
  int o = -1;
  double tk = 0.0;
  bool cleared = false;
  {
    double t;
    const Event* c = up ? next_event(s, te, &t) : prev_event(s, te, &t);
    if (c && c->id == kink_id && c->kind == adj_kind && c->species == w->species) {
      kn = c;
      o = c->partner_site;
      tk = t;
      double len = up ? fwd(te, t) : fwd(t, te);
      double gap = up ? gap_to_next(o, te) : gap_to_prev(o, te);
      cleared = gap >= len;
    }
  }
  if (!kn) return WlStatus::geometry;
  auto oit = ev_[o].find(tk);
  if (oit == ev_[o].end() || oit->second.id != kink_id) return WlStatus::missing;
  if (has_event_at(o, te)) return WlStatus::collision;
  if (!cleared) return WlStatus::geometry;

  int back_after = oit->second.n_after;
  // value outside the [end, kink] span; it must survive if the site empties
  int outer = occupation_before(s, up ? te : tk);
  EventKind kind = w->head ? EventKind::worm_head : EventKind::worm_tail;
  erase_event(s, te);
  erase_event(s, tk);
  if (ev_[s].empty()) base_occ_[s] = outer;
  erase_event(o, tk);
  ev_[o].emplace(te, Event{kind, -1, w->species, w->id, back_after});
  w->site = o;
  --n_kinks_;
  return WlStatus::ok;
}

WlStatus Worldlines::insert_kink(const KinkSpec& k, std::uint64_t* kink_id) {
  if (k.from_site < 0 || k.from_site >= n_sites() || k.to_site < 0 || k.to_site >= n_sites() ||
      k.from_site == k.to_site)
    return WlStatus::geometry;
  std::vector<const WormEnd*> cands;
  for (const auto& w : worms_) {
    if (w.species != k.species) continue;
    if (w.head && w.site == k.from_site) cands.push_back(&w);
  }
  for (const auto& w : worms_) {
    if (w.species != k.species) continue;
    if (!w.head && w.site == k.to_site) cands.push_back(&w);
  }
  WlStatus last = WlStatus::missing;
  for (const WormEnd* c : cands) {
    int tgt = c->head ? k.to_site : k.from_site;
    for (bool up : {true, false}) {
      WlStatus st = kink_jump(c->id, tgt, k.time, up, kink_id);
      if (st == WlStatus::ok) return st;
      if (st == WlStatus::occupancy || (st == WlStatus::collision && last == WlStatus::missing))
        last = st;
    }
  }
  if (cands.empty() && occupation_at(k.from_site, k.time) == 0) return WlStatus::occupancy;
  return last;
}

WlStatus Worldlines::remove_kink(std::uint64_t kink_id) {
  int from = -1, to = -1;
  for (int s = 0; s < n_sites() && to < 0; ++s) {
    for (const auto& [t, e] : ev_[s]) {
      if (e.id != kink_id) continue;
      if (e.kind == EventKind::kink_out) from = s;
      if (e.kind == EventKind::kink_in) to = s;
    }
  }
  if (from < 0 && to < 0) return WlStatus::missing;
  // heads first, then tails, mirroring insert_kink's candidate order so the
  // two ops invert each other
  WlStatus last = WlStatus::geometry;
  for (bool want_head : {true, false}) {
    for (const auto& w : worms_) {
      if (w.head != want_head || w.site != (want_head ? to : from)) continue;
      WlStatus st = kink_unjump(w.id, kink_id);
      if (st == WlStatus::ok) return st;
      if (st == WlStatus::occupancy) last = st;
    }
  }
  return last;
}

WlStatus Worldlines::place_worm_ends(const std::vector<PairSpec>& pairs,
                                     std::vector<PairIds>* out) {
  std::vector<PairIds> placed;
  std::vector<bool> senses;
  for (const auto& p : pairs) {
    PairIds ids;
    WlStatus st = place_pair(p, &ids);
    if (st != WlStatus::ok) {
      for (std::size_t i = placed.size(); i-- > 0;) {
        WlStatus undo = remove_pair(placed[i].tail, placed[i].head, senses[i]);
        assert(undo == WlStatus::ok);
        (void)undo;
      }
      return st;
    }
    placed.push_back(ids);
    senses.push_back(p.raise);
  }
  if (out) *out = std::move(placed);
  return WlStatus::ok;
}

WlStatus Worldlines::remove_worm_ends(const std::vector<std::pair<PairIds, bool>>& pairs) {
  struct Undo {
    PairSpec spec;
    PairIds ids;
  };
  std::vector<Undo> undone;
  for (const auto& [ids, raise] : pairs) {
    const WormEnd* wt = find_end(ids.tail);
    const WormEnd* wh = find_end(ids.head);
    PairSpec spec;
    if (wt && wh) spec = PairSpec{wt->site, wt->time, wh->time, wt->species, raise};
    WlStatus st = remove_pair(ids.tail, ids.head, raise);
    if (st != WlStatus::ok) {
      for (std::size_t i = undone.size(); i-- > 0;) {
        std::uint64_t save = next_id_;
        PairIds got;
        WlStatus undo = place_pair(undone[i].spec, &got);
        assert(undo == WlStatus::ok);
        (void)undo;
        // restore original ids: rewrite the two fresh events and entries
        auto fix = [&](std::uint64_t fresh, std::uint64_t orig, double t) {
          auto it = ev_[undone[i].spec.site].find(t);
          it->second.id = orig;
          WormEnd* w = find_end_mut(fresh);
          w->id = orig;
        };
        fix(got.tail, undone[i].ids.tail, undone[i].spec.tail_time);
        fix(got.head, undone[i].ids.head, undone[i].spec.head_time);
        std::sort(worms_.begin(), worms_.end(),
                  [](const WormEnd& a, const WormEnd& b) { return a.id < b.id; });
        next_id_ = save;
      }
      return st;
    }
    undone.push_back(Undo{spec, ids});
  }
  return WlStatus::ok;
}

double Worldlines::range_energy_delta(int site, double a, double b, int delta,
                                      const ModelParams& p, const LatticeGraph& g) const {
  if (delta == 0 || a == b) return 0.0;
  double mu = p.mu_of_layer(g.layer_of(site));
  double acc = 0.0;
  double cur_t = a;
  int cur_n = occupation_at(site, a);
  double len = fwd(a, b);
  auto seg = [&](double upto_gap, int n) {
    double dU = p.u_onsite * ((n + delta) * (n + delta - 1.0) - n * (n - 1.0));
    acc += upto_gap * (dU - mu * delta);
  };
  const EvMap& m = ev_[site];
  if (!m.empty()) {
    auto visit = [&](EvMap::const_iterator it) {
      seg(fwd(cur_t, it->first), cur_n);
      cur_n = it->second.n_after;
      cur_t = it->first;
    };
    if (a < b) {
      for (auto it = m.upper_bound(a); it != m.end() && it->first < b; ++it) visit(it);
    } else {
      for (auto it = m.upper_bound(a); it != m.end(); ++it) visit(it);
      for (auto it = m.begin(); it != m.end() && it->first < b; ++it) visit(it);
    }
  }
  seg(cur_t == a ? len : fwd(cur_t, b), cur_n);
  if (p.v_inter != 0.0) {
    for (int nb : g.neighbors_inter[site])
      acc -= p.v_inter * delta * occupation_integral(nb, a, b);
  }
  return acc;
}

double Worldlines::range_log_factors(int site, double a, double b, const ModelParams& p,
                                     const LatticeGraph& g, double gamma) const {
  const EvMap& m = ev_[site];
  double acc = 0.0;
  auto one = [&](EvMap::const_iterator it) {
    const Event& e = it->second;
    switch (e.kind) {
      case EventKind::worm_head:
        acc += std::log(gamma) + 0.5 * std::log((double)occupation_before(site, it->first));
        break;
      case EventKind::worm_tail:
        acc += std::log(gamma) + 0.5 * std::log((double)e.n_after);
        break;
      case EventKind::kink_out:
      case EventKind::kink_in: {
        auto pit = ev_[e.partner_site].find(it->first);
        int n_here_before = occupation_before(site, it->first);
        int n_part_before = pit->second.n_after - event_step(pit->second.kind);
        int n_from_src = (e.kind == EventKind::kink_out) ? n_here_before : n_part_before;
        int n_to_src = (e.kind == EventKind::kink_out) ? n_part_before : n_here_before;
        BondKind bk = (g.layer_of(site) == g.layer_of(e.partner_site)) ? BondKind::intra
                                                                       : BondKind::inter;
        double el = hop_element_value(n_from_src, n_to_src, bk, p);
        acc += std::log(std::fabs(el));
        break;
      }
    }
  };
  if (a < b) {
    for (auto it = m.lower_bound(a); it != m.end() && it->first < b; ++it) one(it);
  } else {
    for (auto it = m.lower_bound(a); it != m.end(); ++it) one(it);
    for (auto it = m.begin(); it != m.end() && it->first < b; ++it) one(it);
  }
  return acc;
}

double Worldlines::diag_energy_integral(const ModelParams& p, const LatticeGraph& g) const {
  std::vector<double> times;
  for (const auto& m : ev_)
    for (const auto& [t, e] : m) times.push_back(t);
  std::sort(times.begin(), times.end());
  times.erase(std::unique(times.begin(), times.end()), times.end());
  Occupations occ(n_sites());
  if (times.empty()) {
    for (int s = 0; s < n_sites(); ++s) occ[s] = base_occ_[s];
    return diagonal_energy(occ, p, g) * beta_;
  }
  for (int s = 0; s < n_sites(); ++s) occ[s] = occupation_at(s, times[0]);
  double acc = 0.0;
  for (std::size_t k = 0; k < times.size(); ++k) {
    if (k > 0) {
      for (int s = 0; s < n_sites(); ++s) {
        auto it = ev_[s].find(times[k]);
        if (it != ev_[s].end()) occ[s] = it->second.n_after;
      }
    }
    double until = (k + 1 < times.size()) ? times[k + 1] : times[0];
    acc += diagonal_energy(occ, p, g) * fwd(times[k], until);
  }
  return acc;
}

PathWeight Worldlines::compute_path_weight(const ModelParams& p, const LatticeGraph& g,
                                           double gamma) const {
  PathWeight pw;
  pw.order = n_kinks_;
  double log_mag = 0.0;
  for (int s = 0; s < n_sites(); ++s) {
    for (const auto& [t, e] : ev_[s]) {
      if (e.kind != EventKind::kink_out) continue;
      auto pit = ev_[e.partner_site].find(t);
      int n_from_src = occupation_before(s, t);
      int n_to_src = pit->second.n_after - 1;
      BondKind bk =
          (g.layer_of(s) == g.layer_of(e.partner_site)) ? BondKind::intra : BondKind::inter;
      double el = hop_element_value(n_from_src, n_to_src, bk, p);
      if (el == 0.0) return PathWeight{-std::numeric_limits<double>::infinity(), 0, pw.order};
      log_mag += std::log(std::fabs(el));
    }
  }
  for (const auto& w : worms_) {
    int n = w.head ? occupation_before(w.site, w.time) : occupation_at(w.site, w.time);
    if (n <= 0) return PathWeight{-std::numeric_limits<double>::infinity(), 0, pw.order};
    log_mag += std::log(gamma) + 0.5 * std::log((double)n);
  }
  log_mag -= diag_energy_integral(p, g);
  pw.log_magnitude = log_mag;
  pw.sign = 1;
  return pw;
}

std::vector<std::string> Worldlines::validate(const LatticeGraph* g) const {
  std::vector<std::string> errs;
  auto err = [&](const std::string& s) { errs.push_back(s); };
  struct KinkHalf {
    int site;
    double time;
    EventKind kind;
    int partner;
    int species;
  };
  std::map<std::uint64_t, std::vector<KinkHalf>> kinks;
  std::size_t n_head_ev = 0, n_tail_ev = 0;
  for (int s = 0; s < n_sites(); ++s) {
    const EvMap& m = ev_[s];
    if (m.empty()) {
      if (base_occ_[s] < 0 || base_occ_[s] > n_max_)
        err("site " + std::to_string(s) + ": base occupation out of range");
      continue;
    }
    auto prev = std::prev(m.end());
    for (auto it = m.begin(); it != m.end(); ++it) {
      const Event& e = it->second;
      double t = it->first;
      if (t < 0 || t >= beta_) err("site " + std::to_string(s) + ": event time outside [0, beta)");
      if (e.n_after < 0 || e.n_after > n_max_)
        err("site " + std::to_string(s) + ": occupation out of range");
      int step = e.n_after - prev->second.n_after;
      if (step != event_step(e.kind))
        err("site " + std::to_string(s) + " t=" + std::to_string(t) + ": step " +
            std::to_string(step) + " does not match event kind");
      if (e.kind == EventKind::kink_out || e.kind == EventKind::kink_in) {
        kinks[e.id].push_back(KinkHalf{s, t, e.kind, e.partner_site, e.species});
      } else {
        (e.kind == EventKind::worm_head ? n_head_ev : n_tail_ev)++;
        const WormEnd* w = find_end(e.id);
        if (!w || w->site != s || w->time != t || w->species != e.species ||
            w->head != (e.kind == EventKind::worm_head))
          err("worm end id " + std::to_string(e.id) + ": registry mismatch");
      }
      prev = it;
    }
  }
  for (const auto& [id, halves] : kinks) {
    if (halves.size() != 2) {
      err("kink id " + std::to_string(id) + ": " + std::to_string(halves.size()) + " halves");
      continue;
    }
    const KinkHalf &x = halves[0], &y = halves[1];
    if (x.time != y.time) err("kink id " + std::to_string(id) + ": halves at different times");
    if (x.site == y.site) err("kink id " + std::to_string(id) + ": halves on one site");
    if (x.kind == y.kind) err("kink id " + std::to_string(id) + ": halves of one kind");
    if (x.partner != y.site || y.partner != x.site)
      err("kink id " + std::to_string(id) + ": partner sites inconsistent");
    if (x.species != y.species) err("kink id " + std::to_string(id) + ": species mismatch");
    if (g) {
      BondKind bk = (g->layer_of(x.site) == g->layer_of(y.site)) ? BondKind::intra
                                                                 : BondKind::inter;
      if (!g->sites_bonded(x.site, y.site, bk))
        err("kink id " + std::to_string(id) + ": sites not bonded");
    }
  }
  if ((int)kinks.size() != n_kinks_) err("kink count cache inconsistent");
  std::map<int, int> balance;
  std::size_t heads = 0, tails = 0;
  for (const auto& w : worms_) {
    (w.head ? heads : tails)++;
    balance[w.species] += w.head ? +1 : -1;
    if (!ev_[w.site].count(w.time)) err("worm end id " + std::to_string(w.id) + ": no event");
  }
  if (heads != n_head_ev || tails != n_tail_ev) err("worm registry count mismatch");
  for (const auto& [sp, bal] : balance)
    if (bal != 0) err("species " + std::to_string(sp) + ": heads and tails unbalanced");
  return errs;
}

void Worldlines::save(std::ostream& os) const {
  os << "wormpimc worldlines v1\n";
  os << "beta " << hexd(beta_) << " n_max " << n_max_ << " n_sites " << n_sites() << " next_id "
     << next_id_ << " n_kinks " << n_kinks_ << "\n";
  os << "base";
  // The stored entry is stale while a site has events; serialize those slots as 0
  // so physically identical states produce identical files.
  for (int s = 0; s < n_sites(); ++s) os << ' ' << (ev_[s].empty() ? base_occ_[s] : 0);
  os << "\n";
  for (int s = 0; s < n_sites(); ++s) {
    os << "site " << s << ' ' << ev_[s].size() << "\n";
    for (const auto& [t, e] : ev_[s])
      os << hexd(t) << ' ' << (int)e.kind << ' ' << e.partner_site << ' ' << e.species << ' '
         << e.id << ' ' << e.n_after << "\n";
  }
  os << "worms " << worms_.size() << "\n";
  for (const auto& w : worms_)
    os << w.id << ' ' << (w.head ? 1 : 0) << ' ' << w.site << ' ' << hexd(w.time) << ' '
       << w.species << "\n";
  os << "end\n";
}

Worldlines Worldlines::load(std::istream& is) {
  auto fail = [](const std::string& why) -> std::runtime_error {
    return std::runtime_error("worldlines load: " + why);
  };
  std::string line;
  if (!std::getline(is, line) || line != "wormpimc worldlines v1") throw fail("bad header");
  std::string tok, bstr;
  int n_max = 0, n_sites = 0, n_kinks = 0;
  std::uint64_t next_id = 0;
  is >> tok >> bstr;
  if (tok != "beta") throw fail("expected beta");
  is >> tok >> n_max >> tok >> n_sites >> tok >> next_id >> tok >> n_kinks;
  if (!is || n_sites <= 0) throw fail("bad dimensions");
  Worldlines w(n_sites, parse_hexd(bstr), n_max);
  is >> tok;
  if (tok != "base") throw fail("expected base");
  for (int s = 0; s < n_sites; ++s) is >> w.base_occ_[s];
  for (int s = 0; s < n_sites; ++s) {
    std::size_t cnt = 0;
    int idx = -1;
    is >> tok >> idx >> cnt;
    if (tok != "site" || idx != s) throw fail("expected site block");
    for (std::size_t k = 0; k < cnt; ++k) {
      std::string tstr;
      int kind, partner, species, n_after;
      std::uint64_t id;
      is >> tstr >> kind >> partner >> species >> id >> n_after;
      if (!is) throw fail("truncated event");
      Event e{(EventKind)kind, partner, species, id, n_after};
      if (!w.ev_[s].emplace(parse_hexd(tstr), e).second) throw fail("duplicate event time");
    }
  }
  std::size_t n_worms = 0;
  is >> tok >> n_worms;
  if (tok != "worms") throw fail("expected worms");
  for (std::size_t k = 0; k < n_worms; ++k) {
    WormEnd we;
    int head;
    std::string tstr;
    is >> we.id >> head >> we.site >> tstr >> we.species;
    if (!is) throw fail("truncated worm end");
    we.head = head != 0;
    we.time = parse_hexd(tstr);
    w.worms_.push_back(we);
  }
  is >> tok;
  if (tok != "end") throw fail("expected end");
  w.next_id_ = next_id;
  w.n_kinks_ = n_kinks;
  auto errs = w.validate();
  if (!errs.empty()) throw fail("invalid state: " + errs.front());
  return w;
}

bool Worldlines::operator==(const Worldlines& o) const {
  if (beta_ != o.beta_ || n_max_ != o.n_max_ || next_id_ != o.next_id_ || n_kinks_ != o.n_kinks_)
    return false;
  if (ev_.size() != o.ev_.size() || worms_.size() != o.worms_.size()) return false;
  for (std::size_t s = 0; s < ev_.size(); ++s) {
    if (ev_[s].size() != o.ev_[s].size()) return false;
    // base_occ_ is stale while a site has events; compare it only where it is live.
    if (ev_[s].empty() && base_occ_[s] != o.base_occ_[s]) return false;
    auto a = ev_[s].begin();
    auto b = o.ev_[s].begin();
    for (; a != ev_[s].end(); ++a, ++b) {
      if (a->first != b->first) return false;
      const Event &x = a->second, &y = b->second;
      if (x.kind != y.kind || x.partner_site != y.partner_site || x.species != y.species ||
          x.id != y.id || x.n_after != y.n_after)
        return false;
    }
  }
  for (std::size_t k = 0; k < worms_.size(); ++k) {
    const WormEnd &x = worms_[k], &y = o.worms_[k];
    if (x.id != y.id || x.head != y.head || x.site != y.site || x.time != y.time ||
        x.species != y.species)
      return false;
  }
  return true;
}

Worldlines Worldlines::from_parts(int n_sites, double beta, int n_max,
                                  const std::vector<int>& anchor_occ,
                                  const std::vector<KinkSpec>& kinks,
                                  const std::vector<WormEnd>& ends) {
  if ((int)anchor_occ.size() != n_sites) throw std::runtime_error("from_parts: anchor size");
  Worldlines w(n_sites, beta, n_max);
  std::uint64_t id = 1;
  for (const auto& k : kinks) {
    double t = w.wrap(k.time);
    Event out{EventKind::kink_out, k.to_site, k.species, id, 0};
    Event in{EventKind::kink_in, k.from_site, k.species, id, 0};
    if (!w.ev_[k.from_site].emplace(t, out).second || !w.ev_[k.to_site].emplace(t, in).second)
      throw std::runtime_error("from_parts: duplicate event time");
    ++id;
    ++w.n_kinks_;
  }
  for (const auto& e : ends) {
    double t = w.wrap(e.time);
    EventKind kind = e.head ? EventKind::worm_head : EventKind::worm_tail;
    if (!w.ev_[e.site].emplace(t, Event{kind, -1, e.species, id, 0}).second)
      throw std::runtime_error("from_parts: duplicate event time");
    WormEnd we = e;
    we.id = id;
    we.time = t;
    w.worms_.push_back(we);
    ++id;
  }
  std::sort(w.worms_.begin(), w.worms_.end(),
            [](const WormEnd& a, const WormEnd& b) { return a.id < b.id; });
  w.next_id_ = id;
  for (int s = 0; s < n_sites; ++s) {
    int v = anchor_occ[s];
    if (w.ev_[s].empty()) {
      w.base_occ_[s] = v;
      continue;
    }
    for (auto& [t, e] : w.ev_[s]) {
      v += event_step(e.kind);
      e.n_after = v;
    }
    if (v != anchor_occ[s]) throw std::runtime_error("from_parts: worldline does not close");
  }
  auto errs = w.validate();
  if (!errs.empty()) throw std::runtime_error("from_parts: " + errs.front());
  return w;
}

}  // namespace wormpimc
