#include "wormpimc/engine.hpp"

#include <algorithm>
#include <cassert>
#include <cmath>
#include <istream>
#include <limits>
#include <ostream>
#include <stdexcept>
#include <string>

namespace wormpimc {

Engine::Engine(const LatticeGraph& g, const ModelParams& p, const UpdateParams& u,
               std::uint64_t seed, std::uint64_t chain)
    : g_(g), p_(p), u_(u), wl_(g.n_sites(), p.beta, p.n_max), rng_(seed, chain) {
  p_.validate(g_);
  u_.worms.check(p_, g_);
  if (u_.gamma <= 0 || u_.xi_space <= 0) throw std::invalid_argument("engine: bad kernel widths");
  double psum = u_.p_create + u_.p_shift + u_.p_kink;
  if (std::fabs(psum - 1.0) > 1e-12 || u_.p_create <= 0 || u_.p_shift < 0 || u_.p_kink < 0)
    throw std::invalid_argument("engine: update-table probabilities must sum to 1");
  double jmax = std::max(p_.j_intra, p_.j_inter);
  xi_t_ = u_.xi_time > 0 ? u_.xi_time : 2.0 / (jmax > 0 ? jmax : 1.0);
  shift_w_ = u_.max_shift_window > 0 ? u_.max_shift_window : p_.beta / 4.0;
  n_worms_ = u_.worms.n_worms(g_.n_layers);
  steps_per_sweep_ =
      std::max(1, (int)std::llround(g_.n_sites() * p_.beta * (jmax > 0 ? jmax : 1.0)));
  allowed_.resize(u_.worms.layer_locked() ? g_.n_layers : 1);
  for (int sp = 0; sp < (int)allowed_.size(); ++sp) {
    if (u_.worms.layer_locked()) {
      for (int x = 0; x < g_.sites_per_layer; ++x) allowed_[sp].push_back(g_.site_at(sp, x));
    } else {
      for (int s = 0; s < g_.n_sites(); ++s) allowed_[sp].push_back(s);
    }
  }
}

const std::vector<int>& Engine::allowed_sites(int species) const {
  return allowed_[u_.worms.layer_locked() ? species : 0];
}

std::vector<int> Engine::allowed_targets(int site, int species) const {
  (void)species;  // locking is a property of the whole spec, not a per-species rule
  std::vector<int> t = g_.neighbors_intra[site];
  if (!u_.worms.layer_locked() && p_.j_inter != 0.0)
    for (int nb : g_.neighbors_inter[site]) t.push_back(nb);
  return t;
}

double Engine::tether_log_w() const {
  return tether_log_weight(wl_.worm_ends(), g_, p_.beta, u_.xi_space, xi_t_);
}

double Engine::end_log_factor(int site, double t) const {
  const auto& m = wl_.site_events(site);
  auto it = m.find(t);
  assert(it != m.end());
  const Event& e = it->second;
  if (e.kind == EventKind::worm_head)
    return std::log(u_.gamma) + 0.5 * std::log((double)wl_.occupation_before(site, t));
  assert(e.kind == EventKind::worm_tail);
  return std::log(u_.gamma) + 0.5 * std::log((double)e.n_after);
}

double Engine::kink_log_element(int site, double t) const {
  const auto& m = wl_.site_events(site);
  auto it = m.find(t);
  assert(it != m.end());
  const Event& e = it->second;
  assert(e.kind == EventKind::kink_out || e.kind == EventKind::kink_in);
  auto pit = wl_.site_events(e.partner_site).find(t);
  int n_here_before = wl_.occupation_before(site, t);
  int n_part_before = pit->second.n_after - event_step(pit->second.kind);
  int n_from = e.kind == EventKind::kink_out ? n_here_before : n_part_before;
  int n_to = e.kind == EventKind::kink_out ? n_part_before : n_here_before;
  BondKind bk = g_.layer_of(site) == g_.layer_of(e.partner_site) ? BondKind::intra : BondKind::inter;
  return std::log(std::fabs(hop_element_value(n_from, n_to, bk, p_)));
}

double Engine::create_log_density(const std::vector<PairSpec>& pairs) const {
  TimeKernel kt{p_.beta, xi_t_};
  double lq = -std::log((double)allowed_sites(pairs[0].species).size()) - std::log(p_.beta);
  lq += kt.log_density(pairs[0].head_time - pairs[0].tail_time);
  for (std::size_t k = 1; k < pairs.size(); ++k) {
    SiteKernel sk(g_, allowed_sites(pairs[k].species), pairs[0].site, u_.xi_space);
    lq += sk.log_prob(pairs[k].site);
    lq += kt.log_density(pairs[k].tail_time - pairs[0].tail_time);
    lq += kt.log_density(pairs[k].head_time - pairs[k].tail_time);
  }
  lq += pairs.size() * std::log(0.5);
  return lq;
}

std::optional<double> Engine::add_pair_delta(const PairSpec& spec, Worldlines::PairIds* ids) {
  double a = wl_.wrap(spec.raise ? spec.tail_time : spec.head_time);
  double b = wl_.wrap(spec.raise ? spec.head_time : spec.tail_time);
  int delta = spec.raise ? +1 : -1;
  double e = -wl_.range_energy_delta(spec.site, a, b, delta, p_, g_);
  double pre = wl_.range_log_factors(spec.site, a, b, p_, g_, u_.gamma);
  if (wl_.place_pair(spec, ids) != WlStatus::ok) return std::nullopt;
  double post = wl_.range_log_factors(spec.site, a, b, p_, g_, u_.gamma);
  return e + (post - pre) + end_log_factor(spec.site, b);
}

// nullopt: nothing changed. A non-finite value means the pair is gone but the
// remaining state carries a zero factor; the caller must restore and reject.
std::optional<double> Engine::remove_pair_delta(const WormEnd& wt, const WormEnd& wh, bool raise) {
  int s = wt.site;
  double a = raise ? wt.time : wh.time;
  double b = raise ? wh.time : wt.time;
  int delta = raise ? -1 : +1;
  double e = -wl_.range_energy_delta(s, a, b, delta, p_, g_);
  double pre = wl_.range_log_factors(s, a, b, p_, g_, u_.gamma);
  double endb = end_log_factor(s, b);
  WlStatus st = wl_.remove_pair(wt.id, wh.id, raise);
  if (st != WlStatus::ok) return std::nullopt;
  double post = wl_.range_log_factors(s, a, b, p_, g_, u_.gamma);
  return e + (post - pre) - endb;
}

std::optional<double> Engine::try_create(const CreateChoice& ch) {
  if (sector() != Sector::Z) return std::nullopt;
  if ((int)ch.pairs.size() != n_worms_) return std::nullopt;
  for (int k = 0; k < n_worms_; ++k) {
    const PairSpec& ps = ch.pairs[k];
    if (ps.species != u_.worms.species_of_worm(k)) return std::nullopt;
    const auto& al = allowed_sites(ps.species);
    if (std::find(al.begin(), al.end(), ps.site) == al.end()) return std::nullopt;
  }
  double lqf = create_log_density(ch.pairs);
  if (!std::isfinite(lqf)) return std::nullopt;

  Undo un;
  un.kind = MoveKind::create;
  un.saved_next_id = wl_.next_id();
  auto undo_created = [&]() {
    for (int j = (int)un.created.size() - 1; j >= 0; --j) {
      WlStatus st =
          wl_.remove_pair(un.created[j].first.tail, un.created[j].first.head, un.created[j].second);
      assert(st == WlStatus::ok);
      (void)st;
    }
    wl_.set_next_id(un.saved_next_id);
  };
  double dw = 0.0;
  double lqr = 0.0;
  for (int k = 0; k < n_worms_; ++k) {
    Worldlines::PairIds ids;
    auto d = add_pair_delta(ch.pairs[k], &ids);
    if (!d || !std::isfinite(*d)) {
      if (d) un.created.emplace_back(ids, ch.pairs[k].raise);
      undo_created();
      return std::nullopt;
    }
    dw += *d;
    un.created.emplace_back(ids, ch.pairs[k].raise);
    // the reverse annihilate strips pairs in reverse order, so it judges this
    // pair's removal senses with the later pairs already gone: exactly the
    // state right now. Undoing the placement itself always stays viable.
    auto sd = wl_.pair_removal_sides(ids.tail, ids.head);
    int v = (sd.raise_ok ? 1 : 0) + (sd.lower_ok ? 1 : 0);
    assert(v >= 1);
    if (v == 2) lqr += std::log(0.5);
  }
  double lw = tether_log_w();
  last_dw_ = dw + lw;
  undo_ = std::move(un);
  return last_dw_ + lqr - lqf;
}

std::optional<double> Engine::try_annihilate(const AnnihilateChoice& ch) {
  if (sector() != Sector::G) return std::nullopt;
  if ((int)ch.raise_sense.size() != n_worms_) return std::nullopt;
  const auto& ends = wl_.worm_ends();
  assert((int)ends.size() == 2 * n_worms_);
  struct Pr {
    WormEnd t, h;
  };
  std::vector<Pr> prs(n_worms_);
  for (int k = 0; k < n_worms_; ++k) {
    const WormEnd& t = ends[2 * k];
    const WormEnd& h = ends[2 * k + 1];
    assert(!t.head && h.head && h.id == t.id + 1 && t.species == h.species);
    if (t.site != h.site) return std::nullopt;
    prs[k] = {t, h};
  }
  double lw = tether_log_w();

  Undo un;
  un.kind = MoveKind::annihilate;
  un.saved_next_id = wl_.next_id();
  auto replace_removed = [&]() {
    // inverse of removing n-1..k: place ascending again
    for (int j = (int)un.removed.size() - 1; j >= 0; --j) {
      wl_.set_next_id(un.removed[j].ids.tail);
      WlStatus st = wl_.place_pair(un.removed[j].spec);
      assert(st == WlStatus::ok);
      (void)st;
    }
    wl_.set_next_id(un.saved_next_id);
  };
  // Strip pairs in reverse creation order so every intermediate state matches
  // the reverse create's sequential placement states. Each pair's removal
  // senses are judged in that intermediate state; judging them all upfront
  // would see blockers (a later pair sharing the site) the reverse create
  // never sees, and force the wrong sense.
  double lqf = 0.0;
  double dw = 0.0;
  std::vector<PairSpec> specs(n_worms_);
  for (int k = n_worms_ - 1; k >= 0; --k) {
    auto sd = wl_.pair_removal_sides(prs[k].t.id, prs[k].h.id);
    int v = (sd.raise_ok ? 1 : 0) + (sd.lower_ok ? 1 : 0);
    if (v == 0) {
      replace_removed();
      return std::nullopt;
    }
    bool sense = v == 2 ? (bool)ch.raise_sense[k] : sd.raise_ok;
    if (v == 2) lqf += std::log(0.5);
    specs[k] = PairSpec{prs[k].t.site, prs[k].t.time, prs[k].h.time, prs[k].t.species, sense};
    auto d = remove_pair_delta(prs[k].t, prs[k].h, sense);
    if (!d) {
      replace_removed();
      return std::nullopt;
    }
    un.removed.push_back({specs[k], {prs[k].t.id, prs[k].h.id}});
    // a zero factor among the remaining pairs: the reverse create would have
    // rejected this intermediate, so the strip must not pass through it
    if (!std::isfinite(*d)) {
      replace_removed();
      return std::nullopt;
    }
    dw += *d;
  }
  double lqr = create_log_density(specs);
  last_dw_ = dw - lw;
  undo_ = std::move(un);
  return last_dw_ + lqr - lqf;
}

std::optional<double> Engine::try_shift(const ShiftChoice& ch) {
  if (sector() != Sector::G) return std::nullopt;
  const auto& ends = wl_.worm_ends();
  if (ch.end_index < 0 || ch.end_index >= (int)ends.size()) return std::nullopt;
  WormEnd w = ends[ch.end_index];
  double tn = wl_.wrap(ch.new_time);
  if (tn == w.time) return std::nullopt;
  double lo = std::min(shift_w_ / 2, wl_.gap_to_prev(w.site, w.time, w.id));
  double hi = std::min(shift_w_ / 2, wl_.gap_to_next(w.site, w.time, w.id));
  double l_old = std::min(lo + hi, p_.beta);
  bool full_circle = lo + hi >= p_.beta;
  double dfwd = wl_.fwd(w.time, tn);
  double dbwd = p_.beta - dfwd;
  bool forward;
  if (full_circle)
    forward = dfwd <= dbwd;  // window covers the circle; both sides are event-free
  else if (dfwd < hi)
    forward = true;
  else if (dbwd < lo)
    forward = false;
  else
    return std::nullopt;
  double a = forward ? w.time : tn;
  double b = forward ? tn : w.time;
  int delta = (forward ? +1 : -1) * (w.head ? +1 : -1);
  double de = wl_.range_energy_delta(w.site, a, b, delta, p_, g_);
  double lw0 = tether_log_w();
  if (wl_.move_end(w.id, tn) != WlStatus::ok) return std::nullopt;
  double lo2 = std::min(shift_w_ / 2, wl_.gap_to_prev(w.site, tn, w.id));
  double hi2 = std::min(shift_w_ / 2, wl_.gap_to_next(w.site, tn, w.id));
  double l_new = std::min(lo2 + hi2, p_.beta);
  double lw1 = tether_log_w();
  Undo un;
  un.kind = MoveKind::shift;
  un.end_id = w.id;
  un.old_time = w.time;
  last_dw_ = -de + (lw1 - lw0);
  undo_ = std::move(un);
  return last_dw_ + std::log(l_old) - std::log(l_new);
}

std::optional<double> Engine::try_kink_insert(const KinkInsertChoice& ch) {
  if (sector() != Sector::G) return std::nullopt;
  const auto& ends = wl_.worm_ends();
  if (ch.end_index < 0 || ch.end_index >= (int)ends.size()) return std::nullopt;
  WormEnd w = ends[ch.end_index];
  auto tgt = allowed_targets(w.site, w.species);
  if (std::find(tgt.begin(), tgt.end(), ch.target_site) == tgt.end()) return std::nullopt;
  int j = ch.target_site;
  double tk = wl_.wrap(ch.kink_time);
  double win = ch.up ? std::min(wl_.gap_to_next(w.site, w.time), wl_.gap_to_next(j, w.time))
                     : std::min(wl_.gap_to_prev(w.site, w.time), wl_.gap_to_prev(j, w.time));
  double len = ch.up ? wl_.fwd(w.time, tk) : wl_.fwd(tk, w.time);
  if (!(len < win)) return std::nullopt;
  int step = w.head ? -1 : +1;
  int ds = ch.up ? -step : +step;
  int dj = ch.up ? +step : -step;
  double a = ch.up ? w.time : tk;
  double b = ch.up ? tk : w.time;
  double de = wl_.range_energy_delta(w.site, a, b, ds, p_, g_) +
              wl_.range_energy_delta(j, a, b, dj, p_, g_);
  // the two single-site walks each see the other site pre-move; the V cross
  // term between the swapped occupations is missing from both
  if (p_.v_inter != 0 && g_.sites_bonded(w.site, j, BondKind::inter))
    de += -p_.v_inter * ds * dj * len;
  double ef0 = end_log_factor(w.site, w.time);
  double lw0 = tether_log_w();
  std::uint64_t saved = wl_.next_id();
  std::uint64_t kid = 0;
  if (wl_.kink_jump(w.id, j, tk, ch.up, &kid) != WlStatus::ok) return std::nullopt;
  double el = kink_log_element(j, tk);
  if (!std::isfinite(el)) {
    WlStatus st = wl_.kink_unjump(w.id, kid, ch.up);
    assert(st == WlStatus::ok);
    (void)st;
    wl_.set_next_id(saved);
    return std::nullopt;
  }
  double ef1 = end_log_factor(j, w.time);
  double lw1 = tether_log_w();
  Undo un;
  un.kind = MoveKind::kink_insert;
  un.end_id = w.id;
  un.kink_id = kid;
  un.saved_next_id = saved;
  un.up = ch.up;
  last_dw_ = -de + (ef1 - ef0) + el + (lw1 - lw0);
  undo_ = std::move(un);
  return last_dw_ + std::log((double)tgt.size() * win);
}

std::optional<double> Engine::try_kink_remove(const KinkRemoveChoice& ch) {
  if (sector() != Sector::G) return std::nullopt;
  const auto& ends = wl_.worm_ends();
  if (ch.end_index < 0 || ch.end_index >= (int)ends.size()) return std::nullopt;
  WormEnd w = ends[ch.end_index];
  double tk = 0.0;
  const Event* adj = ch.up ? wl_.next_event(w.site, w.time, &tk) : wl_.prev_event(w.site, w.time, &tk);
  if (!adj) return std::nullopt;
  EventKind need = w.head ? EventKind::kink_in : EventKind::kink_out;
  if (adj->kind != need || adj->species != w.species) return std::nullopt;
  int o = adj->partner_site;
  std::uint64_t kid = adj->id;
  auto tgt_rev = allowed_targets(o, w.species);
  if (std::find(tgt_rev.begin(), tgt_rev.end(), w.site) == tgt_rev.end()) return std::nullopt;
  double len = ch.up ? wl_.fwd(w.time, tk) : wl_.fwd(tk, w.time);
  double a = ch.up ? w.time : tk;
  double b = ch.up ? tk : w.time;
  int step = w.head ? -1 : +1;
  int dc = ch.up ? -step : +step;
  int dn = ch.up ? +step : -step;
  double de = wl_.range_energy_delta(w.site, a, b, dc, p_, g_) +
              wl_.range_energy_delta(o, a, b, dn, p_, g_);
  if (p_.v_inter != 0 && g_.sites_bonded(w.site, o, BondKind::inter))
    de += -p_.v_inter * dc * dn * len;
  double el = kink_log_element(w.site, tk);
  double ef0 = end_log_factor(w.site, w.time);
  double lw0 = tether_log_w();
  std::uint64_t saved = wl_.next_id();
  if (wl_.kink_unjump(w.id, kid, ch.up) != WlStatus::ok) return std::nullopt;
  double ef1 = end_log_factor(o, w.time);
  double lw1 = tether_log_w();
  double win = ch.up ? std::min(wl_.gap_to_next(o, w.time), wl_.gap_to_next(w.site, w.time))
                     : std::min(wl_.gap_to_prev(o, w.time), wl_.gap_to_prev(w.site, w.time));
  Undo un;
  un.kind = MoveKind::kink_remove;
  un.end_id = w.id;
  un.kink_id = kid;
  un.saved_next_id = saved;
  un.rejump_site = w.site;
  un.rejump_time = tk;
  un.up = ch.up;
  last_dw_ = -de + (ef1 - ef0) - el + (lw1 - lw0);
  undo_ = std::move(un);
  return last_dw_ - std::log((double)tgt_rev.size() * win);
}

void Engine::rollback() {
  assert(undo_);
  Undo& un = *undo_;
  WlStatus st = WlStatus::ok;
  switch (un.kind) {
    case MoveKind::create:
      for (int j = (int)un.created.size() - 1; j >= 0; --j) {
        st = wl_.remove_pair(un.created[j].first.tail, un.created[j].first.head,
                             un.created[j].second);
        assert(st == WlStatus::ok);
      }
      wl_.set_next_id(un.saved_next_id);
      break;
    case MoveKind::annihilate:
      for (int j = (int)un.removed.size() - 1; j >= 0; --j) {
        wl_.set_next_id(un.removed[j].ids.tail);
        st = wl_.place_pair(un.removed[j].spec);
        assert(st == WlStatus::ok);
      }
      wl_.set_next_id(un.saved_next_id);
      break;
    case MoveKind::shift:
      st = wl_.move_end(un.end_id, un.old_time);
      assert(st == WlStatus::ok);
      break;
    case MoveKind::kink_insert:
      st = wl_.kink_unjump(un.end_id, un.kink_id, un.up);
      assert(st == WlStatus::ok);
      wl_.set_next_id(un.saved_next_id);
      break;
    case MoveKind::kink_remove: {
      wl_.set_next_id(un.kink_id);
      std::uint64_t kid2 = 0;
      st = wl_.kink_jump(un.end_id, un.rejump_site, un.rejump_time, un.up, &kid2);
      assert(st == WlStatus::ok && kid2 == un.kink_id);
      wl_.set_next_id(un.saved_next_id);
      break;
    }
  }
  (void)st;
  undo_.reset();
}

void Engine::commit() { undo_.reset(); }

CreateChoice Engine::propose_create() {
  CreateChoice ch;
  TimeKernel kt{p_.beta, xi_t_};
  const auto& a0 = allowed_sites(u_.worms.species_of_worm(0));
  int s0 = a0[rng_.uniform_index(a0.size())];
  double t0 = rng_.uniform(0.0, p_.beta);
  for (int k = 0; k < n_worms_; ++k) {
    PairSpec ps;
    ps.species = u_.worms.species_of_worm(k);
    if (k == 0) {
      ps.site = s0;
      ps.tail_time = t0;
    } else {
      SiteKernel sk(g_, allowed_sites(ps.species), s0, u_.xi_space);
      ps.site = sk.sample(rng_);
      ps.tail_time = wl_.wrap(t0 + kt.sample_offset(rng_));
    }
    ps.head_time = wl_.wrap(ps.tail_time + kt.sample_offset(rng_));
    ps.raise = rng_.coin();
    ch.pairs.push_back(ps);
  }
  return ch;
}

AnnihilateChoice Engine::propose_annihilate() {
  AnnihilateChoice ch;
  for (int k = 0; k < n_worms_; ++k) ch.raise_sense.push_back(rng_.coin());
  return ch;
}

ShiftChoice Engine::propose_shift() {
  const auto& ends = wl_.worm_ends();
  int idx = (int)rng_.uniform_index(ends.size());
  const WormEnd& w = ends[idx];
  double lo = std::min(shift_w_ / 2, wl_.gap_to_prev(w.site, w.time, w.id));
  double hi = std::min(shift_w_ / 2, wl_.gap_to_next(w.site, w.time, w.id));
  double l = std::min(lo + hi, p_.beta);
  return {idx, wl_.wrap(w.time - lo + rng_.uniform() * l)};
}

KinkInsertChoice Engine::propose_kink_insert() {
  const auto& ends = wl_.worm_ends();
  int idx = (int)rng_.uniform_index(ends.size());
  const WormEnd& w = ends[idx];
  bool up = rng_.coin();
  KinkInsertChoice ch{idx, up, -1, 0.0};
  auto tgt = allowed_targets(w.site, w.species);
  if (tgt.empty()) return ch;
  ch.target_site = (int)tgt[rng_.uniform_index(tgt.size())];
  double win = up ? std::min(wl_.gap_to_next(w.site, w.time), wl_.gap_to_next(ch.target_site, w.time))
                  : std::min(wl_.gap_to_prev(w.site, w.time), wl_.gap_to_prev(ch.target_site, w.time));
  double len = rng_.uniform() * win;
  ch.kink_time = wl_.wrap(up ? w.time + len : w.time - len);
  return ch;
}

KinkRemoveChoice Engine::propose_kink_remove() {
  const auto& ends = wl_.worm_ends();
  return {(int)rng_.uniform_index(ends.size()), rng_.coin()};
}

void Engine::metropolis_step() {
  ++c_.steps;
  double pre_full = 0.0;
  if (u_.debug_weights)
    pre_full = wl_.compute_path_weight(p_, g_, u_.gamma).log_magnitude + tether_log_w();
  double u = rng_.uniform();
  MoveKind kind;
  std::optional<double> lnr;
  if (sector() == Sector::Z) {
    if (u < u_.p_create) {
      kind = MoveKind::create;
      lnr = try_create(propose_create());
    } else if (u < u_.p_create + u_.p_shift) {
      kind = MoveKind::shift;  // nothing to shift in Z
    } else {
      kind = MoveKind::kink_insert;  // nothing to jump in Z
    }
  } else {
    if (u < u_.p_create) {
      kind = MoveKind::annihilate;
      lnr = try_annihilate(propose_annihilate());
    } else if (u < u_.p_create + u_.p_shift) {
      kind = MoveKind::shift;
      lnr = try_shift(propose_shift());
    } else if (rng_.coin()) {
      kind = MoveKind::kink_insert;
      lnr = try_kink_insert(propose_kink_insert());
    } else {
      kind = MoveKind::kink_remove;
      lnr = try_kink_remove(propose_kink_remove());
    }
  }
  ++c_.proposed[(int)kind];
  if (!lnr) return;
  if (std::log(rng_.uniform()) < *lnr) {
    ++c_.accepted[(int)kind];
    if (u_.debug_weights) {
      PathWeight pw = wl_.compute_path_weight(p_, g_, u_.gamma);
      if (pw.sign != 1) throw std::logic_error("engine: accepted a zero-weight configuration");
      double post_full = pw.log_magnitude + tether_log_w();
      if (std::fabs((post_full - pre_full) - last_dw_) >
          1e-10 * std::max(1.0, std::fabs(last_dw_)))
        throw std::logic_error("engine: incremental weight drifted from full recompute");
    }
    commit();
  } else {
    rollback();
  }
}

void Engine::run_sweeps(int n) {
  run_sweeps(n, [](const Engine&) {});
}

void Engine::save_state(std::ostream& os) const {
  os << "wormpimc engine v1\n";
  wl_.save(os);
  os << rng_.save() << "\n";
  os << c_.steps;
  for (int k = 0; k < kMoveKinds; ++k) os << " " << c_.proposed[k];
  for (int k = 0; k < kMoveKinds; ++k) os << " " << c_.accepted[k];
  os << "\n";
}

void Engine::load_state(std::istream& is) {
  std::string line;
  std::getline(is, line);
  if (line != "wormpimc engine v1") throw std::runtime_error("engine state: unsupported version");
  Worldlines w = Worldlines::load(is);
  if (w.n_sites() != g_.n_sites() || w.beta() != p_.beta || w.n_max() != p_.n_max)
    throw std::runtime_error("engine state: geometry mismatch");
  std::getline(is, line);  // worldlines load leaves the tail of its "end" line
  std::getline(is, line);
  if (line.empty()) throw std::runtime_error("engine state: missing rng state");
  rng_.restore(line);
  is >> c_.steps;
  for (int k = 0; k < kMoveKinds; ++k) is >> c_.proposed[k];
  for (int k = 0; k < kMoveKinds; ++k) is >> c_.accepted[k];
  if (!is) throw std::runtime_error("engine state: truncated counters");
  std::getline(is, line);
  wl_ = std::move(w);
  undo_.reset();
}

}  // namespace wormpimc
