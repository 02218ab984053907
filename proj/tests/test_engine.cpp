#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <sstream>
#include <vector>

#include "wormpimc/engine.hpp"
#include "wormpimc/oracle.hpp"

using namespace wormpimc;

namespace {

// reference density of the truncated two-sided time kernel
double ref_time_logpdf(double dt, double beta, double xi) {
  double d = std::fabs(dt);
  d = std::min(d, beta - d);
  return -d / xi - std::log(2.0 * xi * (1.0 - std::exp(-beta / (2.0 * xi))));
}

}  // namespace

TEST_CASE("tether weight pairs same-kind ends") {
  LatticeGraph g = build_layered_lattice(2, 4, true, false);
  double beta = 2.0, xs = 2.0, xt = 1.5;

  // a single worm has no same-kind pair
  std::vector<WormEnd> one = {{1, false, 0, 0.3, 0}, {2, true, 2, 1.1, 0}};
  CHECK(tether_log_weight(one, g, beta, xs, xt) == 0.0);

  // two worms: heads pair and tails pair, with cyclic time distance
  std::vector<WormEnd> two = {{1, false, 0, 0.1, 0},
                              {2, true, 1, 0.4, 0},
                              {3, false, 4, 1.9, 1},
                              {4, true, 5, 0.6, 1}};
  double d_tails = g.graph_distance(0, 4) / xs + std::min(1.8, beta - 1.8) / xt;
  double d_heads = g.graph_distance(1, 5) / xs + 0.2 / xt;
  CHECK(tether_log_weight(two, g, beta, xs, xt) == doctest::Approx(-(d_tails + d_heads)));

  // coincident ends of the same kind tether at zero cost
  std::vector<WormEnd> stacked = {{1, false, 3, 0.5, 0},
                                  {2, true, 3, 0.9, 0},
                                  {3, false, 3, 0.5, 1},
                                  {4, true, 3, 0.9, 1}};
  CHECK(tether_log_weight(stacked, g, beta, xs, xt) == doctest::Approx(0.0));
}

TEST_CASE("time kernel normalization and sampling") {
  TimeKernel kt{2.5, 0.8};
  // density integrates to one on the circle
  int n = 20000;
  double acc = 0.0;
  for (int k = 0; k < n; ++k) {
    double t = (k + 0.5) / n * kt.beta - kt.beta / 2;
    acc += std::exp(kt.log_density(t)) * (kt.beta / n);
  }
  CHECK(acc == doctest::Approx(1.0).epsilon(1e-6));
  CHECK(kt.log_density(0.7) == doctest::Approx(ref_time_logpdf(0.7, 2.5, 0.8)));
  CHECK(kt.log_density(-0.7) == doctest::Approx(kt.log_density(0.7)));
  // offsets beyond half the circle are folded back
  CHECK(kt.log_density(2.1) == doctest::Approx(kt.log_density(0.4)));

  RngStream rng(17, 0);
  int m = 200000, inside = 0;
  double mean_abs = 0.0;
  for (int k = 0; k < m; ++k) {
    double d = kt.sample_offset(rng);
    REQUIRE(std::fabs(d) <= kt.beta / 2);
    if (std::fabs(d) < 0.4) ++inside;
    mean_abs += std::fabs(d);
  }
  mean_abs /= m;
  // P(|d| < a) and E|d| of the truncated exponential
  double cap = 1.0 - std::exp(-kt.beta / (2 * kt.xi));
  double p_in = (1.0 - std::exp(-0.4 / kt.xi)) / cap;
  double e_abs =
      (kt.xi - (kt.beta / 2 + kt.xi) * std::exp(-kt.beta / (2 * kt.xi))) / cap;
  CHECK((double)inside / m == doctest::Approx(p_in).epsilon(0.01));
  CHECK(mean_abs == doctest::Approx(e_abs).epsilon(0.01));
}

TEST_CASE("site kernel weights follow graph distance") {
  LatticeGraph g = build_layered_lattice(1, 6, true, true);
  std::vector<int> all = {0, 1, 2, 3, 4, 5};
  SiteKernel sk(g, all, 2, 1.7);
  double norm = 0.0;
  for (int s : all) norm += std::exp(sk.log_prob(s));
  CHECK(norm == doctest::Approx(1.0));
  CHECK(sk.log_prob(2) - sk.log_prob(4) == doctest::Approx(2.0 / 1.7));
  SiteKernel sub(g, {0, 3}, 0, 1.0);
  CHECK(std::exp(sub.log_prob(0)) + std::exp(sub.log_prob(3)) == doctest::Approx(1.0));
  CHECK(std::isinf(sub.log_prob(1)));

  RngStream rng(3, 1);
  int m = 120000;
  std::vector<int> hits(6, 0);
  for (int k = 0; k < m; ++k) ++hits[sk.sample(rng)];
  for (int s : all)
    CHECK((double)hits[s] / m == doctest::Approx(std::exp(sk.log_prob(s))).epsilon(0.03));
}

TEST_CASE("single-site create acceptance matches the hand formula") {
  LatticeGraph g = build_layered_lattice(1, 1, true, true);
  ModelParams p;
  p.j_intra = 0.0;
  p.u_onsite = 0.1;
  p.mu = {0.25};
  p.n_max = 2;
  p.beta = 1.0;
  UpdateParams u;
  u.gamma = 0.3;
  u.xi_time = 2.0;
  Engine eng(g, p, u, 1, 0);

  CreateChoice cc;
  cc.pairs = {PairSpec{0, 0.2, 0.7, 0, true}};
  auto r = eng.try_create(cc);
  REQUIRE(r);
  // weight: two ends at gamma sqrt(1), diagonal energy -mu over the raised range
  double dlogw = 2 * std::log(0.3) + 0.25 * 0.5;
  // forward density: anchor site and time, head offset, sense coin;
  // reverse: both removal senses viable
  double lqf = -std::log(1.0) - std::log(1.0) + ref_time_logpdf(0.5, 1.0, 2.0) + std::log(0.5);
  double lqr = std::log(0.5);
  CHECK(*r == doctest::Approx(dlogw + lqr - lqf).epsilon(1e-12));
  CHECK(eng.sector() == Sector::G);
  CHECK(eng.last_weight_delta() == doctest::Approx(dlogw).epsilon(1e-12));

  // the reverse annihilate cancels exactly
  AnnihilateChoice ac;
  ac.raise_sense = {true};
  auto r2 = eng.try_annihilate(ac);
  REQUIRE(r2);
  CHECK(*r + *r2 == doctest::Approx(0.0).epsilon(1e-12));
  CHECK(eng.sector() == Sector::Z);
}

TEST_CASE("per-layer create acceptance matches the hand formula") {
  LatticeGraph g = build_layered_lattice(2, 1, true, false);
  ModelParams p;
  p.j_intra = 0.0;
  p.j_inter = 0.0;
  p.mu = {0.25, 0.25};
  p.n_max = 1;
  p.beta = 1.0;
  UpdateParams u;
  u.gamma = 0.6;
  u.xi_space = 2.0;
  u.xi_time = 2.0;
  u.worms.mode = WormMode::per_layer;
  Engine eng(g, p, u, 1, 0);
  REQUIRE(eng.n_worms() == 2);

  CreateChoice cc;
  cc.pairs = {PairSpec{0, 0.2, 0.7, 0, true}, PairSpec{1, 0.3, 0.6, 1, true}};
  auto r = eng.try_create(cc);
  REQUIRE(r);
  double dlogw = (2 * std::log(0.6) + 0.25 * 0.5) + (2 * std::log(0.6) + 0.25 * 0.3);
  // heads 0.7 vs 0.6 and tails 0.2 vs 0.3 on adjacent layers
  double lw = -2.0 * (1.0 / 2.0 + 0.1 / 2.0);
  double lqf = -std::log(1.0) - std::log(1.0) + ref_time_logpdf(0.5, 1.0, 2.0) +
               0.0 /* only site of layer 1 */ + ref_time_logpdf(0.1, 1.0, 2.0) +
               ref_time_logpdf(0.3, 1.0, 2.0) + 2 * std::log(0.5);
  double lqr = 2 * std::log(0.5);
  CHECK(*r == doctest::Approx(dlogw + lw + lqr - lqf).epsilon(1e-12));
  CHECK(eng.last_weight_delta() == doctest::Approx(dlogw + lw).epsilon(1e-12));

  AnnihilateChoice ac;
  ac.raise_sense = {true, true};
  auto r2 = eng.try_annihilate(ac);
  REQUIRE(r2);
  CHECK(*r + *r2 == doctest::Approx(0.0).epsilon(1e-12));
}

TEST_CASE("scripted moves reverse exactly and roll back bit-exact") {
  LatticeGraph g = build_layered_lattice(1, 2, true, true);
  ModelParams p;
  p.j_intra = 1.0;
  p.mu = {0.4};
  p.n_max = 1;
  p.beta = 1.5;
  UpdateParams u;
  u.gamma = 0.8;
  u.xi_time = 1.0;
  Engine eng(g, p, u, 2, 0);

  Worldlines z0 = eng.worldlines();
  CreateChoice cc;
  cc.pairs = {PairSpec{0, 0.2, 0.9, 0, true}};
  auto rc = eng.try_create(cc);
  REQUIRE(rc);
  eng.rollback();
  CHECK(eng.worldlines() == z0);

  REQUIRE(eng.try_create(cc));
  eng.commit();
  REQUIRE(eng.sector() == Sector::G);
  Worldlines g0 = eng.worldlines();

  // shift the head forward and back
  ShiftChoice sh{1, 1.05};
  auto r1 = eng.try_shift(sh);
  REQUIRE(r1);
  Worldlines g1 = eng.worldlines();
  auto r2 = eng.try_shift(ShiftChoice{1, 0.9});
  REQUIRE(r2);
  CHECK(*r1 + *r2 == doctest::Approx(0.0).epsilon(1e-10));
  eng.rollback();
  CHECK(eng.worldlines() == g1);
  REQUIRE(eng.try_shift(ShiftChoice{1, 0.9}));
  eng.commit();
  CHECK(eng.worldlines() == g0);

  // jump the tail across the bond and back; the kink id is restored on reverse
  KinkInsertChoice ki{0, true, 1, 0.5};
  auto k1 = eng.try_kink_insert(ki);
  REQUIRE(k1);
  CHECK(eng.worldlines().kink_count() == 1);
  Worldlines g2 = eng.worldlines();
  auto k2 = eng.try_kink_remove(KinkRemoveChoice{0, true});
  REQUIRE(k2);
  CHECK(*k1 + *k2 == doctest::Approx(0.0).epsilon(1e-10));
  eng.rollback();
  CHECK(eng.worldlines() == g2);
}

namespace {

struct AuditStats {
  int create = 0, annihilate = 0, shift = 0, kins = 0, krem = 0, skipped = 0;
};

// Propose a move with the engine's own sampler, apply it, build the exact
// reverse choice, and check the two log acceptance ratios cancel. The engine
// is restored from a full snapshot afterwards so the driving chain replays
// deterministically.
void audit_reversal(Engine& eng, int which, AuditStats& st) {
  const double tol = 1e-9;
  Worldlines before = eng.worldlines();
  if (eng.sector() == Sector::Z) {
    // create is the only move family with support here
    CreateChoice cc = eng.propose_create();
    auto r1 = eng.try_create(cc);
    if (!r1) {
      CHECK(eng.worldlines() == before);
      ++st.skipped;
      return;
    }
    AnnihilateChoice ac;
    for (const auto& ps : cc.pairs) ac.raise_sense.push_back(ps.raise);
    auto r2 = eng.try_annihilate(ac);
    REQUIRE(r2);
    CHECK(*r1 + *r2 == doctest::Approx(0.0).epsilon(tol));
    ++st.create;
    return;
  }
  switch (which % 4) {
    case 0: {  // annihilate then re-create
      AnnihilateChoice ac = eng.propose_annihilate();
      // replay the sense resolution on a scratch copy: each pair is judged
      // with the later pairs already stripped
      Worldlines scratch = eng.worldlines();
      int n = eng.n_worms();
      std::vector<PairSpec> specs(n);
      bool viable = true;
      for (int k = n - 1; k >= 0 && viable; --k) {
        const WormEnd& t = scratch.worm_ends()[2 * k];
        const WormEnd& h = scratch.worm_ends()[2 * k + 1];
        if (t.site != h.site) {
          viable = false;
          break;
        }
        auto sd = scratch.pair_removal_sides(t.id, h.id);
        int v = (sd.raise_ok ? 1 : 0) + (sd.lower_ok ? 1 : 0);
        if (v == 0) {
          viable = false;
          break;
        }
        bool sense = v == 2 ? (bool)ac.raise_sense[k] : sd.raise_ok;
        specs[k] = PairSpec{t.site, t.time, h.time, t.species, sense};
        REQUIRE(scratch.remove_pair(t.id, h.id, sense) == WlStatus::ok);
      }
      auto r1 = eng.try_annihilate(ac);
      if (!r1) {
        CHECK(eng.worldlines() == before);
        ++st.skipped;
        return;
      }
      REQUIRE(viable);
      CHECK(eng.worldlines() == scratch);
      CreateChoice cc;
      cc.pairs = specs;
      auto r2 = eng.try_create(cc);
      REQUIRE(r2);
      CHECK(*r1 + *r2 == doctest::Approx(0.0).epsilon(tol));
      ++st.annihilate;
      return;
    }
    case 1: {  // shift there and back
      ShiftChoice sc = eng.propose_shift();
      double t_old = eng.worldlines().worm_ends()[sc.end_index].time;
      auto r1 = eng.try_shift(sc);
      if (!r1) {
        CHECK(eng.worldlines() == before);
        ++st.skipped;
        return;
      }
      auto r2 = eng.try_shift(ShiftChoice{sc.end_index, t_old});
      REQUIRE(r2);
      CHECK(*r1 + *r2 == doctest::Approx(0.0).epsilon(tol));
      ++st.shift;
      return;
    }
    case 2: {  // insert a kink, remove it again
      KinkInsertChoice ki = eng.propose_kink_insert();
      auto r1 = eng.try_kink_insert(ki);
      if (!r1) {
        CHECK(eng.worldlines() == before);
        ++st.skipped;
        return;
      }
      auto r2 = eng.try_kink_remove(KinkRemoveChoice{ki.end_index, ki.up});
      REQUIRE(r2);
      CHECK(*r1 + *r2 == doctest::Approx(0.0).epsilon(tol));
      ++st.kins;
      return;
    }
    default: {  // remove a kink, insert it back
      KinkRemoveChoice kr = eng.propose_kink_remove();
      const WormEnd& w = eng.worldlines().worm_ends()[kr.end_index];
      double tk = 0.0;
      const Event* adj = kr.up ? eng.worldlines().next_event(w.site, w.time, &tk)
                               : eng.worldlines().prev_event(w.site, w.time, &tk);
      int back_site = w.site;
      auto r1 = eng.try_kink_remove(kr);
      if (!r1) {
        CHECK(eng.worldlines() == before);
        ++st.skipped;
        return;
      }
      REQUIRE(adj != nullptr);
      auto r2 = eng.try_kink_insert(KinkInsertChoice{kr.end_index, kr.up, back_site, tk});
      REQUIRE(r2);
      CHECK(*r1 + *r2 == doctest::Approx(0.0).epsilon(tol));
      ++st.krem;
      return;
    }
  }
}

void run_reversal_fuzz(const LatticeGraph& g, const ModelParams& p, const UpdateParams& u,
                       std::uint64_t seed, int n_steps, int audit_every) {
  Engine eng(g, p, u, seed, 0);
  AuditStats st;
  int session = 0;
  for (int t = 0; t < n_steps; ++t) {
    // the diagonal sector is rare once several worms pay off, so every visit
    // gets audited; the worm sector only every audit_every steps
    bool due = eng.sector() == Sector::Z || t % audit_every == 0;
    if (t > n_steps / 10 && due) {
      std::stringstream snap;
      eng.save_state(snap);
      audit_reversal(eng, session++, st);
      std::stringstream back(snap.str());
      eng.load_state(back);
    }
    eng.metropolis_step();
    if (t % 997 == 0) {
      auto errs = eng.worldlines().validate(&g);
      if (!errs.empty()) FAIL(errs.front());
    }
  }
  // the audit must actually have exercised every move family
  CHECK(st.create > 3);
  CHECK(st.annihilate > 3);
  CHECK(st.shift > 3);
  CHECK(st.kins > 3);
  CHECK(st.krem > 3);
  CHECK(eng.counters().steps == (std::uint64_t)n_steps);
  CHECK(eng.counters().proposed_total() == (std::uint64_t)n_steps);
  CHECK(eng.counters().accepted_total() <= eng.counters().proposed_total());
}

}  // namespace

TEST_CASE("reversal audit: single worm, soft-core bosons with inter hops") {
  LatticeGraph g = build_layered_lattice(2, 3, true, false);
  ModelParams p;
  p.j_intra = 1.0;
  p.j_inter = 0.6;
  p.v_inter = 0.7;
  p.u_onsite = 0.35;
  p.mu = {0.9, 0.4};
  p.n_max = 3;
  p.beta = 0.9;
  UpdateParams u;
  u.gamma = 1.1;
  u.debug_weights = true;
  Engine check_throws(g, p, u, 1, 0);  // debug mode must not fire during normal runs
  check_throws.run_sweeps(50);
  run_reversal_fuzz(g, p, u, 11, 60000, 23);
}

TEST_CASE("reversal audit: two indistinguishable worms") {
  LatticeGraph g = build_layered_lattice(2, 3, true, false);
  ModelParams p;
  p.j_intra = 1.0;
  p.j_inter = 0.5;
  p.v_inter = 0.9;
  p.u_onsite = 0.4;
  p.mu = {0.7, 0.5};
  p.n_max = 2;
  p.beta = 1.1;
  UpdateParams u;
  u.gamma = 0.9;
  u.worms.mode = WormMode::indist;
  u.worms.n = 2;
  u.debug_weights = true;
  run_reversal_fuzz(g, p, u, 13, 60000, 19);
}

TEST_CASE("reversal audit: per-layer worms with interlayer attraction") {
  LatticeGraph g = build_layered_lattice(2, 4, true, false);
  ModelParams p;
  p.j_intra = 1.0;
  p.j_inter = 0.0;
  p.v_inter = 1.3;
  p.u_onsite = 0.0;
  p.mu = {0.6, 0.6};
  p.n_max = 1;
  p.beta = 1.3;
  UpdateParams u;
  u.gamma = 0.8;
  u.worms.mode = WormMode::per_layer;
  u.debug_weights = true;
  run_reversal_fuzz(g, p, u, 17, 60000, 19);
}

TEST_CASE("diagonal-sector physics matches exact diagonalization") {
  LatticeGraph g = build_layered_lattice(1, 2, true, true);
  ModelParams p;
  p.j_intra = 1.0;
  p.mu = {0.5};
  p.n_max = 1;
  p.beta = 1.5;
  ExactDiag ed(g, p);
  double exact_n =
      (ed.thermal_mean_n(0, p.beta) + ed.thermal_mean_n(1, p.beta)) / g.n_sites();
  double exact_kin = ed.thermal_kinetic(p.beta);
  double exact_ediag = ed.thermal_diag_energy(p.beta);

  for (double gamma : {0.5, 1.2}) {
    UpdateParams u;
    u.gamma = gamma;
    u.debug_weights = true;
    Engine eng(g, p, u, 101, 0);
    long nz = 0;
    double sn = 0, sk = 0, se = 0;
    eng.run_sweeps(80000, [&](const Engine& e) {
      if (e.sector() != Sector::Z) return;
      ++nz;
      double tot = 0;
      for (int s = 0; s < e.graph().n_sites(); ++s)
        tot += e.worldlines().total_occupation_integral(s);
      sn += tot / (p.beta * e.graph().n_sites());
      sk += e.worldlines().kink_count();
      se += e.worldlines().diag_energy_integral(p, g) / p.beta;
    });
    REQUIRE(nz > 5000);
    CHECK(sn / nz == doctest::Approx(exact_n).epsilon(0.02));
    // mean kink count equals -beta <H1>
    CHECK(-(sk / nz) / p.beta == doctest::Approx(exact_kin).epsilon(0.05));
    CHECK(se / nz == doctest::Approx(exact_ediag).epsilon(0.05));
  }
}

TEST_CASE("diagonal-sector physics: coupled soft-core column") {
  LatticeGraph g = build_layered_lattice(2, 1, true, false);
  ModelParams p;
  p.j_intra = 0.0;
  p.j_inter = 0.8;
  p.v_inter = 0.9;
  p.u_onsite = 0.7;
  p.mu = {1.2, 0.9};
  p.n_max = 3;
  p.beta = 1.2;
  ExactDiag ed(g, p);
  double exact_n0 = ed.thermal_mean_n(0, p.beta);
  double exact_n1 = ed.thermal_mean_n(1, p.beta);
  double exact_kin = ed.thermal_kinetic(p.beta);

  UpdateParams u;
  u.gamma = 1.0;
  u.debug_weights = true;
  Engine eng(g, p, u, 7, 2);
  long nz = 0;
  double s0 = 0, s1 = 0, sk = 0;
  eng.run_sweeps(120000, [&](const Engine& e) {
    if (e.sector() != Sector::Z) return;
    ++nz;
    s0 += e.worldlines().total_occupation_integral(0) / p.beta;
    s1 += e.worldlines().total_occupation_integral(1) / p.beta;
    sk += e.worldlines().kink_count();
  });
  REQUIRE(nz > 5000);
  CHECK(s0 / nz == doctest::Approx(exact_n0).epsilon(0.03));
  CHECK(s1 / nz == doctest::Approx(exact_n1).epsilon(0.03));
  CHECK(-(sk / nz) / p.beta == doctest::Approx(exact_kin).epsilon(0.06));
}

TEST_CASE("per-layer worms leave diagonal-sector physics unchanged") {
  LatticeGraph g = build_layered_lattice(2, 2, true, false);
  ModelParams p;
  p.j_intra = 1.0;
  p.j_inter = 0.0;
  p.v_inter = 1.1;
  p.u_onsite = 0.6;
  p.mu = {0.3, 0.8};
  p.n_max = 2;
  p.beta = 1.2;
  ExactDiag ed(g, p);
  double exact_total = ed.thermal_total_n(p.beta);

  UpdateParams u;
  u.gamma = 0.8;
  u.worms.mode = WormMode::per_layer;
  u.debug_weights = true;
  Engine eng(g, p, u, 23, 0);
  long nz = 0;
  double sn = 0;
  eng.run_sweeps(60000, [&](const Engine& e) {
    if (e.sector() != Sector::Z) return;
    ++nz;
    double tot = 0;
    for (int s = 0; s < e.graph().n_sites(); ++s)
      tot += e.worldlines().total_occupation_integral(s);
    sn += tot / p.beta;
  });
  REQUIRE(nz > 4000);
  CHECK(sn / nz == doctest::Approx(exact_total).epsilon(0.03));
}

TEST_CASE("chains are deterministic and seed-separated") {
  LatticeGraph g = build_layered_lattice(2, 3, true, false);
  ModelParams p;
  p.j_intra = 1.0;
  p.j_inter = 0.4;
  p.v_inter = 0.5;
  p.u_onsite = 0.3;
  p.mu = {0.6, 0.6};
  p.n_max = 2;
  p.beta = 1.0;
  UpdateParams u;
  Engine a(g, p, u, 42, 0), b(g, p, u, 42, 0), c(g, p, u, 42, 1);
  for (int t = 0; t < 20000; ++t) {
    a.metropolis_step();
    b.metropolis_step();
    c.metropolis_step();
  }
  CHECK(a.worldlines() == b.worldlines());
  CHECK(a.counters().steps == b.counters().steps);
  for (int k = 0; k < kMoveKinds; ++k) {
    CHECK(a.counters().proposed[k] == b.counters().proposed[k]);
    CHECK(a.counters().accepted[k] == b.counters().accepted[k]);
  }
  bool chain_differs = !(a.worldlines() == c.worldlines()) ||
                       a.counters().accepted_total() != c.counters().accepted_total();
  CHECK(chain_differs);
}

TEST_CASE("engine state round-trips through save and load") {
  LatticeGraph g = build_layered_lattice(2, 3, true, false);
  ModelParams p;
  p.j_intra = 1.0;
  p.j_inter = 0.3;
  p.v_inter = 0.6;
  p.u_onsite = 0.2;
  p.mu = {0.5, 0.7};
  p.n_max = 2;
  p.beta = 1.1;
  UpdateParams u;
  u.worms.mode = WormMode::indist;
  u.worms.n = 2;
  Engine a(g, p, u, 9, 4);
  for (int t = 0; t < 15000; ++t) a.metropolis_step();
  std::stringstream ss;
  a.save_state(ss);

  Engine b(g, p, u, 0, 0);
  b.load_state(ss);
  CHECK(a.worldlines() == b.worldlines());
  CHECK(a.counters().steps == b.counters().steps);
  for (int t = 0; t < 8000; ++t) {
    a.metropolis_step();
    b.metropolis_step();
  }
  CHECK(a.worldlines() == b.worldlines());
  CHECK(a.counters().accepted_total() == b.counters().accepted_total());

  std::stringstream bad("wormpimc engine v9\n");
  CHECK_THROWS_AS(b.load_state(bad), std::runtime_error);
}

TEST_CASE("engine rejects invalid parameters") {
  LatticeGraph g = build_layered_lattice(2, 2, true, false);
  ModelParams p;
  p.mu = {0.5, 0.5};
  p.beta = 1.0;
  UpdateParams u;
  u.p_create = 0.5;  // table no longer sums to one
  CHECK_THROWS_AS(Engine(g, p, u, 1, 0), std::invalid_argument);
  UpdateParams u2;
  u2.worms.mode = WormMode::per_layer;
  ModelParams p2 = p;
  p2.j_inter = 0.5;  // per-layer worms need a conserved layer label
  CHECK_THROWS_AS(Engine(g, p2, u2, 1, 0), std::invalid_argument);
  UpdateParams u3;
  u3.gamma = -1.0;
  CHECK_THROWS_AS(Engine(g, p, u3, 1, 0), std::invalid_argument);
}
