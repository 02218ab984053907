#include "wormpimc/estimators.hpp"

#include <algorithm>
#include <cassert>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <istream>
#include <map>
#include <ostream>
#include <stdexcept>
#include <string>

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
  if (end != c + s.size()) throw std::runtime_error("estimators: bad float token '" + s + "'");
  return v;
}

// equal-size index blocks over n records, at most 64 of them
std::vector<std::size_t> block_bounds(std::size_t n) {
  const std::size_t nb = std::min<std::size_t>(64, n);
  std::vector<std::size_t> b(nb + 1);
  for (std::size_t i = 0; i <= nb; ++i) b[i] = i * n / nb;
  return b;
}

}  // namespace

DiagonalAccumulator::DiagonalAccumulator(const LatticeGraph& g, const ModelParams& p)
    : g_(g), p_(p), fill_(g.n_layers) {}

void DiagonalAccumulator::record(const Worldlines& wl) {
  if (!wl.worm_ends().empty())
    throw std::logic_error("DiagonalAccumulator::record: G-sector configuration");
  const double beta = p_.beta;
  const int L = g_.sites_per_layer;
  double total = 0.0;
  for (int l = 0; l < g_.n_layers; ++l) {
    double np = 0.0;
    for (int x = 0; x < L; ++x) np += wl.total_occupation_integral(g_.site_at(l, x));
    np /= beta;
    total += np;
    const double f = np / L;
    assert(f >= 0.0 && f <= p_.n_max + 1e-9);
    fill_[l].push_back(f);
  }
  total_n_.push_back(total);
  e_diag_.push_back(wl.diag_energy_integral(p_, g_) / beta);
  kinks_.push_back((double)wl.kink_count());
}

void DiagonalAccumulator::record_structure(const Worldlines& wl) {
  if (!wl.worm_ends().empty())
    throw std::logic_error("DiagonalAccumulator::record_structure: G-sector configuration");
  const int M = g_.n_layers, L = g_.sites_per_layer;
  std::vector<int> occ(g_.n_sites());
  for (int s = 0; s < g_.n_sites(); ++s) occ[s] = wl.occupation_at(s, 0.0);
  if (s_intra_.empty()) s_intra_.assign(L / 2 + 1, 0);
  const int dlmax = g_.pbc_inter ? M / 2 : M - 1;
  if (s_inter_.empty()) s_inter_.assign(std::max(dlmax, 0), 0);
  for (int dx = 0; dx <= L / 2; ++dx) {
    long long acc = 0;
    for (int l = 0; l < M; ++l)
      for (int x = 0; x < L; ++x) {
        if (!g_.pbc_intra && x + dx >= L) continue;
        acc += occ[g_.site_at(l, x)] * occ[g_.site_at(l, (x + dx) % L)];
      }
    s_intra_[dx] += acc;
  }
  for (int dl = 1; dl <= dlmax; ++dl) {
    long long acc = 0;
    for (int l = 0; l < M; ++l) {
      if (!g_.pbc_inter && l + dl >= M) continue;
      for (int x = 0; x < L; ++x)
        acc += occ[g_.site_at(l, x)] * occ[g_.site_at((l + dl) % M, x)];
    }
    s_inter_[dl - 1] += acc;
  }
  ++struct_n_;
}

BlockedStats DiagonalAccumulator::filling(int layer) const {
  return blocking_errors(fill_.at(layer));
}

BlockedStats DiagonalAccumulator::kinetic_energy() const {
  BlockedStats b = blocking_errors(kinks_);
  b.mean = -b.mean / p_.beta;
  b.stderr_ /= p_.beta;
  return b;
}

std::vector<double> DiagonalAccumulator::structure_intra() const {
  const int M = g_.n_layers, L = g_.sites_per_layer;
  std::vector<double> out(s_intra_.size(), 0.0);
  if (struct_n_ == 0) return out;
  for (std::size_t dx = 0; dx < s_intra_.size(); ++dx) {
    long long pairs = 0;
    for (int x = 0; x < L; ++x)
      if (g_.pbc_intra || x + (int)dx < L) ++pairs;
    pairs *= M;
    if (pairs > 0) out[dx] = (double)s_intra_[dx] / ((double)struct_n_ * (double)pairs);
  }
  return out;
}

std::vector<double> DiagonalAccumulator::structure_inter() const {
  const int M = g_.n_layers, L = g_.sites_per_layer;
  std::vector<double> out(s_inter_.size(), 0.0);
  if (struct_n_ == 0) return out;
  for (std::size_t k = 0; k < s_inter_.size(); ++k) {
    const int dl = (int)k + 1;
    long long pairs = 0;
    for (int l = 0; l < M; ++l)
      if (g_.pbc_inter || l + dl < M) ++pairs;
    pairs *= L;
    if (pairs > 0) out[k] = (double)s_inter_[k] / ((double)struct_n_ * (double)pairs);
  }
  return out;
}

void DiagonalAccumulator::merge(const DiagonalAccumulator& o) {
  if (g_.n_layers != o.g_.n_layers || g_.sites_per_layer != o.g_.sites_per_layer ||
      p_.beta != o.p_.beta || p_.n_max != o.p_.n_max)
    throw std::invalid_argument("DiagonalAccumulator::merge: mismatched geometry");
  total_n_.insert(total_n_.end(), o.total_n_.begin(), o.total_n_.end());
  e_diag_.insert(e_diag_.end(), o.e_diag_.begin(), o.e_diag_.end());
  kinks_.insert(kinks_.end(), o.kinks_.begin(), o.kinks_.end());
  for (int l = 0; l < g_.n_layers; ++l)
    fill_[l].insert(fill_[l].end(), o.fill_[l].begin(), o.fill_[l].end());
  if (s_intra_.empty()) s_intra_.assign(o.s_intra_.size(), 0);
  if (s_inter_.empty()) s_inter_.assign(o.s_inter_.size(), 0);
  for (std::size_t i = 0; i < o.s_intra_.size(); ++i) s_intra_[i] += o.s_intra_[i];
  for (std::size_t i = 0; i < o.s_inter_.size(); ++i) s_inter_[i] += o.s_inter_[i];
  struct_n_ += o.struct_n_;
}

void DiagonalAccumulator::save(std::ostream& os) const {
  os << "wormpimc diag v1\n";
  os << "layers " << g_.n_layers << " spl " << g_.sites_per_layer << " n_max " << p_.n_max
     << " beta " << hexd(p_.beta) << "\n";
  os << "samples " << total_n_.size() << "\n";
  for (std::size_t i = 0; i < total_n_.size(); ++i) {
    os << hexd(total_n_[i]) << ' ' << hexd(e_diag_[i]) << ' ' << hexd(kinks_[i]);
    for (int l = 0; l < g_.n_layers; ++l) os << ' ' << hexd(fill_[l][i]);
    os << "\n";
  }
  os << "structure " << struct_n_ << ' ' << s_intra_.size() << ' ' << s_inter_.size() << "\n";
  for (long long v : s_intra_) os << v << "\n";
  for (long long v : s_inter_) os << v << "\n";
  os << "end\n";
}

DiagonalAccumulator DiagonalAccumulator::load(std::istream& is, const LatticeGraph& g,
                                              const ModelParams& p) {
  auto fail = [](const std::string& why) {
    return std::runtime_error("diag accumulator load: " + why);
  };
  std::string line, tok;
  if (!std::getline(is, line) || line != "wormpimc diag v1") throw fail("bad header");
  int layers = 0, spl = 0, n_max = 0;
  std::string bstr;
  is >> tok >> layers >> tok >> spl >> tok >> n_max >> tok >> bstr;
  if (!is) throw fail("truncated meta");
  if (layers != g.n_layers || spl != g.sites_per_layer || n_max != p.n_max ||
      parse_hexd(bstr) != p.beta)
    throw fail("geometry mismatch");
  DiagonalAccumulator a(g, p);
  std::size_t n = 0;
  is >> tok >> n;
  if (tok != "samples") throw fail("expected samples");
  for (std::size_t i = 0; i < n; ++i) {
    std::string t1, t2, t3;
    is >> t1 >> t2 >> t3;
    a.total_n_.push_back(parse_hexd(t1));
    a.e_diag_.push_back(parse_hexd(t2));
    a.kinks_.push_back(parse_hexd(t3));
    for (int l = 0; l < layers; ++l) {
      is >> t1;
      a.fill_[l].push_back(parse_hexd(t1));
    }
    if (!is) throw fail("truncated samples");
  }
  std::size_t ki = 0, ke = 0;
  is >> tok >> a.struct_n_ >> ki >> ke;
  if (tok != "structure") throw fail("expected structure");
  a.s_intra_.resize(ki);
  a.s_inter_.resize(ke);
  for (auto& v : a.s_intra_) is >> v;
  for (auto& v : a.s_inter_) is >> v;
  is >> tok;
  if (!is || tok != "end") throw fail("expected end");
  return a;
}

DnHistogram::DnHistogram(DnMode mode, const LatticeGraph& g, const WormSpec& spec, double beta,
                         double gamma, double xi_space, double xi_time)
    : mode_(mode),
      n_worms_(spec.n_worms(g.n_layers)),
      layer_locked_(spec.layer_locked()),
      layers_(g.n_layers),
      spl_(g.sites_per_layer),
      beta_(beta),
      gamma_(gamma),
      xi_s_(xi_space),
      xi_t_(xi_time),
      g_(g) {
  if (beta <= 0 || gamma <= 0 || xi_space <= 0 || xi_time <= 0)
    throw std::invalid_argument("DnHistogram: scales must be positive");
  switch (mode) {
    case DnMode::displacements:
      if (n_worms_ < 1 || n_worms_ > 3)
        throw std::invalid_argument("DnHistogram: displacements takes 1..3 worms");
      if (spl_ > 250) throw std::invalid_argument("DnHistogram: layer too long for int8 bins");
      break;
    case DnMode::green_table:
      if (n_worms_ != 1) throw std::invalid_argument("DnHistogram: green table is single-worm");
      if (g.n_sites() > 64) throw std::invalid_argument("DnHistogram: green table site cap");
      break;
    case DnMode::pair_table:
      if (n_worms_ != 2) throw std::invalid_argument("DnHistogram: pair table is two-worm");
      if (g.n_sites() > 16) throw std::invalid_argument("DnHistogram: pair table site cap");
      break;
  }
}

void DnHistogram::record(const Worldlines& wl) {
  const auto& ends = wl.worm_ends();
  if (ends.empty()) throw std::logic_error("DnHistogram::record: Z-sector configuration");
  if ((int)ends.size() != 2 * n_worms_)
    throw std::logic_error("DnHistogram::record: worm count mismatch");
  for (int k = 0; k < n_worms_; ++k) {
    const WormEnd& t = ends[2 * k];
    const WormEnd& h = ends[2 * k + 1];
    const int want = layer_locked_ ? k : 0;
    if (t.head || !h.head || t.id + 1 != h.id || t.species != want || h.species != want ||
        (layer_locked_ && (g_.layer_of(t.site) != k || g_.layer_of(h.site) != k)))
      throw std::logic_error("DnHistogram::record: end multiset does not match the spec");
  }
  record_ends(ends, tether_log_weight(ends, g_, beta_, xi_s_, xi_t_));
}

void DnHistogram::record_ends(const std::vector<WormEnd>& ends, double log_w) {
  assert((int)ends.size() == 2 * n_worms_);
  assert(log_w <= 1e-9);
  Rec r;
  r.invw = std::exp(-log_w);
  auto hpos = [&](int k) { return g_.pos_of(ends[2 * k + 1].site); };
  auto tpos = [&](int k) { return g_.pos_of(ends[2 * k].site); };
  switch (mode_) {
    case DnMode::displacements: {
      const int np = pair_count();
      for (int c = 0; c < np; ++c) {
        const int a = c, b = (c + 1) % n_worms_;
        r.hh[c] = (std::int8_t)g_.ring_displacement(hpos(a), hpos(b));
        r.tt[c] = (std::int8_t)g_.ring_displacement(tpos(a), tpos(b));
      }
      for (int k = 0; k < n_worms_; ++k)
        r.th[k] = (std::int8_t)g_.ring_displacement(tpos(k), hpos(k));
      break;
    }
    case DnMode::green_table:
      r.packed = (std::uint32_t)(ends[1].site * g_.n_sites() + ends[0].site);
      break;
    case DnMode::pair_table: {
      const std::uint32_t s = (std::uint32_t)g_.n_sites();
      r.packed = ((((std::uint32_t)ends[1].site * s + ends[0].site) * s + ends[3].site) * s +
                  ends[2].site);
      break;
    }
  }
  recs_.push_back(r);
}

MeanErr DnHistogram::mean_end_distance(bool heads, int channel) const {
  if (mode_ != DnMode::displacements)
    throw std::logic_error("mean_end_distance: wrong histogram mode");
  if (recs_.empty()) throw std::runtime_error("mean_end_distance: no data");
  const int np = pair_count();
  if (np == 0) throw std::logic_error("mean_end_distance: needs at least two worms");
  if (channel >= np) throw std::logic_error("mean_end_distance: bad channel");
  const auto bb = block_bounds(recs_.size());
  const std::size_t nb = bb.size() - 1;
  std::vector<double> num(nb, 0.0), den(nb, 0.0);
  for (std::size_t b = 0; b < nb; ++b)
    for (std::size_t i = bb[b]; i < bb[b + 1]; ++i) {
      const Rec& r = recs_[i];
      double d = 0.0;
      int cnt = 0;
      for (int c = 0; c < np; ++c) {
        if (channel >= 0 && c != channel) continue;
        d += std::abs((int)(heads ? r.hh[c] : r.tt[c]));
        ++cnt;
      }
      num[b] += r.invw * d / cnt;
      den[b] += r.invw;
    }
  const JackknifeRatio jr = jackknife_ratio(num, den);
  return MeanErr{jr.mean, jr.stderr_};
}

Curve DnHistogram::fold_curve(int kind, int channel) const {
  if (mode_ != DnMode::displacements) throw std::logic_error("profiles need displacement mode");
  if (recs_.empty()) throw std::runtime_error("profile: no data");
  const int nch = kind == 2 ? n_worms_ : pair_count();
  if (channel < -1 || channel >= nch) throw std::logic_error("profile: bad channel");
  const int nbins = spl_ / 2 + 1;
  const auto bb = block_bounds(recs_.size());
  const std::size_t nb = bb.size() - 1;
  std::vector<std::vector<double>> num(nbins, std::vector<double>(nb, 0.0));
  std::vector<double> den(nb, 0.0);
  std::vector<long long> tally(nbins, 0);
  for (std::size_t b = 0; b < nb; ++b)
    for (std::size_t i = bb[b]; i < bb[b + 1]; ++i) {
      const Rec& r = recs_[i];
      const std::int8_t* ch = kind == 0 ? r.hh.data() : kind == 1 ? r.tt.data() : r.th.data();
      for (int c = 0; c < nch; ++c) {
        if (channel >= 0 && c != channel) continue;
        num[std::abs((int)ch[c])][b] += r.invw;
        den[b] += r.invw;
        ++tally[std::abs((int)ch[c])];
      }
    }
  Curve out;
  out.x.resize(nbins);
  out.value.resize(nbins);
  out.sigma.resize(nbins);
  for (int k = 0; k < nbins; ++k) {
    out.x[k] = k;
    const JackknifeRatio jr = jackknife_ratio(num[k], den);
    out.value[k] = jr.mean;
    out.sigma[k] = jr.stderr_;
  }
  out.count = std::move(tally);
  return out;
}

Curve DnHistogram::separation_curve(bool heads, int channel) const {
  return fold_curve(heads ? 0 : 1, channel);
}

Curve DnHistogram::signed_profile(int kind, int channel) const {
  if (mode_ != DnMode::displacements) throw std::logic_error("profiles need displacement mode");
  if (recs_.empty()) throw std::runtime_error("profile: no data");
  const int nch = kind == 2 ? n_worms_ : pair_count();
  if (channel < 0 || channel >= nch) throw std::logic_error("profile: bad channel");
  const int lo = -(spl_ - 1) / 2, hi = spl_ / 2;
  const int nbins = hi - lo + 1;
  const auto bb = block_bounds(recs_.size());
  const std::size_t nb = bb.size() - 1;
  std::vector<std::vector<double>> num(nbins, std::vector<double>(nb, 0.0));
  std::vector<double> den(nb, 0.0);
  std::vector<long long> tally(nbins, 0);
  for (std::size_t b = 0; b < nb; ++b)
    for (std::size_t i = bb[b]; i < bb[b + 1]; ++i) {
      const Rec& r = recs_[i];
      const std::int8_t* ch = kind == 0 ? r.hh.data() : kind == 1 ? r.tt.data() : r.th.data();
      num[(int)ch[channel] - lo][b] += r.invw;
      den[b] += r.invw;
      ++tally[(int)ch[channel] - lo];
    }
  Curve out;
  out.x.resize(nbins);
  out.value.resize(nbins);
  out.sigma.resize(nbins);
  for (int k = 0; k < nbins; ++k) {
    out.x[k] = lo + k;
    const JackknifeRatio jr = jackknife_ratio(num[k], den);
    out.value[k] = jr.mean;
    out.sigma[k] = jr.stderr_;
  }
  out.count = std::move(tally);
  return out;
}

Curve DnHistogram::f1() const { return f1_pair(0, 1); }

Curve DnHistogram::f1_pair(int a, int b) const {
  if (!layer_locked_ || n_worms_ != 3)
    throw std::logic_error("f1: needs three layer-locked worms");
  for (int c = 0; c < 3; ++c) {
    const int u = c, v = (c + 1) % 3;
    if ((a == u && b == v) || (a == v && b == u)) return fold_curve(0, c);
  }
  throw std::logic_error("f1: bad worm pair");
}

Curve DnHistogram::f2() const { return f2_of(0); }

Curve DnHistogram::f2_of(int worm) const {
  if (!layer_locked_ || n_worms_ != 3)
    throw std::logic_error("f2: needs three layer-locked worms");
  return fold_curve(2, worm);
}

std::vector<TableEntry> DnHistogram::table() const {
  if (mode_ == DnMode::displacements) throw std::logic_error("table: wrong histogram mode");
  if (n_z_ == 0) throw std::runtime_error("table: no Z-sector normalization");
  const double norm =
      mode_ == DnMode::green_table ? gamma_ * gamma_ * beta_ : gamma_ * gamma_ * gamma_ * gamma_;
  const auto bb = block_bounds(recs_.size());
  const std::size_t nb = bb.size() - 1;
  std::map<std::uint32_t, std::vector<double>> blocks;
  std::map<std::uint32_t, long long> tally;
  for (std::size_t b = 0; b < nb; ++b)
    for (std::size_t i = bb[b]; i < bb[b + 1]; ++i) {
      auto& v = blocks[recs_[i].packed];
      if (v.empty()) v.assign(nb, 0.0);
      v[b] += recs_[i].invw;
      ++tally[recs_[i].packed];
    }
  std::vector<TableEntry> out;
  const int s = g_.n_sites();
  for (const auto& [packed, bsum] : blocks) {
    TableEntry e;
    std::uint32_t p = packed;
    if (mode_ == DnMode::green_table) {
      e.sites[1] = p % s;
      e.sites[0] = p / s;
    } else {
      e.sites[3] = p % s;
      p /= s;
      e.sites[2] = p % s;
      p /= s;
      e.sites[1] = p % s;
      e.sites[0] = p / s;
    }
    double total = 0.0;
    for (double v : bsum) total += v;
    e.value = total / ((double)n_z_ * norm);
    double mean = total / nb, ss = 0.0;
    for (double v : bsum) ss += (v - mean) * (v - mean);
    const double sig_s = nb > 1 ? std::sqrt(ss * (double)nb / (double)(nb - 1)) : 0.0;
    const double rel_z = e.value / std::sqrt((double)n_z_);
    e.sigma = std::sqrt(sig_s * sig_s / ((double)n_z_ * norm * (double)n_z_ * norm) +
                        rel_z * rel_z);
    e.count = tally[packed];
    out.push_back(e);
  }
  return out;
}

void DnHistogram::check_meta(const DnHistogram& o) const {
  if (mode_ != o.mode_ || n_worms_ != o.n_worms_ || layer_locked_ != o.layer_locked_ ||
      layers_ != o.layers_ || spl_ != o.spl_ || beta_ != o.beta_ || gamma_ != o.gamma_ ||
      xi_s_ != o.xi_s_ || xi_t_ != o.xi_t_)
    throw std::invalid_argument("DnHistogram::merge: mismatched histograms");
}

void DnHistogram::merge(const DnHistogram& o) {
  check_meta(o);
  n_z_ += o.n_z_;
  recs_.insert(recs_.end(), o.recs_.begin(), o.recs_.end());
}

void DnHistogram::save(std::ostream& os) const {
  os << "wormpimc dnhist v1\n";
  os << "mode " << (int)mode_ << " n_worms " << n_worms_ << " layer_locked "
     << (layer_locked_ ? 1 : 0) << " layers " << layers_ << " spl " << spl_ << "\n";
  os << "beta " << hexd(beta_) << " gamma " << hexd(gamma_) << " xi_space " << hexd(xi_s_)
     << " xi_time " << hexd(xi_t_) << "\n";
  os << "n_z " << n_z_ << " records " << recs_.size() << "\n";
  for (const Rec& r : recs_) {
    os << hexd(r.invw);
    for (int c = 0; c < 3; ++c) os << ' ' << (int)r.hh[c];
    for (int c = 0; c < 3; ++c) os << ' ' << (int)r.tt[c];
    for (int c = 0; c < 3; ++c) os << ' ' << (int)r.th[c];
    os << ' ' << r.packed << "\n";
  }
  os << "end\n";
}

DnHistogram DnHistogram::load(std::istream& is, const LatticeGraph& g) {
  auto fail = [](const std::string& why) { return std::runtime_error("dnhist load: " + why); };
  std::string line, tok;
  if (!std::getline(is, line) || line != "wormpimc dnhist v1") throw fail("bad header");
  int mode = 0, nw = 0, locked = 0, layers = 0, spl = 0;
  is >> tok >> mode >> tok >> nw >> tok >> locked >> tok >> layers >> tok >> spl;
  if (!is) throw fail("truncated meta");
  if (layers != g.n_layers || spl != g.sites_per_layer) throw fail("geometry mismatch");
  std::string b, ga, xs, xt;
  is >> tok >> b >> tok >> ga >> tok >> xs >> tok >> xt;
  WormSpec spec;
  spec.mode = locked ? WormMode::per_layer : (nw == 1 ? WormMode::single : WormMode::indist);
  spec.n = nw;
  DnHistogram h((DnMode)mode, g, spec, parse_hexd(b), parse_hexd(ga), parse_hexd(xs),
                parse_hexd(xt));
  if (h.n_worms_ != nw) throw fail("worm count mismatch");
  std::size_t nrec = 0;
  is >> tok >> h.n_z_ >> tok >> nrec;
  if (!is) throw fail("truncated counts");
  h.recs_.resize(nrec);
  for (Rec& r : h.recs_) {
    std::string w;
    is >> w;
    r.invw = parse_hexd(w);
    int v = 0;
    for (int c = 0; c < 3; ++c) {
      is >> v;
      r.hh[c] = (std::int8_t)v;
    }
    for (int c = 0; c < 3; ++c) {
      is >> v;
      r.tt[c] = (std::int8_t)v;
    }
    for (int c = 0; c < 3; ++c) {
      is >> v;
      r.th[c] = (std::int8_t)v;
    }
    is >> r.packed;
    if (!is) throw fail("truncated record");
  }
  is >> tok;
  if (!is || tok != "end") throw fail("expected end");
  return h;
}

DecayFit fit_decay(const Curve& c) {
  DecayFit out;
  std::vector<double> x, y, sig;
  for (std::size_t i = 0; i < c.x.size(); ++i) {
    if (c.x[i] <= 0.0 || c.value[i] <= 0.0 || c.sigma[i] <= 0.0) continue;
    if (c.sigma[i] / c.value[i] >= 0.5) continue;
    x.push_back(c.x[i]);
    y.push_back(std::log(c.value[i]));
    sig.push_back(c.sigma[i] / c.value[i]);
  }
  out.n_bins_used = (int)x.size();
  if (out.n_bins_used < 6) return out;
  const LineFit fe = weighted_line_fit(x, y, sig);
  std::vector<double> lx(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) lx[i] = std::log(x[i]);
  const LineFit fa = weighted_line_fit(lx, y, sig);
  out.rate = -fe.b;
  out.rate_err = std::sqrt(fe.var_b);
  out.exponent = -fa.b;
  out.exponent_err = std::sqrt(fa.var_b);
  out.chi2_exp = fe.chi2;
  out.chi2_alg = fa.chi2;
  // a model only counts as decaying if its parameter is significantly positive;
  // a flat curve fits both forms with slope ~0 and must not win by residuals alone
  const bool exp_ok = out.rate > 2.0 * out.rate_err;
  const bool alg_ok = out.exponent > 2.0 * out.exponent_err;
  if (exp_ok && alg_ok) {
    if (fe.chi2 < 0.8 * fa.chi2)
      out.preferred = DecayFit::Model::exponential;
    else if (fa.chi2 < 0.8 * fe.chi2)
      out.preferred = DecayFit::Model::algebraic;
    else
      out.preferred = DecayFit::Model::inconclusive;
  } else if (exp_ok) {
    out.preferred = DecayFit::Model::exponential;
  } else if (alg_ok) {
    out.preferred = DecayFit::Model::algebraic;
  } else {
    out.preferred = DecayFit::Model::inconclusive;
  }
  return out;
}

}  // namespace wormpimc
