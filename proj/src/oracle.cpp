#include "wormpimc/oracle.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace wormpimc {

long double simplex_exp_integral(double beta, const std::vector<double>& energies) {
  const int n = (int)energies.size();
  if (n < 1) throw std::invalid_argument("simplex_exp_integral: empty energy list");
  if (!(beta > 0)) throw std::invalid_argument("simplex_exp_integral: beta must be positive");
  long double mean = 0.0L;
  for (double e : energies) mean += e;
  mean /= n;
  std::vector<long double> delta(n);
  long double dmax = 0.0L;
  for (int i = 0; i < n; ++i) {
    delta[i] = (long double)energies[i] - mean;
    dmax = std::max(dmax, fabsl(delta[i]));
  }
  const long double x = (long double)beta * dmax;
  if (x > 80.0L)
    throw std::runtime_error("simplex_exp_integral: beta * energy spread too large for the series");

  // sum_m (-beta)^m h_m(delta) / (n-1+m)!, h_m complete homogeneous symmetric
  const int order = (int)(2.8L * x) + 40;
  std::vector<long double> h(order + 1, 0.0L);
  h[0] = 1.0L;
  for (int i = 0; i < n; ++i)
    for (int m = 1; m <= order; ++m) h[m] += delta[i] * h[m - 1];
  long double sum = 0.0L;
  long double coef = 1.0L;  // (-beta)^m / (n-1+m)!
  for (int k = 2; k < n; ++k) coef /= k;
  for (int m = 0; m <= order; ++m) {
    sum += coef * h[m];
    coef *= -(long double)beta / (n + m);
  }
  long double scale = expl(-(long double)beta * mean);
  for (int k = 1; k < n; ++k) scale *= beta;
  return scale * sum;
}

ExactDiag::ExactDiag(const LatticeGraph& g, const ModelParams& p) : g_(g), p_(p) {
  p_.validate(g_);
  const int ns = g_.n_sites();
  const double logdim = ns * std::log((double)p_.n_max + 1.0);
  if (logdim > std::log(20000.0))
    throw std::runtime_error("ExactDiag: Fock space exceeds 20000 states");
  dim_ = 1;
  radix_.assign(ns, 0);
  for (int s = 0; s < ns; ++s) {
    radix_[s] = dim_;
    dim_ *= p_.n_max + 1;
  }

  sector_of_.assign(dim_, -1);
  local_of_.assign(dim_, -1);
  for (int r = 0; r < dim_; ++r) {
    const auto key = key_of(decode(r));
    auto it = sector_index_.find(key);
    if (it == sector_index_.end()) {
      it = sector_index_.emplace(key, (int)sectors_.size()).first;
      sectors_.push_back(Sector{key, {}, {}, {}});
    }
    sector_of_[r] = it->second;
    local_of_[r] = (int)sectors_[it->second].states.size();
    sectors_[it->second].states.push_back(r);
  }

  const bool inter_hops = p_.j_inter != 0.0;
  e_min_ = std::numeric_limits<double>::infinity();
  for (auto& sec : sectors_) {
    const int sd = (int)sec.states.size();
    if (sd > 3000) throw std::runtime_error("ExactDiag: sector dimension exceeds 3000");
    Eigen::MatrixXd h = Eigen::MatrixXd::Zero(sd, sd);
    for (int f = 0; f < sd; ++f) {
      Occupations occ = decode(sec.states[f]);
      h(f, f) = diagonal_energy(occ, p_, g_);
      for (const Bond& b : g_.bonds) {
        if (b.kind == BondKind::inter && !inter_hops) continue;
        for (int dir = 0; dir < 2; ++dir) {
          const int from = dir ? b.b : b.a;
          const int to = dir ? b.a : b.b;
          if (occ[from] == 0 || occ[to] == p_.n_max) continue;
          const double elem = hop_element_value(occ[from], occ[to], b.kind, p_);
          if (elem == 0.0) continue;
          Occupations tgt = occ;
          tgt[from] -= 1;
          tgt[to] += 1;
          h(local_of_[rank_of(tgt)], f) += elem;
        }
      }
    }
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(h);
    sec.evals = solver.eigenvalues();
    sec.evecs = solver.eigenvectors();
    e_min_ = std::min(e_min_, sec.evals.minCoeff());
  }
}

Occupations ExactDiag::decode(int rank) const {
  Occupations occ(g_.n_sites());
  for (int s = 0; s < g_.n_sites(); ++s) occ[s] = rank / radix_[s] % (p_.n_max + 1);
  return occ;
}

int ExactDiag::rank_of(const Occupations& occ) const {
  int r = 0;
  for (int s = 0; s < g_.n_sites(); ++s) r += occ[s] * radix_[s];
  return r;
}

std::vector<int> ExactDiag::key_of(const Occupations& occ) const {
  if (p_.j_inter != 0.0) {
    int total = 0;
    for (int n : occ) total += n;
    return {total};
  }
  std::vector<int> key(g_.n_layers, 0);
  for (int s = 0; s < g_.n_sites(); ++s) key[g_.layer_of(s)] += occ[s];
  return key;
}

int ExactDiag::shifted_sector(int sector, int site, bool dagger) const {
  std::vector<int> key = sectors_[sector].key;
  int& slot = p_.j_inter != 0.0 ? key[0] : key[g_.layer_of(site)];
  slot += dagger ? 1 : -1;
  auto it = sector_index_.find(key);
  return it == sector_index_.end() ? -1 : it->second;
}

Eigen::MatrixXd ExactDiag::op_eigen(int site, bool dagger, const Sector& from,
                                    const Sector& to) const {
  Eigen::MatrixXd m = Eigen::MatrixXd::Zero((Eigen::Index)to.states.size(),
                                            (Eigen::Index)from.states.size());
  for (int f = 0; f < (int)from.states.size(); ++f) {
    Occupations occ = decode(from.states[f]);
    if (dagger) {
      if (occ[site] == p_.n_max) continue;
      occ[site] += 1;
      m(local_of_[rank_of(occ)], f) = std::sqrt((double)occ[site]);
    } else {
      if (occ[site] == 0) continue;
      const double amp = std::sqrt((double)occ[site]);
      occ[site] -= 1;
      m(local_of_[rank_of(occ)], f) = amp;
    }
  }
  return to.evecs.transpose() * m * from.evecs;
}

template <class F>
double ExactDiag::thermal_sum(double beta, F&& f) const {
  double num = 0.0, z = 0.0;
  for (int si = 0; si < (int)sectors_.size(); ++si) {
    const auto& sec = sectors_[si];
    for (int k = 0; k < sec.evals.size(); ++k) {
      const double w = std::exp(-beta * (sec.evals[k] - e_min_));
      z += w;
      num += w * f(si, k);
    }
  }
  return num / z;
}

double ExactDiag::log_partition(double beta) const {
  double z = 0.0;
  for (const auto& sec : sectors_)
    for (int k = 0; k < sec.evals.size(); ++k) z += std::exp(-beta * (sec.evals[k] - e_min_));
  return std::log(z) - beta * e_min_;
}

double ExactDiag::thermal_mean_n(int site, double beta) const {
  return thermal_sum(beta, [&](int si, int k) {
    const auto& sec = sectors_[si];
    double v = 0.0;
    for (int loc = 0; loc < (int)sec.states.size(); ++loc) {
      const int n = sec.states[loc] / radix_[site] % (p_.n_max + 1);
      v += n * sec.evecs(loc, k) * sec.evecs(loc, k);
    }
    return v;
  });
}

double ExactDiag::thermal_total_n(double beta) const {
  return thermal_sum(beta, [&](int si, int k) {
    (void)k;
    const auto& key = sectors_[si].key;
    double total = 0.0;
    for (int n : key) total += n;
    return total;
  });
}

double ExactDiag::thermal_energy(double beta) const {
  return thermal_sum(beta, [&](int si, int k) { return sectors_[si].evals[k]; });
}

double ExactDiag::thermal_diag_energy(double beta) const {
  return thermal_sum(beta, [&](int si, int k) {
    const auto& sec = sectors_[si];
    double v = 0.0;
    for (int loc = 0; loc < (int)sec.states.size(); ++loc)
      v += diagonal_energy(decode(sec.states[loc]), p_, g_) * sec.evecs(loc, k) * sec.evecs(loc, k);
    return v;
  });
}

double ExactDiag::thermal_kinetic(double beta) const {
  return thermal_energy(beta) - thermal_diag_energy(beta);
}

double ExactDiag::thermal_nn(int i, int j, double beta) const {
  return thermal_sum(beta, [&](int si, int k) {
    const auto& sec = sectors_[si];
    double v = 0.0;
    for (int loc = 0; loc < (int)sec.states.size(); ++loc) {
      const int r = sec.states[loc];
      const int ni = r / radix_[i] % (p_.n_max + 1);
      const int nj = r / radix_[j] % (p_.n_max + 1);
      v += (double)ni * nj * sec.evecs(loc, k) * sec.evecs(loc, k);
    }
    return v;
  });
}

namespace {

// int_0^beta e^{-t ek} e^{-(beta-t) el} ... collapsed: the tau integral of the
// two-level kernel, (e^{-beta el} - e^{-beta ek}) / (ek - el) continued through
// the degeneracy
double green_kernel(double beta, double ek, double el) {
  const double d = el - ek;
  if (std::abs(d) < 1e-13) return beta * std::exp(-beta * 0.5 * (ek + el));
  return std::exp(-beta * ek) * (-std::expm1(-beta * d)) / d;
}

}  // namespace

double ExactDiag::integrated_green(int i, int j, double beta) const {
  double num = 0.0, z = 0.0;
  for (int si = 0; si < (int)sectors_.size(); ++si) {
    const auto& sec = sectors_[si];
    for (int k = 0; k < sec.evals.size(); ++k) z += std::exp(-beta * (sec.evals[k] - e_min_));
    const int ti = shifted_sector(si, j, true);
    if (ti < 0 || shifted_sector(si, i, true) != ti) continue;
    const auto& tsec = sectors_[ti];
    // A[k,l] = <k| a_i |l>, B[l,k] = <l| adag_j |k>
    const Eigen::MatrixXd a = op_eigen(i, false, tsec, sec);
    const Eigen::MatrixXd b = op_eigen(j, true, sec, tsec);
    for (int k = 0; k < sec.evals.size(); ++k)
      for (int l = 0; l < tsec.evals.size(); ++l)
        num += a(k, l) * b(l, k) *
               green_kernel(beta, sec.evals[k] - e_min_, tsec.evals[l] - e_min_);
  }
  return num / z;
}

double ExactDiag::equal_time_green(int i, int j, double beta) const {
  double num = 0.0, z = 0.0;
  for (int si = 0; si < (int)sectors_.size(); ++si) {
    const auto& sec = sectors_[si];
    for (int k = 0; k < sec.evals.size(); ++k) z += std::exp(-beta * (sec.evals[k] - e_min_));
    const int ti = shifted_sector(si, j, true);
    if (ti < 0 || shifted_sector(si, i, true) != ti) continue;
    const auto& tsec = sectors_[ti];
    const Eigen::MatrixXd a = op_eigen(i, false, tsec, sec);
    const Eigen::MatrixXd b = op_eigen(j, true, sec, tsec);
    for (int k = 0; k < sec.evals.size(); ++k) {
      const double w = std::exp(-beta * (sec.evals[k] - e_min_));
      for (int l = 0; l < tsec.evals.size(); ++l) num += w * a(k, l) * b(l, k);
    }
  }
  return num / z;
}

double ExactDiag::integrated_two_worm(int head1, int tail1, int head2, int tail2,
                                      double beta) const {
  if (p_.j_inter != 0.0)
    throw std::invalid_argument("integrated_two_worm: requires j_inter == 0");
  if (g_.layer_of(head1) != g_.layer_of(tail1) || g_.layer_of(head2) != g_.layer_of(tail2) ||
      g_.layer_of(head1) == g_.layer_of(head2))
    throw std::invalid_argument("integrated_two_worm: worms must pair up on two distinct layers");

  struct Op {
    int site;
    bool dagger;
  };
  const Op ops[4] = {{head1, false}, {tail1, true}, {head2, false}, {tail2, true}};

  double z = 0.0;
  for (const auto& sec : sectors_)
    for (int k = 0; k < sec.evals.size(); ++k) z += std::exp(-beta * (sec.evals[k] - e_min_));

  int perm[4] = {0, 1, 2, 3};  // perm[0] latest in time
  std::vector<double> path_e(5);
  long double num = 0.0L;
  do {
    for (int sa = 0; sa < (int)sectors_.size(); ++sa) {
      // apply ops earliest-first: sa -> sd -> sc -> sb -> sa
      const int sd = shifted_sector(sa, ops[perm[3]].site, ops[perm[3]].dagger);
      if (sd < 0) continue;
      const int sc = shifted_sector(sd, ops[perm[2]].site, ops[perm[2]].dagger);
      if (sc < 0) continue;
      const int sb = shifted_sector(sc, ops[perm[1]].site, ops[perm[1]].dagger);
      if (sb < 0) continue;
      if (shifted_sector(sb, ops[perm[0]].site, ops[perm[0]].dagger) != sa) continue;

      const Sector& A = sectors_[sa];
      const Sector& B = sectors_[sb];
      const Sector& C = sectors_[sc];
      const Sector& D = sectors_[sd];
      const Eigen::MatrixXd m3 = op_eigen(ops[perm[3]].site, ops[perm[3]].dagger, A, D);
      const Eigen::MatrixXd m2 = op_eigen(ops[perm[2]].site, ops[perm[2]].dagger, D, C);
      const Eigen::MatrixXd m1 = op_eigen(ops[perm[1]].site, ops[perm[1]].dagger, C, B);
      const Eigen::MatrixXd m0 = op_eigen(ops[perm[0]].site, ops[perm[0]].dagger, B, A);

      for (int a = 0; a < A.evals.size(); ++a) {
        const double ea = A.evals[a] - e_min_;
        if (beta * ea > 60.0) continue;
        for (int b = 0; b < B.evals.size(); ++b) {
          if (m0(a, b) == 0.0) continue;
          for (int c = 0; c < C.evals.size(); ++c) {
            const double w01 = m0(a, b) * m1(b, c);
            if (w01 == 0.0) continue;
            for (int d = 0; d < D.evals.size(); ++d) {
              const double w = w01 * m2(c, d) * m3(d, a);
              if (w == 0.0) continue;
              path_e[0] = ea;
              path_e[1] = B.evals[b] - e_min_;
              path_e[2] = C.evals[c] - e_min_;
              path_e[3] = D.evals[d] - e_min_;
              path_e[4] = ea;
              num += (long double)w * simplex_exp_integral(beta, path_e);
            }
          }
        }
      }
    }
  } while (std::next_permutation(perm, perm + 4));
  return (double)(num / z);
}

double ExactDiag::log_truncated_partition(double beta, int max_order) const {
  if (max_order < 0 || max_order > 6)
    throw std::invalid_argument("log_truncated_partition: order must be in 0..6");
  struct Edge {
    int to;
    double elem;
  };
  std::vector<std::vector<Edge>> adj(dim_);
  std::vector<double> e0(dim_);
  std::size_t max_branch = 1;
  for (int r = 0; r < dim_; ++r) {
    Occupations occ = decode(r);
    e0[r] = diagonal_energy(occ, p_, g_);
    for (const Bond& b : g_.bonds) {
      for (int dir = 0; dir < 2; ++dir) {
        const int from = dir ? b.b : b.a;
        const int to = dir ? b.a : b.b;
        if (occ[from] == 0 || occ[to] == p_.n_max) continue;
        const double elem = hop_element_value(occ[from], occ[to], b.kind, p_);
        if (elem == 0.0) continue;
        Occupations tgt = occ;
        tgt[from] -= 1;
        tgt[to] += 1;
        adj[r].push_back({rank_of(tgt), elem});
      }
    }
    max_branch = std::max(max_branch, adj[r].size());
  }
  if ((double)dim_ * std::pow((double)max_branch, max_order) > 5e7)
    throw std::runtime_error("log_truncated_partition: path budget exceeded");

  long double total = 0.0L;
  std::vector<double> path_e;
  // chains of `order` hops returning to the start; sign (-1)^order times the
  // product of (negative) hop elements
  auto dfs = [&](auto&& self, int start, int state, double amp, int depth, int order) -> void {
    if (depth == order) {
      // path_e already ends on e0[start]: the closing edge pushed it
      if (state == start)
        total += (long double)amp * (order % 2 ? -1.0L : 1.0L) *
                 simplex_exp_integral(beta, path_e);
      return;
    }
    for (const Edge& e : adj[state]) {
      path_e.push_back(e0[e.to]);
      self(self, start, e.to, amp * e.elem, depth + 1, order);
      path_e.pop_back();
    }
  };
  for (int order = 0; order <= max_order; ++order)
    for (int r = 0; r < dim_; ++r) {
      path_e.assign(1, e0[r]);
      dfs(dfs, r, r, 1.0, 0, order);
    }
  return std::log((double)total);
}

double ExactDiag::h1_row_norm_bound() const {
  double best = 0.0;
  for (int r = 0; r < dim_; ++r) {
    Occupations occ = decode(r);
    double row = 0.0;
    for (const Bond& b : g_.bonds)
      for (int dir = 0; dir < 2; ++dir) {
        const int from = dir ? b.b : b.a;
        const int to = dir ? b.a : b.b;
        if (occ[from] == 0 || occ[to] == p_.n_max) continue;
        row += std::abs(hop_element_value(occ[from], occ[to], b.kind, p_));
      }
    best = std::max(best, row);
  }
  return best;
}

}  // namespace wormpimc
