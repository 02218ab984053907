#pragma once

#include <Eigen/Dense>
#include <map>
#include <vector>

#include "wormpimc/lattice.hpp"
#include "wormpimc/model.hpp"

namespace wormpimc {

// integral over {g_i >= 0, sum_i g_i = beta} of prod_i exp(-energies_i g_i),
// with the (n-1)-dimensional simplex measure. Evaluated as a series in the
// centered energies, which stays stable when energies (nearly) coincide.
long double simplex_exp_integral(double beta, const std::vector<double>& energies);

// Dense exact diagonalization of the layered Hamiltonian over the full Fock
// space, block-diagonalized by the conserved particle numbers: per-layer
// counts when j_inter == 0, the total count otherwise. The Fock dimension is
// capped at 20000 states.
class ExactDiag {
 public:
  ExactDiag(const LatticeGraph& g, const ModelParams& p);

  int fock_dim() const { return dim_; }
  double ground_energy() const { return e_min_; }

  double log_partition(double beta) const;
  double thermal_mean_n(int site, double beta) const;
  double thermal_total_n(double beta) const;
  double thermal_energy(double beta) const;
  double thermal_diag_energy(double beta) const;
  double thermal_kinetic(double beta) const;  // <H1>, nonpositive
  double thermal_nn(int i, int j, double beta) const;

  // int_0^beta dtau <a_i(tau) adag_j(0)>
  double integrated_green(int i, int j, double beta) const;
  // <a_i adag_j>
  double equal_time_green(int i, int j, double beta) const;

  // integral over [0,beta)^4 of <T a_h1(s1) adag_t1(s2) a_h2(s3) adag_t2(s4)>
  // for two distinguishable worms; requires j_inter == 0 and the pairs on two
  // different layers
  double integrated_two_worm(int head1, int tail1, int head2, int tail2, double beta) const;

  // log of the partition function with the hop expansion truncated at
  // `max_order` kinks; exact diagonal part. Feasible only for small spaces.
  double log_truncated_partition(double beta, int max_order) const;
  // max_s sum_t |<t|H1|s>|, a bound on the hop operator norm
  double h1_row_norm_bound() const;

 private:
  struct Sector {
    std::vector<int> key;          // per-layer counts, or {total}
    std::vector<int> states;       // Fock ranks
    Eigen::VectorXd evals;
    Eigen::MatrixXd evecs;         // columns, in sector-local basis
  };

  const LatticeGraph& g_;
  ModelParams p_;
  int dim_ = 0;
  std::vector<int> radix_;  // site strides
  std::vector<Sector> sectors_;
  std::map<std::vector<int>, int> sector_index_;
  std::vector<int> sector_of_;   // Fock rank -> sector
  std::vector<int> local_of_;    // Fock rank -> index inside its sector
  double e_min_ = 0.0;

  Occupations decode(int rank) const;
  int rank_of(const Occupations& occ) const;
  std::vector<int> key_of(const Occupations& occ) const;

  // <to_eigen| op |from_eigen>; op: creation (dagger) or annihilation at site
  Eigen::MatrixXd op_eigen(int site, bool dagger, const Sector& from, const Sector& to) const;
  int shifted_sector(int sector, int site, bool dagger) const;  // -1 if absent

  // sum over sectors of sum_k w_k f(sector, k), w_k = exp(-beta (E_k - e_min))
  template <class F>
  double thermal_sum(double beta, F&& f) const;
};

}  // namespace wormpimc
