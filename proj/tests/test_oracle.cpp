#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <array>
#include <cmath>
#include <stdexcept>
#include <vector>

#include "wormpimc/lattice.hpp"
#include "wormpimc/model.hpp"
#include "wormpimc/oracle.hpp"

using namespace wormpimc;

namespace {

// n-point divided-difference form, valid for well-separated energies
double simplex_reference(double beta, const std::vector<double>& e) {
  double sum = 0.0;
  for (std::size_t i = 0; i < e.size(); ++i) {
    double denom = 1.0;
    for (std::size_t j = 0; j < e.size(); ++j)
      if (j != i) denom *= e[j] - e[i];
    sum += std::exp(-beta * e[i]) / denom;
  }
  return sum;
}

}  // namespace

TEST_CASE("simplex integral elementary values") {
  CHECK((double)simplex_exp_integral(1.3, {0.7}) == doctest::Approx(std::exp(-0.91)).epsilon(1e-14));
  CHECK((double)simplex_exp_integral(2.0, {0.5, 0.5}) ==
        doctest::Approx(2.0 * std::exp(-1.0)).epsilon(1e-14));
  // two distinct energies: (e^{-b e1} - e^{-b e2}) / (e2 - e1)
  const double two = (std::exp(-1.7 * 0.3) - std::exp(1.7 * 0.2)) / (-0.2 - 0.3);
  CHECK((double)simplex_exp_integral(1.7, {0.3, -0.2}) == doctest::Approx(two).epsilon(1e-13));
  // fully degenerate: beta^{n-1}/(n-1)! e^{-beta e}
  CHECK((double)simplex_exp_integral(1.1, {0.4, 0.4, 0.4}) ==
        doctest::Approx(1.1 * 1.1 / 2.0 * std::exp(-1.1 * 0.4)).epsilon(1e-13));
  CHECK((double)simplex_exp_integral(2.0, {0, 0, 0, 0, 0}) ==
        doctest::Approx(16.0 / 24.0).epsilon(1e-13));
}

TEST_CASE("simplex integral against divided differences") {
  const std::vector<double> e{0.3, -0.2, 1.1};
  const double ref = simplex_reference(1.7, e);
  CHECK((double)simplex_exp_integral(1.7, e) == doctest::Approx(ref).epsilon(1e-12));
  // permutation invariance
  CHECK((double)simplex_exp_integral(1.7, {1.1, 0.3, -0.2}) ==
        doctest::Approx((double)simplex_exp_integral(1.7, e)).epsilon(1e-14));

  const std::vector<double> e5{0.3, -0.2, 1.1, 2.4, -1.7};
  CHECK((double)simplex_exp_integral(0.9, e5) ==
        doctest::Approx(simplex_reference(0.9, e5)).epsilon(1e-11));

  // continuity through a near-degenerate pair
  const double lim = (double)simplex_exp_integral(1.3, {0.5, 0.5, -0.4});
  CHECK((double)simplex_exp_integral(1.3, {0.5, 0.5 + 1e-9, -0.4}) ==
        doctest::Approx(lim).epsilon(1e-7));

  // uniform shift scales by e^{-beta s}
  const double base = (double)simplex_exp_integral(1.7, e);
  CHECK((double)simplex_exp_integral(1.7, {0.3 + 2.0, -0.2 + 2.0, 1.1 + 2.0}) ==
        doctest::Approx(base * std::exp(-1.7 * 2.0)).epsilon(1e-12));

  CHECK_THROWS_AS(simplex_exp_integral(1.0, {}), std::invalid_argument);
}

TEST_CASE("single site thermals") {
  auto g = build_layered_lattice(1, 1, false, false);
  ModelParams p;
  p.n_max = 1;
  p.mu = {0.5};
  ExactDiag ed(g, p);
  CHECK(ed.fock_dim() == 2);

  const double beta = 1.0;
  const double z = 1.0 + std::exp(0.5);
  const double n = std::exp(0.5) / z;
  CHECK(ed.log_partition(beta) == doctest::Approx(std::log(z)).epsilon(1e-14));
  CHECK(ed.thermal_mean_n(0, beta) == doctest::Approx(n).epsilon(1e-14));
  CHECK(ed.thermal_mean_n(0, beta) == doctest::Approx(0.6224593312018546).epsilon(1e-12));
  CHECK(ed.thermal_total_n(beta) == doctest::Approx(n).epsilon(1e-14));
  CHECK(ed.thermal_energy(beta) == doctest::Approx(-0.5 * n).epsilon(1e-14));
  CHECK(ed.thermal_kinetic(beta) == doctest::Approx(0.0));
  CHECK(ed.equal_time_green(0, 0, beta) == doctest::Approx(1.0 - n).epsilon(1e-14));
  // int_0^beta <a(tau) adag(0)> = (e^{beta mu} - 1)/mu / Z
  CHECK(ed.integrated_green(0, 0, beta) ==
        doctest::Approx(2.0 * (std::exp(0.5) - 1.0) / z).epsilon(1e-13));
}

TEST_CASE("hard-core two-site ring") {
  auto g = build_layered_lattice(1, 2, true, false);
  ModelParams p;
  p.n_max = 1;
  p.j_intra = 1.0;
  p.mu = {0.0};
  ExactDiag ed(g, p);
  CHECK(ed.fock_dim() == 4);
  CHECK(ed.ground_energy() == doctest::Approx(-1.0).epsilon(1e-14));

  const double beta = 2.0;
  const double z = 2.0 + 2.0 * std::cosh(beta);
  CHECK(ed.log_partition(beta) == doctest::Approx(std::log(z)).epsilon(1e-13));
  CHECK(ed.thermal_mean_n(0, beta) == doctest::Approx(0.5).epsilon(1e-13));
  CHECK(ed.thermal_mean_n(1, beta) == doctest::Approx(0.5).epsilon(1e-13));
  CHECK(ed.thermal_kinetic(beta) == doctest::Approx(-std::tanh(beta / 2.0)).epsilon(1e-13));
  CHECK(ed.thermal_diag_energy(beta) == doctest::Approx(0.0));
  CHECK(ed.equal_time_green(0, 0, beta) == doctest::Approx(0.5).epsilon(1e-13));
  CHECK(ed.thermal_nn(0, 1, beta) == doctest::Approx(1.0 / z).epsilon(1e-13));

  // symmetric/antisymmetric channel decomposition: each channel runs through
  // |00> -> single -> |11>, so IG_s = 2(e^b - 1)/Z and IG_a = 2(1 - e^-b)/Z,
  // and IG(0,0/0,1) = (IG_s +- IG_a)/2
  const double gs = std::exp(beta) - 1.0;
  const double ga = 1.0 - std::exp(-beta);
  CHECK(ed.integrated_green(0, 0, beta) == doctest::Approx((gs + ga) / z).epsilon(1e-12));
  CHECK(ed.integrated_green(0, 1, beta) == doctest::Approx((gs - ga) / z).epsilon(1e-12));
  CHECK(ed.integrated_green(1, 0, beta) ==
        doctest::Approx(ed.integrated_green(0, 1, beta)).epsilon(1e-13));
}

TEST_CASE("decoupled layers factorize") {
  ModelParams p;
  p.n_max = 1;
  p.j_intra = 1.0;
  p.j_inter = 0.0;
  p.v_inter = 0.0;

  auto g1 = build_layered_lattice(1, 3, true, false);
  p.mu = {0.3};
  ExactDiag one(g1, p);

  auto g2 = build_layered_lattice(2, 3, true, true);
  p.mu = {0.3, 0.3};
  ExactDiag two(g2, p);

  const double beta = 1.8;
  CHECK(two.log_partition(beta) == doctest::Approx(2.0 * one.log_partition(beta)).epsilon(1e-12));
  for (int s = 0; s < 6; ++s)
    CHECK(two.thermal_mean_n(s, beta) == doctest::Approx(one.thermal_mean_n(s % 3, beta)).epsilon(1e-12));
  CHECK(two.integrated_green(0, 1, beta) == doctest::Approx(one.integrated_green(0, 1, beta)).epsilon(1e-11));
  CHECK(two.integrated_green(3, 5, beta) == doctest::Approx(one.integrated_green(0, 2, beta)).epsilon(1e-11));
  // cross-layer propagator vanishes without inter-layer hopping
  CHECK(two.integrated_green(0, 3, beta) == doctest::Approx(0.0));
  CHECK(two.thermal_nn(0, 3, beta) ==
        doctest::Approx(one.thermal_mean_n(0, beta) * one.thermal_mean_n(0, beta)).epsilon(1e-12));
}

TEST_CASE("attractive column coupling") {
  auto g = build_layered_lattice(2, 1, false, false);
  ModelParams p;
  p.n_max = 1;
  p.v_inter = 1.3;
  p.mu = {0.2, 0.6};
  ExactDiag ed(g, p);

  const double beta = 1.1;
  const double z = 1.0 + std::exp(beta * 0.2) + std::exp(beta * 0.6) + std::exp(beta * (0.8 + 1.3));
  CHECK(ed.log_partition(beta) == doctest::Approx(std::log(z)).epsilon(1e-13));
  CHECK(ed.thermal_nn(0, 1, beta) == doctest::Approx(std::exp(beta * 2.1) / z).epsilon(1e-13));
  CHECK(ed.thermal_mean_n(0, beta) ==
        doctest::Approx((std::exp(beta * 0.2) + std::exp(beta * 2.1)) / z).epsilon(1e-13));
}

TEST_CASE("two-worm correlator factorizes at v = 0") {
  auto g = build_layered_lattice(2, 3, true, true);
  ModelParams p;
  p.n_max = 1;
  p.j_intra = 1.0;
  p.mu = {0.25, 0.25};
  ExactDiag ed(g, p);

  const double beta = 1.5;
  for (auto [h1, t1, h2, t2] : {std::array<int, 4>{0, 0, 3, 3},
                                std::array<int, 4>{0, 1, 3, 4},
                                std::array<int, 4>{2, 0, 5, 3},
                                std::array<int, 4>{1, 1, 4, 3}}) {
    const double f4 = ed.integrated_two_worm(h1, t1, h2, t2, beta);
    const double expect =
        beta * beta * ed.integrated_green(h1, t1, beta) * ed.integrated_green(h2, t2, beta);
    CHECK(f4 == doctest::Approx(expect).epsilon(1e-8));
  }
}

TEST_CASE("two-worm correlator on a coupled column") {
  // both layers a single site, no hopping: H is diagonal and the correlator
  // reduces to a 4-fold integral over the two occupied-arc configurations per
  // layer, evaluated here on a midpoint grid
  auto g = build_layered_lattice(2, 1, false, false);
  ModelParams p;
  p.n_max = 1;
  p.v_inter = 0.9;
  p.mu = {0.4, 0.15};
  ExactDiag ed(g, p);

  const double beta = 1.3;
  const double f4 = ed.integrated_two_worm(0, 0, 1, 1, beta);

  // overlap length of cyclic arcs [a1,b1) and [a2,b2)
  auto overlap = [&](double a1, double b1, double a2, double b2) {
    auto segs = [&](double a, double b, double s[2][2]) -> int {
      if (a < b) {
        s[0][0] = a;
        s[0][1] = b;
        return 1;
      }
      s[0][0] = a;
      s[0][1] = beta;
      s[1][0] = 0.0;
      s[1][1] = b;
      return 2;
    };
    double s1[2][2], s2[2][2];
    const int n1 = segs(a1, b1, s1), n2 = segs(a2, b2, s2);
    double o = 0.0;
    for (int i = 0; i < n1; ++i)
      for (int j = 0; j < n2; ++j)
        o += std::max(0.0, std::min(s1[i][1], s2[j][1]) - std::max(s1[i][0], s2[j][0]));
    return o;
  };

  const double z = 1.0 + std::exp(beta * 0.4) + std::exp(beta * 0.15) + std::exp(beta * (0.55 + 0.9));
  // hard-core single site: the creation at the tail and annihilation at the
  // head fix the profile uniquely, occupied exactly on the tail->head arc
  const int n1 = 36, n2 = 37;
  long double acc = 0.0L;
  for (int i1 = 0; i1 < n1; ++i1) {
    const double sh = (i1 + 0.5) * beta / n1;  // head 1: annihilate
    for (int i2 = 0; i2 < n2; ++i2) {
      const double st = (i2 + 0.5) * beta / n2;  // tail 1: create
      const double l1 = sh > st ? sh - st : beta - (st - sh);
      for (int i3 = 0; i3 < n1; ++i3) {
        const double rh = (i3 + 0.5) * beta / n1;
        for (int i4 = 0; i4 < n2; ++i4) {
          const double rt = (i4 + 0.5) * beta / n2;
          const double l2 = rh > rt ? rh - rt : beta - (rt - rh);
          const double o = overlap(st, sh, rt, rh);
          acc += std::exp(0.4 * l1 + 0.15 * l2 + 0.9 * o);
        }
      }
    }
  }
  const double grid = (double)acc * (beta / n1) * (beta / n1) * (beta / n2) * (beta / n2) / z;
  CHECK(f4 == doctest::Approx(grid).epsilon(0.02));

  // swapping creation and annihilation points is a time reflection
  auto g3 = build_layered_lattice(2, 3, true, true);
  ModelParams p3 = p;
  p3.j_intra = 1.0;
  p3.mu = {0.4, 0.15};
  ExactDiag ed3(g3, p3);
  CHECK(ed3.integrated_two_worm(0, 1, 3, 5, 1.2) ==
        doctest::Approx(ed3.integrated_two_worm(1, 0, 5, 3, 1.2)).epsilon(1e-9));
}

TEST_CASE("truncated hop expansion") {
  auto g = build_layered_lattice(1, 2, true, false);
  ModelParams p;
  p.n_max = 1;
  p.j_intra = 1.0;
  p.mu = {0.0};
  ExactDiag ed(g, p);

  // two sites, mu = 0: Z = 2 + 2 cosh(beta), truncations keep the even powers
  const double beta = 0.5;
  const double b2 = beta * beta;
  CHECK(ed.log_truncated_partition(beta, 3) == doctest::Approx(std::log(4.0 + b2)).epsilon(1e-13));
  CHECK(ed.log_truncated_partition(beta, 6) ==
        doctest::Approx(std::log(4.0 + b2 + b2 * b2 / 12.0 + b2 * b2 * b2 / 360.0)).epsilon(1e-13));

  const double z = std::exp(ed.log_partition(beta));
  const double z3 = std::exp(ed.log_truncated_partition(beta, 3));
  CHECK(z - z3 == doctest::Approx(2.0 * (std::cosh(beta) - 1.0 - b2 / 2.0)).epsilon(1e-8));

  CHECK(ed.h1_row_norm_bound() == doctest::Approx(1.0));
  auto g3 = build_layered_lattice(1, 3, true, false);
  p.mu = {0.3};
  ExactDiag ed3(g3, p);
  CHECK(ed3.h1_row_norm_bound() == doctest::Approx(2.0));
  // successive truncations close in on the full partition function
  const double exact3 = ed3.log_partition(1.0);
  const double d2 = std::abs(ed3.log_truncated_partition(1.0, 2) - exact3);
  const double d4 = std::abs(ed3.log_truncated_partition(1.0, 4) - exact3);
  const double d6 = std::abs(ed3.log_truncated_partition(1.0, 6) - exact3);
  CHECK(d4 < d2);
  CHECK(d6 < d4);
  CHECK(d6 < 1e-2);
}

TEST_CASE("oracle size guard") {
  auto g = build_layered_lattice(1, 15, true, false);
  ModelParams p;
  p.n_max = 1;
  p.mu = {0.0};
  CHECK_THROWS_AS(ExactDiag(g, p), std::runtime_error);
}
