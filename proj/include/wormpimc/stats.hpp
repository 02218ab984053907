#pragma once

#include <cstddef>
#include <vector>

namespace wormpimc {

struct BlockedStats {
  double mean = 0.0;
  double stderr_ = 0.0;
  std::size_t n_samples = 0;
  int plateau_level = 0;
  bool converged = false;  // false: too few samples or error still growing
};

// Logarithmic blocking. Needs >= 32 samples for a converged estimate; below
// that the naive stderr is doubled and flagged.
BlockedStats blocking_errors(const std::vector<double>& samples);

// Weighted mean/stderr of a ratio sum(num)/sum(den) via delete-one jackknife
// over pre-formed blocks.
struct JackknifeRatio {
  double mean = 0.0;
  double stderr_ = 0.0;
  int n_blocks = 0;
};
JackknifeRatio jackknife_ratio(const std::vector<double>& num_blocks,
                               const std::vector<double>& den_blocks);

// Upper-tail p-value of a chi-square statistic with k degrees of freedom.
double chi_squared_pvalue(double chi2, int dof);

// Weighted least squares y = a + b x. Returns {a, b, var_a, var_b, chi2}.
struct LineFit {
  double a = 0.0, b = 0.0;
  double var_a = 0.0, var_b = 0.0;
  double chi2 = 0.0;
  int n_points = 0;
};
LineFit weighted_line_fit(const std::vector<double>& x, const std::vector<double>& y,
                          const std::vector<double>& sigma);

double mean_of(const std::vector<double>& v);

}  // namespace wormpimc
