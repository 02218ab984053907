#include "wormpimc/stats.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>

namespace wormpimc {

double mean_of(const std::vector<double>& v) {
  if (v.empty()) return 0.0;
  double s = 0.0;
  for (double x : v) s += x;
  return s / (double)v.size();
}

static double stderr_of_mean(const std::vector<double>& v) {
  const std::size_t n = v.size();
  if (n < 2) return 0.0;
  const double m = mean_of(v);
  double ss = 0.0;
  for (double x : v) ss += (x - m) * (x - m);
  return std::sqrt(ss / ((double)n * (double)(n - 1)));
}

BlockedStats blocking_errors(const std::vector<double>& samples) {
  BlockedStats out;
  out.n_samples = samples.size();
  out.mean = mean_of(samples);
  if (samples.size() < 2) {
    out.stderr_ = 0.0;
    return out;
  }
  if (samples.size() < 32) {
    out.stderr_ = 2.0 * stderr_of_mean(samples);  // widened, unconverged
    return out;
  }
  std::vector<double> level = samples;
  std::vector<double> curve;
  curve.push_back(stderr_of_mean(level));
  while (level.size() / 2 >= 32) {
    std::vector<double> next(level.size() / 2);
    for (std::size_t i = 0; i < next.size(); ++i)
      next[i] = 0.5 * (level[2 * i] + level[2 * i + 1]);
    level.swap(next);
    curve.push_back(stderr_of_mean(level));
  }
  // plateau: first level whose successor stops growing by more than 5%
  int k = (int)curve.size() - 1;
  bool converged = false;
  for (int i = 0; i + 1 < (int)curve.size(); ++i) {
    if (curve[i + 1] <= curve[i] * 1.05) {
      k = i;
      converged = true;
      break;
    }
  }
  out.stderr_ = curve[k];
  out.plateau_level = k;
  out.converged = converged || curve.size() == 1;
  return out;
}

JackknifeRatio jackknife_ratio(const std::vector<double>& num_blocks,
                               const std::vector<double>& den_blocks) {
  if (num_blocks.size() != den_blocks.size())
    throw std::runtime_error("jackknife_ratio: block count mismatch");
  JackknifeRatio out;
  const int n = (int)num_blocks.size();
  out.n_blocks = n;
  double num = 0.0, den = 0.0;
  for (int i = 0; i < n; ++i) {
    num += num_blocks[i];
    den += den_blocks[i];
  }
  if (den == 0.0) return out;
  out.mean = num / den;
  if (n < 2) return out;
  std::vector<double> theta(n);
  int usable = 0;
  double tm = 0.0;
  for (int i = 0; i < n; ++i) {
    const double d = den - den_blocks[i];
    if (d == 0.0) {
      theta[i] = out.mean;
    } else {
      theta[i] = (num - num_blocks[i]) / d;
      ++usable;
    }
    tm += theta[i];
  }
  tm /= n;
  double ss = 0.0;
  for (int i = 0; i < n; ++i) ss += (theta[i] - tm) * (theta[i] - tm);
  out.stderr_ = std::sqrt(ss * (double)(n - 1) / (double)n);
  if (usable < 2) out.stderr_ = 0.0;
  return out;
}

// regularized upper incomplete gamma Q(a, x), a > 0
static double gamma_q(double a, double x) {
  if (x < 0.0 || a <= 0.0) return 1.0;
  if (x == 0.0) return 1.0;
  const double gln = std::lgamma(a);
  if (x < a + 1.0) {
    // series for P(a,x)
    double ap = a, sum = 1.0 / a, del = sum;
    for (int i = 0; i < 500; ++i) {
      ap += 1.0;
      del *= x / ap;
      sum += del;
      if (std::fabs(del) < std::fabs(sum) * 1e-15) break;
    }
    const double p = sum * std::exp(-x + a * std::log(x) - gln);
    return 1.0 - p;
  }
  // continued fraction for Q(a,x)
  const double tiny = 1e-300;
  double b = x + 1.0 - a, c = 1.0 / tiny, d = 1.0 / b, h = d;
  for (int i = 1; i < 500; ++i) {
    const double an = -1.0 * i * (i - a);
    b += 2.0;
    d = an * d + b;
    if (std::fabs(d) < tiny) d = tiny;
    c = b + an / c;
    if (std::fabs(c) < tiny) c = tiny;
    d = 1.0 / d;
    const double del = d * c;
    h *= del;
    if (std::fabs(del - 1.0) < 1e-15) break;
  }
  return std::exp(-x + a * std::log(x) - gln) * h;
}

double chi_squared_pvalue(double chi2, int dof) {
  if (dof <= 0) return 1.0;
  return gamma_q(0.5 * dof, 0.5 * chi2);
}

LineFit weighted_line_fit(const std::vector<double>& x, const std::vector<double>& y,
                          const std::vector<double>& sigma) {
  LineFit f;
  const int n = (int)x.size();
  if ((int)y.size() != n || (int)sigma.size() != n || n < 2) return f;
  double S = 0, Sx = 0, Sy = 0, Sxx = 0, Sxy = 0;
  for (int i = 0; i < n; ++i) {
    const double w = 1.0 / (sigma[i] * sigma[i]);
    S += w;
    Sx += w * x[i];
    Sy += w * y[i];
    Sxx += w * x[i] * x[i];
    Sxy += w * x[i] * y[i];
  }
  const double det = S * Sxx - Sx * Sx;
  if (det == 0.0) return f;
  f.a = (Sxx * Sy - Sx * Sxy) / det;
  f.b = (S * Sxy - Sx * Sy) / det;
  f.var_a = Sxx / det;
  f.var_b = S / det;
  f.n_points = n;
  for (int i = 0; i < n; ++i) {
    const double r = (y[i] - f.a - f.b * x[i]) / sigma[i];
    f.chi2 += r * r;
  }
  return f;
}

}  // namespace wormpimc
