#include "fkdyn/stats.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <stdexcept>

namespace fk {

nlohmann::json EstimatorResult::to_json() const {
  return {{"mean", mean}, {"stderr", stderr_}, {"samples", samples}, {"seed", seed}};
}

EstimatorResult summarize(const std::vector<double>& xs, std::uint64_t seed) {
  EstimatorResult r;
  r.samples = xs.size();
  r.seed = seed;
  if (xs.empty()) return r;
  // Fixed summation order keeps results identical across thread counts.
  double sum = 0.0;
  for (double x : xs) sum += x;
  r.mean = sum / static_cast<double>(xs.size());
  if (xs.size() > 1) {
    double ss = 0.0;
    for (double x : xs) ss += (x - r.mean) * (x - r.mean);
    r.stderr_ = std::sqrt(ss / static_cast<double>(xs.size() - 1) / static_cast<double>(xs.size()));
  }
  return r;
}

EstimatorResult summarize_bernoulli(std::size_t hits, std::size_t n, std::uint64_t seed) {
  EstimatorResult r;
  r.samples = n;
  r.seed = seed;
  if (n == 0) return r;
  r.mean = static_cast<double>(hits) / static_cast<double>(n);
  r.stderr_ = std::sqrt(r.mean * (1.0 - r.mean) / static_cast<double>(n));
  return r;
}

double quantile(std::vector<double> xs, double prob) {
  if (xs.empty()) return std::numeric_limits<double>::quiet_NaN();
  std::sort(xs.begin(), xs.end());
  const double h = (static_cast<double>(xs.size()) - 1.0) * prob;
  const auto lo = static_cast<std::size_t>(std::floor(h));
  const std::size_t hi = std::min(lo + 1, xs.size() - 1);
  return xs[lo] + (h - static_cast<double>(lo)) * (xs[hi] - xs[lo]);
}

nlohmann::json DecayFit::to_json() const {
  return {{"k", k}, {"value", value}, {"stderr", stderr_}, {"used", used},
          {"rate", rate}, {"intercept", intercept}, {"r2", r2}, {"fitted", fitted}};
}

LinearFit least_squares(const std::vector<double>& x, const std::vector<double>& y) {
  if (x.size() != y.size() || x.size() < 2) throw std::invalid_argument("least squares needs >= 2 points");
  const double n = static_cast<double>(x.size());
  const double mx = std::accumulate(x.begin(), x.end(), 0.0) / n;
  const double my = std::accumulate(y.begin(), y.end(), 0.0) / n;
  double sxx = 0.0, sxy = 0.0, syy = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sxx += (x[i] - mx) * (x[i] - mx);
    sxy += (x[i] - mx) * (y[i] - my);
    syy += (y[i] - my) * (y[i] - my);
  }
  LinearFit f;
  if (sxx == 0.0) throw std::invalid_argument("least squares needs distinct x values");
  f.slope = sxy / sxx;
  f.intercept = my - f.slope * mx;
  f.r2 = syy > 0.0 ? (sxy * sxy) / (sxx * syy) : 1.0;
  return f;
}

DecayFit fit_decay(const std::vector<double>& k, const std::vector<double>& value,
                   const std::vector<double>& stderr_, double floor_factor) {
  DecayFit fit;
  fit.k = k;
  fit.value = value;
  fit.stderr_ = stderr_;
  fit.used.assign(k.size(), 0);
  std::vector<double> xs, ys;
  for (std::size_t i = 0; i < k.size(); ++i) {
    const double se = i < stderr_.size() ? stderr_[i] : 0.0;
    if (value[i] > 0.0 && value[i] > floor_factor * se) {
      fit.used[i] = 1;
      xs.push_back(k[i]);
      ys.push_back(std::log(value[i]));
    }
  }
  if (xs.size() >= 2) {
    const auto lf = least_squares(xs, ys);
    fit.rate = -lf.slope;
    fit.intercept = lf.intercept;
    fit.r2 = lf.r2;
    fit.fitted = true;
  }
  return fit;
}

double split_rhat(const std::vector<std::vector<double>>& chains) {
  std::vector<std::vector<double>> halves;
  for (const auto& c : chains) {
    const std::size_t h = c.size() / 2;
    if (h < 2) continue;
    halves.emplace_back(c.begin(), c.begin() + static_cast<std::ptrdiff_t>(h));
    halves.emplace_back(c.end() - static_cast<std::ptrdiff_t>(h), c.end());
  }
  if (halves.size() < 2) return std::numeric_limits<double>::quiet_NaN();
  const double n = static_cast<double>(halves.front().size());
  const double m = static_cast<double>(halves.size());
  std::vector<double> means;
  double w = 0.0;
  for (const auto& h : halves) {
    const double mu = std::accumulate(h.begin(), h.end(), 0.0) / n;
    means.push_back(mu);
    double ss = 0.0;
    for (double x : h) ss += (x - mu) * (x - mu);
    w += ss / (n - 1.0);
  }
  w /= m;
  const double grand = std::accumulate(means.begin(), means.end(), 0.0) / m;
  double b = 0.0;
  for (double mu : means) b += (mu - grand) * (mu - grand);
  b *= n / (m - 1.0);
  if (w == 0.0) return b == 0.0 ? 1.0 : std::numeric_limits<double>::infinity();
  const double var = (n - 1.0) / n * w + b / n;
  return std::sqrt(var / w);
}

std::vector<double> empirical_distribution(const std::vector<std::uint32_t>& draws, std::size_t bins) {
  std::vector<double> out(bins, 0.0);
  for (auto d : draws) {
    if (d >= bins) throw std::out_of_range("draw outside histogram range");
    out[d] += 1.0;
  }
  if (!draws.empty())
    for (double& x : out) x /= static_cast<double>(draws.size());
  return out;
}

double log_sum_exp(double a, double b) {
  if (a == -std::numeric_limits<double>::infinity()) return b;
  if (b == -std::numeric_limits<double>::infinity()) return a;
  const double m = std::max(a, b);
  return m + std::log(std::exp(a - m) + std::exp(b - m));
}

}  // namespace fk
