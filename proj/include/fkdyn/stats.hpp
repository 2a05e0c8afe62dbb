#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include <json.hpp>

namespace fk {

// Monte Carlo mean with standard error and provenance.
struct EstimatorResult {
  double mean = 0.0;
  double stderr_ = 0.0;
  std::size_t samples = 0;
  std::uint64_t seed = 0;

  nlohmann::json to_json() const;
};

EstimatorResult summarize(const std::vector<double>& xs, std::uint64_t seed = 0);
EstimatorResult summarize_bernoulli(std::size_t hits, std::size_t n, std::uint64_t seed = 0);

// Linear-interpolated quantile (type 7) of an unsorted sample.
double quantile(std::vector<double> xs, double prob);

struct DecayFit {
  std::vector<double> k;
  std::vector<double> value;
  std::vector<double> stderr_;
  std::vector<std::uint8_t> used;  // points above the noise floor
  double rate = 0.0;               // 1 / C in value ~ A exp(-k / C)
  double intercept = 0.0;
  double r2 = 0.0;
  bool fitted = false;

  nlohmann::json to_json() const;
};

// Log-linear least squares on points with value > floor_factor * stderr.
DecayFit fit_decay(const std::vector<double>& k, const std::vector<double>& value,
                   const std::vector<double>& stderr_, double floor_factor = 10.0);

struct LinearFit {
  double slope = 0.0;
  double intercept = 0.0;
  double r2 = 0.0;
};

LinearFit least_squares(const std::vector<double>& x, const std::vector<double>& y);

// Split-R-hat over chains of equal length.
double split_rhat(const std::vector<std::vector<double>>& chains);

// Empirical histogram over [0, bins) normalized to a distribution.
std::vector<double> empirical_distribution(const std::vector<std::uint32_t>& draws, std::size_t bins);

double log_sum_exp(double a, double b);

}  // namespace fk
