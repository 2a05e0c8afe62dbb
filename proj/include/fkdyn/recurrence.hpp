#pragma once

#include <cstdint>
#include <vector>

#include <json.hpp>

namespace fk {

// Doubling recurrence a_{2k} = min(a_k, d (2r)^d a_k^2 + exp(-r / C*)) with
// r = min(-C0 log a_k, k), iterated in the log domain (the interesting
// values underflow doubles).
struct RecurrenceParams {
  int d = 2;
  double c_star = 1.0;
  double k0 = 4.0;
  double log_eps0 = -6.907755278982137;  // log 1e-3
  double k_max = 1024.0;
  double c0 = 0.0;  // 0: 2.5 C*
  double exponent = 1.99;

  double resolved_c0() const { return c0 > 0.0 ? c0 : 2.5 * c_star; }
};

enum class EnvelopeStatus { Contracting, NoContraction };

struct RecurrenceEnvelope {
  RecurrenceParams params;
  std::vector<double> k;
  std::vector<double> log_a;
  std::vector<std::uint8_t> uncapped;  // r = -C0 log a_k <= k at this step
  double log_threshold = 0.0;          // -inf when no threshold exists
  EnvelopeStatus status = EnvelopeStatus::NoContraction;
  std::size_t contraction_checks = 0;
  std::size_t contraction_failures = 0;
  double rate = 0.0;  // -slope of log a_k against k
  double r2 = 0.0;
  bool decays = false;  // rate > 0 and a_{k_max} < a_{k0}

  nlohmann::json to_json() const;
};

// log of the largest a below which one uncapped step always gives
// a_{2k} <= a_k^exponent; -inf if C0 / C* <= exponent.
double recurrence_log_threshold(int d, double c_star, double c0, double exponent = 1.99);

RecurrenceEnvelope recurrence_envelope(const RecurrenceParams& params);

std::string to_string(EnvelopeStatus status);

}  // namespace fk
