#include "fkdyn/recurrence.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>

#include "fkdyn/stats.hpp"

namespace fk {

namespace {

// log of d (2r)^d a^2 + exp(-r / C*) for a = exp(log_a).
double log_step(int d, double c_star, double r, double log_a) {
  const double poly = std::log(static_cast<double>(d)) + d * std::log(2.0 * r) + 2.0 * log_a;
  return log_sum_exp(poly, -r / c_star);
}

// Positive when one uncapped step at a = exp(-L) fails to contract.
double excess(int d, double c_star, double c0, double exponent, double L) {
  return log_step(d, c_star, c0 * L, -L) + exponent * L;
}

}  // namespace

double recurrence_log_threshold(int d, double c_star, double c0, double exponent) {
  if (!(c0 / c_star > exponent)) return -std::numeric_limits<double>::infinity();
  // The excess is eventually negative; find the last sign change on a
  // geometric grid in L = -log a and refine it by bisection.
  double last_bad = 0.0;
  for (double L = 1e-3; L < 1e12; L *= 1.01)
    if (excess(d, c_star, c0, exponent, L) > 0.0) last_bad = L;
  double lo = last_bad, hi = last_bad * 1.01 + 1e-3;
  for (int i = 0; i < 200; ++i) {
    const double mid = 0.5 * (lo + hi);
    (excess(d, c_star, c0, exponent, mid) > 0.0 ? lo : hi) = mid;
  }
  return -hi;
}

RecurrenceEnvelope recurrence_envelope(const RecurrenceParams& p) {
  if (p.d < 1 || !(p.c_star > 0.0) || !(p.k0 >= 1.0)) throw std::invalid_argument("invalid recurrence parameters");
  if (!(p.log_eps0 < std::log(0.5))) throw std::invalid_argument("eps0 must lie in (0, 1/2)");
  RecurrenceEnvelope env;
  env.params = p;
  const double c0 = p.resolved_c0();
  env.log_threshold = recurrence_log_threshold(p.d, p.c_star, c0, p.exponent);
  env.status = p.log_eps0 <= env.log_threshold ? EnvelopeStatus::Contracting : EnvelopeStatus::NoContraction;
  double k = p.k0, la = p.log_eps0;
  for (;;) {
    const double r_free = -c0 * la;
    env.k.push_back(k);
    env.log_a.push_back(la);
    env.uncapped.push_back(r_free <= k);
    if (2.0 * k > p.k_max) break;
    const double r = std::min(r_free, k);
    const double next = std::min(la, log_step(p.d, p.c_star, r, la));
    if (la <= env.log_threshold && r_free <= k) {
      ++env.contraction_checks;
      if (next > p.exponent * la * (1.0 - 1e-12)) ++env.contraction_failures;
    }
    la = next;
    k *= 2.0;
  }
  if (env.k.size() >= 2) {
    auto fit = least_squares(env.k, env.log_a);
    env.rate = -fit.slope;
    env.r2 = fit.r2;
  }
  env.decays = env.rate > 0.0 && env.log_a.back() < env.log_a.front();
  return env;
}

std::string to_string(EnvelopeStatus status) {
  return status == EnvelopeStatus::Contracting ? "contracting" : "no_contraction";
}

nlohmann::json RecurrenceEnvelope::to_json() const {
  return {{"d", params.d},
          {"c_star", params.c_star},
          {"c0", params.resolved_c0()},
          {"k0", params.k0},
          {"log_eps0", params.log_eps0},
          {"log_threshold", log_threshold},
          {"status", to_string(status)},
          {"k", k},
          {"log_a", log_a},
          {"contraction_checks", contraction_checks},
          {"contraction_failures", contraction_failures},
          {"rate", rate},
          {"r2", r2},
          {"decays", decays}};
}

}  // namespace fk
