#pragma once

namespace fk {

// Conditional probability that edge e is open given the rest of omega.
// `bridge` means e is a bridge of omega with e added.
inline double heat_bath_probability(double p, double q, bool bridge) {
  return bridge ? p / (q * (1.0 - p) + p) : p;
}

}  // namespace fk
