#pragma once

#include <cmath>
#include <cstdint>

// Frequency hits/trials against an exact probability, 5 standard deviations.
inline bool within_5sigma(std::uint64_t hits, std::uint64_t trials, double pi) {
  const double t = static_cast<double>(trials);
  const double sd = std::sqrt(pi * (1.0 - pi) / t);
  return std::abs(static_cast<double>(hits) / t - pi) <= 5.0 * sd + 1e-12;
}
