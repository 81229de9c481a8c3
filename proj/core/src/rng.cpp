// Copyright (c) 2026 The occvla Authors
// SPDX-License-Identifier: Apache-2.0

#include "occvla/rng.hpp"

#include <cmath>
#include <numbers>

namespace occvla {

double RngStream::normal() {
  // Box-Muller; u1 kept strictly positive so log stays finite.
  const double u1 = 1.0 - uniform();
  const double u2 = uniform();
  return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
}

}  // namespace occvla
