#pragma once

#include <random>

#include "advdiff/core_types.hpp"

namespace testsupport {

inline advdiff::StateX random_state(const advdiff::GridSpec& g, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> d(-1.0, 1.0);
  std::vector<double> v(g.n_space);
  for (auto& x : v) x = d(rng);
  return advdiff::StateX(std::move(v));
}

inline advdiff::ControlSignal random_signal(const advdiff::GridSpec& g, std::mt19937_64& rng,
                                            advdiff::Boundary where = advdiff::Boundary::gamma0) {
  std::uniform_real_distribution<double> d(-1.0, 1.0);
  advdiff::ControlSignal s{std::vector<double>(g.n_time + 1), where};
  for (auto& x : s.samples) x = d(rng);
  return s;
}

}  // namespace testsupport
