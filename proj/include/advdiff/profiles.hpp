#pragma once

// Fixed families of test data: smooth compactly supported bumps and
// low-frequency oscillations. Compositions are versioned so sweep outputs
// stay reproducible.

#include <cmath>
#include <numbers>
#include <string>
#include <vector>

#include "advdiff/core_types.hpp"

namespace advdiff {

inline constexpr const char* kBatteryVersion = "battery-v1";
inline constexpr const char* kCarlemanFamilyVersion = "carleman-family-v1";

/// Standard mollifier exp(-1 / (1 - r^2)) on |r| < 1, zero elsewhere.
inline double mollifier(double r) {
  const double q = 1.0 - r * r;
  return q > 0.0 ? std::exp(-1.0 / q) : 0.0;
}

inline StateX bump(const GridSpec& g, double center, double radius) {
  return StateX::sample(g, [=](double x) { return mollifier((x - center) / radius); });
}

inline StateX cosine_mode(const GridSpec& g, int k) {
  return StateX::sample(g, [k](double x) { return std::cos(k * std::numbers::pi * x); });
}

inline StateX normalized_X(StateX u, const ModelParams& p, const GridSpec& g) {
  const double n = norm_X(u, p, g);
  if (n == 0.0) throw DomainError("cannot normalize a zero state");
  return scaled(1.0 / n, std::move(u));
}

struct NamedState {
  std::string name;
  StateX state;
};

/// Eight bumps of varying width and position plus four oscillatory profiles.
inline std::vector<NamedState> default_battery(const ModelParams& p, const GridSpec& g) {
  struct B {
    double c, r;
  };
  static constexpr B bumps[] = {{-0.5, 0.4},  {-0.5, 0.2},  {-0.25, 0.2}, {-0.75, 0.2},
                                {-0.15, 0.12}, {-0.85, 0.12}, {-0.35, 0.3}, {-0.65, 0.3}};
  std::vector<NamedState> out;
  for (const auto& b : bumps)
    out.push_back({"bump(c=" + std::to_string(b.c) + ",r=" + std::to_string(b.r) + ")",
                   normalized_X(bump(g, b.c, b.r), p, g)});
  for (int k = 1; k <= 4; ++k)
    out.push_back({"cos(" + std::to_string(k) + "pi x)", normalized_X(cosine_mode(g, k), p, g)});
  return out;
}

/// Six terminal data for adjoint-based tests: three bumps, three cosines.
inline std::vector<NamedState> carleman_family(const ModelParams& p, const GridSpec& g) {
  std::vector<NamedState> out;
  out.push_back({"bump(-0.5,0.3)", normalized_X(bump(g, -0.5, 0.3), p, g)});
  out.push_back({"bump(-0.3,0.2)", normalized_X(bump(g, -0.3, 0.2), p, g)});
  out.push_back({"bump(-0.7,0.2)", normalized_X(bump(g, -0.7, 0.2), p, g)});
  for (int k = 1; k <= 3; ++k)
    out.push_back({"cos(" + std::to_string(k) + "pi x)", normalized_X(cosine_mode(g, k), p, g)});
  return out;
}

}  // namespace advdiff
