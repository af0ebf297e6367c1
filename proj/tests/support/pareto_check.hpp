#pragma once

#include <algorithm>
#include <cstddef>
#include <string>
#include <vector>

#include "mccm/dse.hpp"

namespace mccm::test {

// Quadratic dominance verifier, deliberately independent of the production
// skyline sweep. Returns an empty string when the front is correct, else a
// description of the first violation found.
inline std::string verify_pareto_front(const std::vector<DesignPoint>& points,
                                       const std::vector<std::size_t>& front,
                                       const Objective& a, const Objective& b) {
  auto dir = [](double v, bool maximize) { return maximize ? v : -v; };
  auto va = [&](const DesignPoint& p) { return dir(metric_value(p, a.metric), a.maximize); };
  auto vb = [&](const DesignPoint& p) { return dir(metric_value(p, b.metric), b.maximize); };
  auto dominates = [&](const DesignPoint& p, const DesignPoint& q) {
    return va(p) >= va(q) && vb(p) >= vb(q) && (va(p) > va(q) || vb(p) > vb(q));
  };
  auto equal = [&](const DesignPoint& p, const DesignPoint& q) {
    return va(p) == va(q) && vb(p) == vb(q);
  };

  std::vector<bool> in_front(points.size(), false);
  for (std::size_t i : front) {
    if (i >= points.size()) return "front index out of range";
    if (!points[i].feasible) return "front contains infeasible point " + points[i].sketch;
    in_front[i] = true;
  }
  for (std::size_t i : front)
    for (std::size_t j = 0; j < points.size(); ++j)
      if (points[j].feasible && dominates(points[j], points[i]))
        return "front member " + points[i].sketch + " is dominated by " + points[j].sketch;
  for (std::size_t j = 0; j < points.size(); ++j) {
    if (!points[j].feasible || in_front[j]) continue;
    bool covered = false;
    for (std::size_t i : front)
      if (dominates(points[i], points[j]) || equal(points[i], points[j])) {
        covered = true;
        break;
      }
    if (!covered)
      return "excluded point " + points[j].sketch + " is neither dominated nor a duplicate";
  }
  return {};
}

}  // namespace mccm::test
