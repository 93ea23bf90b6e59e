#pragma once

#include <array>
#include <cmath>
#include <cstddef>
#include <cstdio>
#include <functional>
#include <limits>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "hadamard/errors.hpp"

namespace hadamard {

/// Parameter classes required by the convergence results the schemes rely on.
enum class ScheduleClass {
  HalpernAnchor,   // a_k in (0,1), a_k -> 0, sum a_k = +inf
  MannParam,       // a_k in (0,1), limsup a_k < 1
  VanishingParam,  // a_k in [0,1], a_k -> 0
  ResolventParam,  // a_k bounded below away from a floor (and optionally above)
};

inline std::string to_string(ScheduleClass c) {
  switch (c) {
    case ScheduleClass::HalpernAnchor: return "halpern-anchor";
    case ScheduleClass::MannParam: return "mann-param";
    case ScheduleClass::VanishingParam: return "vanishing-param";
    case ScheduleClass::ResolventParam: return "resolvent-param";
  }
  return "unknown";
}

/// A real sequence indexed from k = 1.
///
/// Closed-form schedules have the shape offset + scale / (k + shift)^exponent,
/// which covers constants, 1/(k+1), 1/k^2, 1 - 1/k and theta + 1/k. Their limit
/// and the divergence of their series are known exactly. Custom schedules
/// carry declared asymptotics instead.
class Schedule {
 public:
  static constexpr std::array<std::size_t, 4> spot_indices{1, 10, 1000, 1000000};

  static Schedule constant(double c) { return power_law(0.0, 0.0, 0.0, c); }

  static Schedule power_law(double scale, double exponent, double shift = 0.0, double offset = 0.0) {
    if (!(shift > -1.0)) throw ConfigError("schedule shift must exceed -1 so that k + shift > 0 for k >= 1");
    if (!std::isfinite(scale) || !std::isfinite(exponent) || !std::isfinite(offset))
      throw ConfigError("schedule parameters must be finite");
    Schedule s;
    s.law_ = Law{offset, scale, exponent, shift};
    return s;
  }

  static Schedule custom(std::string name, std::function<double(std::size_t)> fn, double limit, bool sum_diverges) {
    Schedule s;
    s.custom_ = Custom{std::move(name), std::move(fn), limit, sum_diverges};
    return s;
  }

  double operator()(std::size_t k) const {
    if (custom_) return custom_->fn(k);
    const Law& l = *law_;
    if (l.exponent == 0.0 || l.scale == 0.0) return l.offset + l.scale;
    return l.offset + l.scale / std::pow(static_cast<double>(k) + l.shift, l.exponent);
  }

  double limit() const {
    if (custom_) return custom_->limit;
    const Law& l = *law_;
    if (l.scale == 0.0 || l.exponent == 0.0) return l.offset + l.scale;
    if (l.exponent > 0.0) return l.offset;
    return l.scale > 0.0 ? std::numeric_limits<double>::infinity() : -std::numeric_limits<double>::infinity();
  }

  /// Whether sum_{k>=1} a_k = +inf.
  bool sum_diverges() const {
    if (custom_) return custom_->sum_diverges;
    const double lim = limit();
    if (lim > 0.0) return true;
    if (lim < 0.0) return false;
    const Law& l = *law_;
    return l.scale > 0.0 && l.exponent <= 1.0;
  }

  /// min/max over the spot indices and the limit.
  double spot_min() const {
    double m = limit();
    for (std::size_t k : spot_indices) m = std::min(m, (*this)(k));
    return m;
  }
  double spot_max() const {
    double m = limit();
    for (std::size_t k : spot_indices) m = std::max(m, (*this)(k));
    return m;
  }

  std::string describe() const {
    if (custom_) return custom_->name;
    const Law& l = *law_;
    if (l.scale == 0.0 || l.exponent == 0.0) return fmt(l.offset + l.scale);
    std::string out;
    if (l.offset != 0.0) out += fmt(l.offset) + " + ";
    if (l.shift != 0.0)
      out += fmt(l.scale) + "/(k" + (l.shift > 0 ? "+" : "") + fmt(l.shift) + ")";
    else
      out += fmt(l.scale) + "/k";
    if (l.exponent != 1.0) out += "^" + fmt(l.exponent);
    return out;
  }

 private:
  struct Law {
    double offset, scale, exponent, shift;
  };
  struct Custom {
    std::string name;
    std::function<double(std::size_t)> fn;
    double limit;
    bool sum_diverges;
  };

  static std::string fmt(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%g", v);
    return buf;
  }

  Schedule() = default;

  std::optional<Law> law_;
  std::optional<Custom> custom_;
};

/// Range required of a ResolventParam schedule.
struct ResolventBounds {
  double lower = 0.0;
  bool lower_strict = true;
  std::optional<double> upper;
  bool upper_strict = false;
};

/// Throws ConfigError naming the violated hypothesis if `s` is not in class `c`.
/// `role` names the parameter (e.g. "alpha"), `context` the result whose
/// hypothesis is being checked.
inline void require_class(const Schedule& s, ScheduleClass c, std::string_view role, std::string_view context,
                          const ResolventBounds& bounds = {}) {
  // Every violated hypothesis is collected so the message names all of them.
  std::vector<std::string> failures;
  auto fail = [&](const std::string& why) { failures.push_back(why); };
  const double lo = s.spot_min();
  const double hi = s.spot_max();
  for (std::size_t k : Schedule::spot_indices)
    if (!std::isfinite(s(k))) fail("value at k=" + std::to_string(k) + " is not finite");

  switch (c) {
    case ScheduleClass::HalpernAnchor:
      for (std::size_t k : Schedule::spot_indices)
        if (!(s(k) > 0.0 && s(k) < 1.0)) fail("value at k=" + std::to_string(k) + " outside (0,1)");
      if (s.limit() != 0.0) fail("lim a_k = 0 fails");
      if (!s.sum_diverges()) fail("sum_k a_k = +infinity fails, the series converges");
      break;
    case ScheduleClass::MannParam:
      for (std::size_t k : Schedule::spot_indices)
        if (!(s(k) > 0.0 && s(k) < 1.0)) fail("value at k=" + std::to_string(k) + " outside (0,1)");
      if (!(s.limit() < 1.0) || !(hi < 1.0)) fail("limsup a_k < 1 fails");
      break;
    case ScheduleClass::VanishingParam:
      for (std::size_t k : Schedule::spot_indices)
        if (!(s(k) >= 0.0 && s(k) <= 1.0)) fail("value at k=" + std::to_string(k) + " outside [0,1]");
      if (s.limit() != 0.0) fail("a_k -> 0 fails");
      break;
    case ScheduleClass::ResolventParam: {
      const bool low_ok = bounds.lower_strict ? lo > bounds.lower : lo >= bounds.lower;
      if (!low_ok)
        fail("liminf a_k " + std::string(bounds.lower_strict ? "> " : ">= ") + std::to_string(bounds.lower) +
             " fails (inf = " + std::to_string(lo) + ")");
      if (bounds.upper) {
        const bool up_ok = bounds.upper_strict ? hi < *bounds.upper : hi <= *bounds.upper;
        if (!up_ok)
          fail("a_k " + std::string(bounds.upper_strict ? "< " : "<= ") + std::to_string(*bounds.upper) +
               " fails (sup = " + std::to_string(hi) + ")");
      }
      break;
    }
  }
  if (failures.empty()) return;
  std::string why;
  for (const std::string& f : failures) why += (why.empty() ? "" : "; ") + f;
  throw ConfigError(std::string(role) + " schedule " + s.describe() + " is not " + to_string(c) + ": " + why +
                    " (required by " + std::string(context) + ")");
}

}  // namespace hadamard
