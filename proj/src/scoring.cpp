#include "canteen/scoring.hpp"

#include <cmath>
#include <cstdlib>
#include <string>

namespace canteen {

std::string_view to_string(CertaintyLevel level) {
  switch (level) {
    case CertaintyLevel::kVeryUncertain: return "very_uncertain";
    case CertaintyLevel::kSlightlyCertain: return "slightly_certain";
    case CertaintyLevel::kSomewhatCertain: return "somewhat_certain";
    case CertaintyLevel::kQuiteCertain: return "quite_certain";
    case CertaintyLevel::kVeryCertain: return "very_certain";
  }
  return "very_uncertain";
}

CertaintyLevel parse_certainty(std::string_view text) {
  for (auto level : kCertaintyGrid) {
    if (to_string(level) == text) return level;
  }
  throw ConfigError("unknown certainty level '" + std::string(text) + "'");
}

CertaintyLevel certainty_from_probability(double e) {
  for (auto level : kCertaintyGrid) {
    if (probability(level) == e) return level;
  }
  throw ConfigError("certainty " + std::to_string(e) + " is not on the grid");
}

double utility(double e, Action self, Action other, ArrivalTime t_self,
               ArrivalTime t_other) {
  if (is_forbidden(t_self, self) || is_forbidden(t_other, other)) {
    return 2.0 * std::log(1.0 - e);
  }
  const int a1 = encode(self);
  const int a2 = encode(other);
  const int mismatch = std::abs(a1 - a2);
  return (1 - mismatch + a1 * a2) * std::log(e) +
         2 * mismatch * std::log(1.0 - e);
}

double penalty_ratio(CertaintyLevel level) {
  const double e = probability(level);
  return std::abs(2.0 * std::log(1.0 - e)) / std::abs(std::log(e));
}

double penalty_ratio_cents(CertaintyLevel level) {
  const double e = probability(level);
  return std::abs(round_cents(2.0 * std::log(1.0 - e))) / std::abs(round_cents(std::log(e)));
}

CertaintyLevel best_report(double q, Action action, ArrivalTime t) {
  if (q < 0.0 || q > 1.0) throw ConfigError("belief must lie in [0, 1]");
  // A matched forbidden choice still scores as a miscoordination, so the
  // office branch is the only non-degenerate one at or after 9:00.
  const bool forbidden = is_forbidden(t, action);
  const double match_weight =
      forbidden ? 0.0 : (action == Action::kCanteen ? 1.0 : 2.0);
  auto expected = [&](double e) {
    const double matched = match_weight == 0.0 ? 2.0 * std::log(1.0 - e)
                                               : match_weight * std::log(e);
    return q * matched + (1.0 - q) * 2.0 * std::log(1.0 - e);
  };
  CertaintyLevel best = kCertaintyGrid.front();
  double best_value = expected(probability(best));
  for (auto level : kCertaintyGrid) {
    const double v = expected(probability(level));
    if (v > best_value) {
      best = level;
      best_value = v;
    }
  }
  return best;
}

double round_cents(double dollars) { return std::round(dollars * 100.0) / 100.0; }

}  // namespace canteen
