#pragma once

#include <array>
#include <string_view>

#include "canteen/game_model.hpp"

namespace canteen {

// Five-point Likert scale reported after each decision.
enum class CertaintyLevel {
  kVeryUncertain,
  kSlightlyCertain,
  kSomewhatCertain,
  kQuiteCertain,
  kVeryCertain,
};

inline constexpr std::array<CertaintyLevel, 5> kCertaintyGrid = {
    CertaintyLevel::kVeryUncertain, CertaintyLevel::kSlightlyCertain,
    CertaintyLevel::kSomewhatCertain, CertaintyLevel::kQuiteCertain,
    CertaintyLevel::kVeryCertain};

constexpr double probability(CertaintyLevel level) {
  constexpr std::array<double, 5> kValues = {0.5, 0.625, 0.75, 0.875, 0.99};
  return kValues[static_cast<std::size_t>(level)];
}

std::string_view to_string(CertaintyLevel level);
CertaintyLevel parse_certainty(std::string_view text);
// Inverse of probability(); only exact grid values are accepted.
CertaintyLevel certainty_from_probability(double e);

// Per-round utility for the player reporting certainty `e`. Canteen at
// 9:00 or later by either player scores as a miscoordination.
double utility(double e, Action self, Action other, ArrivalTime t_self,
               ArrivalTime t_other);
inline double utility(CertaintyLevel e, Action self, Action other,
                      ArrivalTime t_self, ArrivalTime t_other) {
  return utility(probability(e), self, other, t_self, t_other);
}

struct RoundOutcome {
  double balance;
  bool ruined;
};

constexpr RoundOutcome apply_round(double balance, double utility) {
  const double next = balance + utility;
  return {next, next <= 0.0};
}

// |miscoordination penalty| / |canteen-coordination penalty| at the same e.
double penalty_ratio(CertaintyLevel e);
// The same ratio taken between the cents-rounded dollar penalties, which is
// what a participant reading the payoff examples sees.
double penalty_ratio_cents(CertaintyLevel e);

// Grid report maximizing expected utility when the other player matches
// `action` with probability q. Ties go to the lower certainty.
CertaintyLevel best_report(double q, Action action, ArrivalTime t);

// Cents rounding for display and wire messages.
double round_cents(double dollars);

}  // namespace canteen
