#pragma once

#include <array>
#include <cstdint>
#include <functional>
#include <map>
#include <optional>
#include <random>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "canteen/game_model.hpp"
#include "canteen/scoring.hpp"

namespace canteen {

// How an agent reports certainty after choosing. kStylized is a hand-made
// shape (confident far from 9:00, "somewhat certain" at 8:50); it is not
// fitted to any data.
struct CertaintyRule {
  enum class Mode { kConstant, kStylized };
  Mode mode = Mode::kConstant;
  CertaintyLevel level = CertaintyLevel::kVeryCertain;

  static CertaintyRule constant(CertaintyLevel level) {
    return {Mode::kConstant, level};
  }
  static CertaintyRule stylized() { return {Mode::kStylized, {}}; }
  CertaintyLevel operator()(ArrivalTime t, Action a) const;
};

struct Policy {
  enum class Kind { kAllOffice, kCanteenBeforeNine, kCutoff, kMixedGuess, kLogistic };

  Kind kind = Kind::kAllOffice;
  ArrivalTime threshold;  // cut-off time, or the guess time for kMixedGuess
  double canteen_probability = 0.0;  // q for kMixedGuess
  double alpha = 0.0;  // logit intercept, time in minutes after 8:00
  double beta = 0.0;
  CertaintyRule certainty;
  // Office at 9:00 and later regardless of kind. Off only for experiments
  // with irrational agents.
  bool guard_forbidden = true;

  static Policy all_office();
  static Policy canteen_before_nine();
  static Policy cutoff(ArrivalTime t);
  static Policy mixed_guess(ArrivalTime guess_time, double q);
  static Policy logistic(double alpha, double beta);

  // all_office | before9 | cutoff:H:MM | mixed:H:MM:q | logistic:a:b
  static Policy parse(std::string_view text);
  std::string str() const;
};

struct Decision {
  Action action;
  CertaintyLevel certainty;
};

Decision decide(const Policy& policy, ArrivalTime t, std::mt19937_64& rng);

struct SessionConfig {
  TimeRange range = TimeRange::live_default();
  int max_rounds = 10;
  double endowment = 10.0;
  std::uint64_t seed = 1;

  static SessionConfig classroom();
  void validate() const;  // throws ConfigError
};

enum class Outcome { kCanteenCoordination, kOfficeCoordination, kMiscoordination };

// Forbidden canteen visits count as miscoordination.
Outcome classify_outcome(const ArrivalPair& t, Action a1, Action a2);

struct RoundRecord {
  int round = 0;
  ArrivalPair arrivals;
  std::array<Action, 2> actions{};
  std::array<CertaintyLevel, 2> certainty{};
  std::array<double, 2> utility{};
  std::array<double, 2> bankroll_after{};

  bool operator==(const RoundRecord&) const = default;
};

struct SessionLog {
  std::vector<RoundRecord> rounds;
  std::array<double, 2> final_bankroll{};
  bool ruined = false;

  bool operator==(const SessionLog&) const = default;
};

// Called after each round with the seat index (0 or 1) and that seat's
// policy. Empty by default: agents do not adapt.
using AdaptationHook =
    std::function<void(int seat, Policy& policy, const RoundRecord& record)>;

SessionLog run_session(const SessionConfig& cfg, Policy p1, Policy p2,
                       std::mt19937_64& rng, const AdaptationHook& hook = {});

struct OutcomeCounts {
  long canteen = 0;
  long office = 0;
  long miscoordinated = 0;

  long total() const { return canteen + office + miscoordinated; }
  double miscoordination_rate() const {
    return total() == 0 ? 0.0 : static_cast<double>(miscoordinated) / total();
  }
};

// Unordered arrival combination, written "8:40/8:50".
struct ArrivalCombo {
  ArrivalTime early;
  ArrivalTime late;

  static ArrivalCombo of(const ArrivalPair& t);
  std::string str() const;
  auto operator<=>(const ArrivalCombo&) const = default;
};

struct SimStats {
  long sessions = 0;
  int max_rounds = 0;
  long total_rounds = 0;
  double rounds_played_avg = 0.0;
  double ruin_rate = 0.0;
  // Mean final bonus over players as a fraction of the endowment; a
  // negative bonus counts as zero.
  double payoff_retained = 0.0;
  // Mean penalty per player per round, as a positive dollar amount.
  double avg_penalty_per_round = 0.0;
  std::map<ArrivalCombo, OutcomeCounts> per_pair;

  long counted_rounds() const;
};

SimStats run_monte_carlo(const SessionConfig& cfg, const Policy& p1,
                         const Policy& p2, long n_sessions);

// N, R, rounds, ruin %, payoff %, mean penalty; one data row.
std::string summary_csv(const SimStats& stats);
std::string pair_outcomes_csv(const SimStats& stats);

class FitError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct LogitFit {
  double alpha = 0.0;  // log-odds of canteen = alpha + beta * minutes
  double beta = 0.0;
  std::optional<double> midpoint_minutes;  // -alpha/beta; empty when flat
  int iterations = 0;
  bool converged = false;
};

// Maximum-likelihood logistic fit of P(canteen) against arrival time.
// Throws FitError when the classes are separable or one class is missing.
LogitFit fit_logit(const std::vector<std::pair<ArrivalTime, Action>>& data);

// Fractional minutes after 8:00 as "H:MM", rounded to the minute.
std::string clock_string(double minutes_after_8am);

}  // namespace canteen
