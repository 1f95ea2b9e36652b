#pragma once

#include <array>
#include <cstdint>
#include <functional>
#include <map>
#include <random>
#include <stdexcept>
#include <variant>
#include <vector>

#include "canteen/game_model.hpp"

namespace canteen {

// Uniform memoryless strategy: one action per grid arrival time.
class Strategy {
 public:
  Strategy(TimeRange range, std::vector<Action> actions);

  static Strategy all_office(const TimeRange& range);
  // Canteen strictly before `cutoff`, office at or after it.
  static Strategy with_cutoff(const TimeRange& range, ArrivalTime cutoff);

  const TimeRange& range() const { return range_; }
  Action at(ArrivalTime t) const { return actions_[range_.index_of(t)]; }
  const std::vector<Action>& actions() const { return actions_; }
  bool operator==(const Strategy&) const = default;

 private:
  TimeRange range_;
  std::vector<Action> actions_;
};

struct StrategyProfile {
  Strategy s1;
  Strategy s2;

  static StrategyProfile symmetric(const Strategy& s) { return {s, s}; }
  std::pair<Action, Action> at(const ArrivalPair& t) const {
    return {s1.at(t.t1), s2.at(t.t2)};
  }
  // Player roles exchanged.
  StrategyProfile swapped() const { return {s2, s1}; }
  bool operator==(const StrategyProfile&) const = default;
};

// Payoffs u_t(a1, a2) for one arrival pair.
struct PairPayoffs {
  double cc;
  double oo;
  double co;
  double oc;

  double operator()(Action a1, Action a2) const;
};

// Ordinal payoff model: only the ordering constraints matter.
struct AbstractUtility {
  PairPayoffs early;  // both arrivals before 9:00
  PairPayoffs late;   // some arrival at or after 9:00
  std::map<ArrivalPair, PairPayoffs> per_pair;

  static AbstractUtility from_constants(double v_cc, double v_oo, double v_mis);
  const PairPayoffs& payoffs(const ArrivalPair& t) const;
  // cc > oo > co = oc before 9:00; oo > co = oc = cc otherwise.
  bool satisfies_constraints(const TimeRange& range) const;
};

// Three descending negatives shared by all pairs, or drawn per pair.
AbstractUtility random_abstract_utility(std::mt19937_64& rng,
                                        const TimeRange& range,
                                        bool per_pair = false);

// Log-scoring payoff averaged over both players.
struct ConcreteUtility {
  std::function<double(ArrivalTime, Action)> certainty =
      [](ArrivalTime, Action) { return 0.99; };
};

using UtilityModel = std::variant<AbstractUtility, ConcreteUtility>;

double pair_utility(const UtilityModel& model, const ArrivalPair& t, Action a1,
                    Action a2);

double expected_utility(const StrategyProfile& profile, const TimeRange& range,
                        const UtilityModel& model);

// No arrival pair leads to miscoordination or a forbidden canteen visit.
bool is_safe(const StrategyProfile& profile, const TimeRange& range);

std::vector<StrategyProfile> safe_profiles(const TimeRange& range);

struct StrategyClass {
  bool is_cutoff = false;
  ArrivalTime cutoff;  // midpoint on the 5-minute grid when is_cutoff

  bool all_office(const TimeRange& range) const {
    return is_cutoff && cutoff < range.tmin();
  }
};

StrategyClass classify(const Strategy& s);

class CapacityError : public std::length_error {
 public:
  using std::length_error::length_error;
};

inline constexpr int kMaxProfileBits = 24;

// A (possibly partial) profile packed as bits: bit i for player 1 at grid
// index i, bit k+i for player 2 at grid index i. A set bit means canteen.
struct ProfileBits {
  std::uint32_t canteen = 0;
  std::uint32_t defined = 0;

  bool operator==(const ProfileBits&) const = default;
  auto operator<=>(const ProfileBits&) const = default;
};

ProfileBits pack(const StrategyProfile& profile);
// Undefined positions default to office.
StrategyProfile unpack(const TimeRange& range, ProfileBits bits);

struct ComponentFront {
  std::vector<ArrivalPair> pairs;
  std::vector<ProfileBits> front;  // restricted to this component
  double best_total = 0.0;         // sum of u_t over the component
  // No front profile sends anyone to the canteen at 9:00 or later.
  bool no_late_canteen = false;
  // No front profile has office at t for one player and canteen at t+10
  // for the other.
  bool no_office_before_canteen = false;
  // Front is a subset of {all-office, cut-off 8:55}.
  bool two_candidates = false;
  bool contains_all_office = false;
  bool contains_canteen_before_nine = false;
};

struct ParetoReport {
  std::array<ComponentFront, 2> components;
  std::vector<StrategyProfile> front;  // full-game Pareto optima
  double best_eu = 0.0;                // EU shared by every front profile
  bool no_late_canteen = false;
  bool no_office_before_canteen = false;
  bool two_candidates = false;
  // Full enumeration over all profiles agrees with the per-component
  // product.
  bool decomposition_ok = false;
};

ParetoReport pareto_front(const TimeRange& range, const UtilityModel& model);

// Screens that rule a profile out of the front. Only defined positions
// are inspected.
bool has_late_canteen(const TimeRange& range, ProfileBits bits);
bool has_office_before_canteen(const TimeRange& range, ProfileBits bits);

}  // namespace canteen
