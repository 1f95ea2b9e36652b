#pragma once

#include <compare>
#include <cstdint>
#include <random>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace canteen {

// Thrown for invalid ranges, malformed clock strings and similar setup
// mistakes.
class ConfigError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// Arrival time as integer minutes after 8:00. Grid times are multiples of
// 10; cut-off times may sit on the 5-minute midpoints.
class ArrivalTime {
 public:
  constexpr ArrivalTime() = default;
  constexpr explicit ArrivalTime(int minutes_after_8am)
      : minutes_(minutes_after_8am) {}

  static constexpr ArrivalTime clock(int hour, int minute) {
    return ArrivalTime((hour - 8) * 60 + minute);
  }

  // Accepts "H:MM" or "HH:MM".
  static ArrivalTime parse(std::string_view text);

  constexpr int minutes() const { return minutes_; }
  constexpr bool on_grid() const { return minutes_ % 10 == 0; }
  std::string str() const;

  constexpr ArrivalTime operator+(int delta) const {
    return ArrivalTime(minutes_ + delta);
  }
  constexpr ArrivalTime operator-(int delta) const {
    return ArrivalTime(minutes_ - delta);
  }
  constexpr int operator-(ArrivalTime other) const {
    return minutes_ - other.minutes_;
  }
  constexpr auto operator<=>(const ArrivalTime&) const = default;

 private:
  int minutes_ = 0;
};

inline constexpr ArrivalTime kNineAm = ArrivalTime::clock(9, 0);
inline constexpr int kStepMinutes = 10;

class TimeRange {
 public:
  // Throws ConfigError unless tmin <= 8:50, tmax >= 9:00, both on the grid.
  TimeRange(ArrivalTime tmin, ArrivalTime tmax);

  // [8:10, 9:10], the range used by the formal analysis.
  static TimeRange analysis_default();
  // [8:00, 9:10], the arrival set used in live sessions.
  static TimeRange live_default();

  ArrivalTime tmin() const { return tmin_; }
  ArrivalTime tmax() const { return tmax_; }
  bool contains(ArrivalTime t) const {
    return t >= tmin_ && t <= tmax_ && (t - tmin_) % kStepMinutes == 0;
  }
  // Grid points tmin, tmin+10, ..., tmax.
  std::vector<ArrivalTime> times() const;
  std::size_t grid_size() const {
    return static_cast<std::size_t>((tmax_ - tmin_) / kStepMinutes) + 1;
  }
  std::size_t index_of(ArrivalTime t) const;

  bool operator==(const TimeRange&) const = default;

 private:
  ArrivalTime tmin_;
  ArrivalTime tmax_;
};

enum class Action : int { kCanteen = 0, kOffice = 1 };

constexpr int encode(Action a) { return static_cast<int>(a); }
std::string_view to_string(Action a);
Action parse_action(std::string_view text);

struct ArrivalPair {
  ArrivalTime t1;
  ArrivalTime t2;

  ArrivalTime of(int player) const { return player == 1 ? t1 : t2; }
  ArrivalPair mirrored() const { return {t2, t1}; }
  bool both_before_nine() const { return t1 < kNineAm && t2 < kNineAm; }
  auto operator<=>(const ArrivalPair&) const = default;
};

// The set T of legal arrival pairs in lexicographic order.
std::vector<ArrivalPair> arrival_pairs(const TimeRange& range);

// Uniform draw from arrival_pairs(range).
ArrivalPair deal(const TimeRange& range, std::mt19937_64& rng);

constexpr bool is_forbidden(ArrivalTime t, Action a) {
  return a == Action::kCanteen && t >= kNineAm;
}

// Two chains of arrival pairs that never share an information class. The
// first chain starts at (tmin, tmin+10); the second is its mirror image.
// Each chain is listed in walk order, so consecutive pairs share one
// player's arrival time.
struct SubgamePartition {
  std::vector<ArrivalPair> first;
  std::vector<ArrivalPair> second;

  const std::vector<ArrivalPair>& operator[](std::size_t i) const {
    return i == 0 ? first : second;
  }
  int component_of(const ArrivalPair& p) const;
};

SubgamePartition components(const TimeRange& range);

}  // namespace canteen
