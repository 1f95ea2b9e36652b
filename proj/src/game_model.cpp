#include "canteen/game_model.hpp"

#include <algorithm>
#include <charconv>
#include <cstdio>

namespace canteen {

ArrivalTime ArrivalTime::parse(std::string_view text) {
  const auto colon = text.find(':');
  if (colon == std::string_view::npos || colon == 0 ||
      text.size() - colon != 3) {
    throw ConfigError("malformed time '" + std::string(text) +
                      "', expected H:MM");
  }
  int hour = 0;
  int minute = 0;
  const auto h = text.substr(0, colon);
  const auto m = text.substr(colon + 1);
  auto [hp, he] = std::from_chars(h.data(), h.data() + h.size(), hour);
  auto [mp, me] = std::from_chars(m.data(), m.data() + m.size(), minute);
  if (he != std::errc() || hp != h.data() + h.size() || me != std::errc() ||
      mp != m.data() + m.size() || hour < 0 || hour > 23 || minute < 0 ||
      minute > 59) {
    throw ConfigError("malformed time '" + std::string(text) +
                      "', expected H:MM");
  }
  return clock(hour, minute);
}

std::string ArrivalTime::str() const {
  const int total = 8 * 60 + minutes_;
  char buf[16];
  std::snprintf(buf, sizeof buf, "%d:%02d", total / 60, total % 60);
  return buf;
}

TimeRange::TimeRange(ArrivalTime tmin, ArrivalTime tmax)
    : tmin_(tmin), tmax_(tmax) {
  if (!tmin.on_grid() || !tmax.on_grid()) {
    throw ConfigError("range bounds must lie on the 10-minute grid");
  }
  if (tmin > ArrivalTime::clock(8, 50)) {
    throw ConfigError("tmin must be 8:50 or earlier, got " + tmin.str());
  }
  if (tmax < kNineAm) {
    throw ConfigError("tmax must be 9:00 or later, got " + tmax.str());
  }
}

TimeRange TimeRange::analysis_default() {
  return {ArrivalTime::clock(8, 10), ArrivalTime::clock(9, 10)};
}

TimeRange TimeRange::live_default() {
  return {ArrivalTime::clock(8, 0), ArrivalTime::clock(9, 10)};
}

std::vector<ArrivalTime> TimeRange::times() const {
  std::vector<ArrivalTime> out;
  for (auto t = tmin_; t <= tmax_; t = t + kStepMinutes) out.push_back(t);
  return out;
}

std::size_t TimeRange::index_of(ArrivalTime t) const {
  if (!contains(t)) {
    throw ConfigError("time " + t.str() + " outside range");
  }
  return static_cast<std::size_t>((t - tmin_) / kStepMinutes);
}

std::string_view to_string(Action a) {
  return a == Action::kCanteen ? "canteen" : "office";
}

Action parse_action(std::string_view text) {
  if (text == "canteen") return Action::kCanteen;
  if (text == "office") return Action::kOffice;
  throw ConfigError("unknown action '" + std::string(text) + "'");
}

std::vector<ArrivalPair> arrival_pairs(const TimeRange& range) {
  std::vector<ArrivalPair> pairs;
  for (auto t : range.times()) {
    if (t - kStepMinutes >= range.tmin()) pairs.push_back({t, t - kStepMinutes});
    if (t + kStepMinutes <= range.tmax()) pairs.push_back({t, t + kStepMinutes});
  }
  return pairs;
}

ArrivalPair deal(const TimeRange& range, std::mt19937_64& rng) {
  const auto pairs = arrival_pairs(range);
  std::uniform_int_distribution<std::size_t> pick(0, pairs.size() - 1);
  return pairs[pick(rng)];
}

int SubgamePartition::component_of(const ArrivalPair& p) const {
  if (std::find(first.begin(), first.end(), p) != first.end()) return 0;
  if (std::find(second.begin(), second.end(), p) != second.end()) return 1;
  return -1;
}

namespace {

// Walks the indistinguishability graph from `start`. Every pair has at
// most one neighbour per player, so the component is a simple path and
// starting at an endpoint yields it in chain order.
std::vector<ArrivalPair> walk_chain(const std::vector<ArrivalPair>& pairs,
                                    ArrivalPair start) {
  std::vector<ArrivalPair> chain{start};
  ArrivalPair prev = start;
  ArrivalPair cur = start;
  bool moved = true;
  while (moved) {
    moved = false;
    for (const auto& q : pairs) {
      if (q == cur || q == prev) continue;
      if (q.t1 == cur.t1 || q.t2 == cur.t2) {
        prev = cur;
        cur = q;
        chain.push_back(q);
        moved = true;
        break;
      }
    }
  }
  return chain;
}

}  // namespace

SubgamePartition components(const TimeRange& range) {
  const auto pairs = arrival_pairs(range);
  const ArrivalPair start{range.tmin(), range.tmin() + kStepMinutes};
  SubgamePartition part;
  part.first = walk_chain(pairs, start);
  part.second = walk_chain(pairs, start.mirrored());
  if (part.first.size() + part.second.size() != pairs.size()) {
    throw std::logic_error("arrival pairs do not split into two chains");
  }
  return part;
}

}  // namespace canteen
