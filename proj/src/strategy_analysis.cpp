#include "canteen/strategy_analysis.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <set>

#include "canteen/scoring.hpp"

namespace canteen {

Strategy::Strategy(TimeRange range, std::vector<Action> actions)
    : range_(range), actions_(std::move(actions)) {
  if (actions_.size() != range_.grid_size()) {
    throw ConfigError("strategy must assign an action to every arrival time");
  }
}

Strategy Strategy::all_office(const TimeRange& range) {
  return {range, std::vector<Action>(range.grid_size(), Action::kOffice)};
}

Strategy Strategy::with_cutoff(const TimeRange& range, ArrivalTime cutoff) {
  std::vector<Action> actions;
  for (auto t : range.times()) {
    actions.push_back(t < cutoff ? Action::kCanteen : Action::kOffice);
  }
  return {range, std::move(actions)};
}

double PairPayoffs::operator()(Action a1, Action a2) const {
  if (a1 == Action::kCanteen) return a2 == Action::kCanteen ? cc : co;
  return a2 == Action::kCanteen ? oc : oo;
}

AbstractUtility AbstractUtility::from_constants(double v_cc, double v_oo,
                                                double v_mis) {
  return {PairPayoffs{v_cc, v_oo, v_mis, v_mis},
          PairPayoffs{v_mis, v_oo, v_mis, v_mis},
          {}};
}

const PairPayoffs& AbstractUtility::payoffs(const ArrivalPair& t) const {
  if (auto it = per_pair.find(t); it != per_pair.end()) return it->second;
  return t.both_before_nine() ? early : late;
}

bool AbstractUtility::satisfies_constraints(const TimeRange& range) const {
  for (const auto& t : arrival_pairs(range)) {
    const auto& u = payoffs(t);
    if (t.both_before_nine()) {
      if (!(u.cc > u.oo && u.oo > u.co && u.co == u.oc)) return false;
    } else {
      if (!(u.oo > u.co && u.co == u.oc && u.oc == u.cc)) return false;
    }
  }
  return true;
}

namespace {

// Three distinct negatives in descending order.
std::array<double, 3> descending_negatives(std::mt19937_64& rng) {
  std::uniform_real_distribution<double> draw(-10.0, 0.0);
  std::array<double, 3> v{};
  do {
    v = {draw(rng), draw(rng), draw(rng)};
    std::sort(v.begin(), v.end(), std::greater<>());
  } while (!(v[0] > v[1] && v[1] > v[2]));
  return v;
}

}  // namespace

AbstractUtility random_abstract_utility(std::mt19937_64& rng,
                                        const TimeRange& range,
                                        bool per_pair) {
  const auto v = descending_negatives(rng);
  auto model = AbstractUtility::from_constants(v[0], v[1], v[2]);
  if (per_pair) {
    for (const auto& t : arrival_pairs(range)) {
      const auto w = descending_negatives(rng);
      model.per_pair[t] = t.both_before_nine()
                              ? PairPayoffs{w[0], w[1], w[2], w[2]}
                              : PairPayoffs{w[2], w[0], w[2], w[2]};
    }
  }
  return model;
}

double pair_utility(const UtilityModel& model, const ArrivalPair& t, Action a1,
                    Action a2) {
  if (const auto* abstract = std::get_if<AbstractUtility>(&model)) {
    return abstract->payoffs(t)(a1, a2);
  }
  const auto& concrete = std::get<ConcreteUtility>(model);
  const double u1 = utility(concrete.certainty(t.t1, a1), a1, a2, t.t1, t.t2);
  const double u2 = utility(concrete.certainty(t.t2, a2), a2, a1, t.t2, t.t1);
  return 0.5 * (u1 + u2);
}

double expected_utility(const StrategyProfile& profile, const TimeRange& range,
                        const UtilityModel& model) {
  const auto pairs = arrival_pairs(range);
  double total = 0.0;
  for (const auto& t : pairs) {
    const auto [a1, a2] = profile.at(t);
    total += pair_utility(model, t, a1, a2);
  }
  return total / static_cast<double>(pairs.size());
}

bool is_safe(const StrategyProfile& profile, const TimeRange& range) {
  for (const auto& t : arrival_pairs(range)) {
    const auto [a1, a2] = profile.at(t);
    if (a1 != a2 || is_forbidden(t.t1, a1) || is_forbidden(t.t2, a2)) {
      return false;
    }
  }
  return true;
}

namespace {

int bit_index(const TimeRange& range, int player, ArrivalTime t) {
  return (player - 1) * static_cast<int>(range.grid_size()) +
         static_cast<int>(range.index_of(t));
}

int profile_bits(const TimeRange& range) {
  const int bits = 2 * static_cast<int>(range.grid_size());
  if (bits > kMaxProfileBits) {
    throw CapacityError("range has " + std::to_string(range.grid_size()) +
                        " arrival times; exhaustive enumeration supports at "
                        "most " + std::to_string(kMaxProfileBits / 2));
  }
  return bits;
}

bool canteen_at(std::uint32_t mask, int bit) { return (mask >> bit) & 1u; }

}  // namespace

ProfileBits pack(const StrategyProfile& profile) {
  const auto& range = profile.s1.range();
  const int k = static_cast<int>(range.grid_size());
  ProfileBits bits;
  bits.defined = (2 * k >= 32) ? ~0u : ((1u << (2 * k)) - 1u);
  for (int i = 0; i < k; ++i) {
    if (profile.s1.actions()[i] == Action::kCanteen) bits.canteen |= 1u << i;
    if (profile.s2.actions()[i] == Action::kCanteen) bits.canteen |= 1u << (k + i);
  }
  return bits;
}

StrategyProfile unpack(const TimeRange& range, ProfileBits bits) {
  const int k = static_cast<int>(range.grid_size());
  std::vector<Action> s1(k, Action::kOffice);
  std::vector<Action> s2(k, Action::kOffice);
  for (int i = 0; i < k; ++i) {
    if (canteen_at(bits.canteen & bits.defined, i)) s1[i] = Action::kCanteen;
    if (canteen_at(bits.canteen & bits.defined, k + i)) s2[i] = Action::kCanteen;
  }
  return {Strategy(range, std::move(s1)), Strategy(range, std::move(s2))};
}

std::vector<StrategyProfile> safe_profiles(const TimeRange& range) {
  const int bits = profile_bits(range);
  const auto pairs = arrival_pairs(range);
  std::vector<std::pair<int, int>> pair_bits;
  for (const auto& t : pairs) {
    pair_bits.emplace_back(bit_index(range, 1, t.t1), bit_index(range, 2, t.t2));
  }
  std::vector<StrategyProfile> safe;
  const std::uint64_t total = std::uint64_t{1} << bits;
  for (std::uint64_t m = 0; m < total; ++m) {
    const auto mask = static_cast<std::uint32_t>(m);
    bool ok = true;
    for (std::size_t p = 0; p < pairs.size() && ok; ++p) {
      const bool c1 = canteen_at(mask, pair_bits[p].first);
      const bool c2 = canteen_at(mask, pair_bits[p].second);
      ok = c1 == c2 && !(c1 && pairs[p].t1 >= kNineAm) &&
           !(c2 && pairs[p].t2 >= kNineAm);
    }
    if (ok) {
      safe.push_back(unpack(range, {mask, static_cast<std::uint32_t>(total - 1)}));
    }
  }
  return safe;
}

StrategyClass classify(const Strategy& s) {
  const auto times = s.range().times();
  std::size_t first_office = times.size();
  for (std::size_t i = 0; i < times.size(); ++i) {
    if (s.actions()[i] == Action::kOffice) {
      first_office = i;
      break;
    }
  }
  for (std::size_t i = first_office; i < times.size(); ++i) {
    if (s.actions()[i] == Action::kCanteen) return {};
  }
  const auto cutoff = first_office == times.size()
                          ? s.range().tmax() + kStepMinutes / 2
                          : times[first_office] - kStepMinutes / 2;
  return {true, cutoff};
}

bool has_late_canteen(const TimeRange& range, ProfileBits bits) {
  for (int player = 1; player <= 2; ++player) {
    for (auto t : range.times()) {
      const int b = bit_index(range, player, t);
      if (t >= kNineAm && canteen_at(bits.defined, b) &&
          canteen_at(bits.canteen, b)) {
        return true;
      }
    }
  }
  return false;
}

bool has_office_before_canteen(const TimeRange& range, ProfileBits bits) {
  for (int player = 1; player <= 2; ++player) {
    for (auto t : range.times()) {
      if (t + kStepMinutes > range.tmax()) continue;
      const int office = bit_index(range, player, t);
      const int canteen = bit_index(range, 3 - player, t + kStepMinutes);
      if (canteen_at(bits.defined, office) && canteen_at(bits.defined, canteen) &&
          !canteen_at(bits.canteen, office) && canteen_at(bits.canteen, canteen)) {
        return true;
      }
    }
  }
  return false;
}

namespace {

struct PairTable {
  int bit1;
  int bit2;
  std::array<double, 4> value;  // indexed by 2*canteen1 + canteen2

  double operator()(std::uint32_t mask) const {
    return value[2 * canteen_at(mask, bit1) + canteen_at(mask, bit2)];
  }
};

std::vector<PairTable> tabulate(const TimeRange& range,
                                const std::vector<ArrivalPair>& pairs,
                                const UtilityModel& model) {
  std::vector<PairTable> tables;
  for (const auto& t : pairs) {
    PairTable table{bit_index(range, 1, t.t1), bit_index(range, 2, t.t2), {}};
    for (int c1 = 0; c1 < 2; ++c1) {
      for (int c2 = 0; c2 < 2; ++c2) {
        table.value[2 * c1 + c2] =
            pair_utility(model, t, c1 ? Action::kCanteen : Action::kOffice,
                         c2 ? Action::kCanteen : Action::kOffice);
      }
    }
    tables.push_back(table);
  }
  return tables;
}

bool ties(double a, double b) {
  return std::abs(a - b) <= 1e-9 * std::max(1.0, std::abs(b));
}

// Spreads the low bits of `assignment` onto the positions in `vars`.
std::uint32_t scatter(std::uint32_t assignment, const std::vector<int>& vars) {
  std::uint32_t mask = 0;
  for (std::size_t j = 0; j < vars.size(); ++j) {
    if ((assignment >> j) & 1u) mask |= 1u << vars[j];
  }
  return mask;
}

ComponentFront solve_component(const TimeRange& range,
                               const std::vector<ArrivalPair>& pairs,
                               const UtilityModel& model) {
  const auto tables = tabulate(range, pairs, model);
  std::set<int> var_set;
  for (const auto& t : tables) {
    var_set.insert(t.bit1);
    var_set.insert(t.bit2);
  }
  const std::vector<int> vars(var_set.begin(), var_set.end());
  const std::uint32_t defined = scatter(~0u, vars);

  ComponentFront out;
  out.pairs = pairs;
  out.best_total = -std::numeric_limits<double>::infinity();
  const std::uint64_t total = std::uint64_t{1} << vars.size();
  std::vector<std::pair<double, std::uint32_t>> scored;
  scored.reserve(total);
  for (std::uint64_t a = 0; a < total; ++a) {
    const auto mask = scatter(static_cast<std::uint32_t>(a), vars);
    double sum = 0.0;
    for (const auto& table : tables) sum += table(mask);
    scored.emplace_back(sum, mask);
    out.best_total = std::max(out.best_total, sum);
  }
  for (const auto& [sum, mask] : scored) {
    if (ties(sum, out.best_total)) out.front.push_back({mask, defined});
  }

  const auto cutoff =
      pack(StrategyProfile::symmetric(Strategy::with_cutoff(
          range, ArrivalTime::clock(8, 55))))
          .canteen &
      defined;
  out.no_late_canteen = out.no_office_before_canteen = out.two_candidates = true;
  for (const auto& p : out.front) {
    out.no_late_canteen &= !has_late_canteen(range, p);
    out.no_office_before_canteen &= !has_office_before_canteen(range, p);
    const bool office = p.canteen == 0;
    const bool before_nine = p.canteen == cutoff;
    out.contains_all_office |= office;
    out.contains_canteen_before_nine |= before_nine;
    out.two_candidates &= office || before_nine;
  }
  return out;
}

}  // namespace

ParetoReport pareto_front(const TimeRange& range, const UtilityModel& model) {
  const int bits = profile_bits(range);
  const auto part = components(range);
  ParetoReport report;
  report.components = {solve_component(range, part.first, model),
                       solve_component(range, part.second, model)};

  // Full-game optima are exactly the products of component optima.
  std::set<std::uint32_t> product;
  for (const auto& a : report.components[0].front) {
    for (const auto& b : report.components[1].front) {
      product.insert(a.canteen | b.canteen);
    }
  }
  const auto all = static_cast<std::uint32_t>((std::uint64_t{1} << bits) - 1);
  for (auto mask : product) report.front.push_back(unpack(range, {mask, all}));
  const auto pair_count = static_cast<double>(arrival_pairs(range).size());
  report.best_eu = (report.components[0].best_total +
                    report.components[1].best_total) /
                   pair_count;

  report.no_late_canteen = report.no_office_before_canteen =
      report.two_candidates = true;
  for (auto mask : product) {
    report.no_late_canteen &= !has_late_canteen(range, {mask, all});
    report.no_office_before_canteen &=
        !has_office_before_canteen(range, {mask, all});
  }
  for (const auto& c : report.components) {
    report.two_candidates &= c.two_candidates;
  }

  // Brute force over every full profile, independent of the split.
  const auto tables = tabulate(range, arrival_pairs(range), model);
  auto total_of = [&](std::uint32_t mask) {
    double sum = 0.0;
    for (const auto& table : tables) sum += table(mask);
    return sum;
  };
  const std::uint64_t total = std::uint64_t{1} << bits;
  double best = -std::numeric_limits<double>::infinity();
  for (std::uint64_t m = 0; m < total; ++m) {
    best = std::max(best, total_of(static_cast<std::uint32_t>(m)));
  }
  std::set<std::uint32_t> brute;
  for (std::uint64_t m = 0; m < total; ++m) {
    const auto mask = static_cast<std::uint32_t>(m);
    if (ties(total_of(mask), best)) brute.insert(mask);
  }
  report.decomposition_ok =
      brute == product && ties(best / pair_count, report.best_eu);
  return report;
}

}  // namespace canteen
