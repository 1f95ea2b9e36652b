#include "doctest.h"

#include <random>
#include <set>

#include "canteen/scoring.hpp"
#include "canteen/strategy_analysis.hpp"
#include "oracles.hpp"

using namespace canteen;

namespace {

std::set<oracle::Profile> as_oracle(const TimeRange& range, const ComponentFront& c) {
  const auto k = range.grid_size();
  std::set<oracle::Profile> out;
  for (const auto& b : c.front) {
    out.insert({b.canteen & ((1u << k) - 1u), b.canteen >> k});
  }
  return out;
}

std::function<double(const oracle::Pair&, bool, bool)> concrete_payoff(double e) {
  return [e](const oracle::Pair& t, bool c1, bool c2) {
    return 0.5 * (oracle::penalty(e, c1, c2, t.first, t.second) +
                  oracle::penalty(e, c2, c1, t.second, t.first));
  };
}

std::function<double(const oracle::Pair&, bool, bool)> abstract_payoff(const AbstractUtility& u) {
  return [u](const oracle::Pair& t, bool c1, bool c2) {
    const ArrivalPair p{ArrivalTime(t.first), ArrivalTime(t.second)};
    const auto& v = u.payoffs(p);
    if (c1 && c2) return v.cc;
    if (!c1 && !c2) return v.oo;
    return c1 ? v.co : v.oc;
  };
}

void check_against_oracle(const TimeRange& range, const UtilityModel& model,
                          const std::function<double(const oracle::Pair&, bool, bool)>& u) {
  const auto report = pareto_front(range, model);
  const int tmin = range.tmin().minutes();
  const int tmax = range.tmax().minutes();
  const auto part = components(range);
  for (int i = 0; i < 2; ++i) {
    std::vector<oracle::Pair> comp;
    for (const auto& p : i == 0 ? part.first : part.second) {
      comp.push_back({p.t1.minutes(), p.t2.minutes()});
    }
    CHECK(as_oracle(range, report.components[i]) == oracle::component_optima(tmin, tmax, comp, u));
  }
  CHECK(report.decomposition_ok);
  for (const auto& p : report.front) {
    CHECK(expected_utility(p, range, model) == doctest::Approx(report.best_eu).epsilon(1e-9));
  }
}

}  // namespace

TEST_CASE("expected penalties of symmetric strategies") {
  const auto range = TimeRange::analysis_default();
  const UtilityModel model = ConcreteUtility{};
  const auto office = StrategyProfile::symmetric(Strategy::all_office(range));
  CHECK(expected_utility(office, range, model) == doctest::Approx(2 * std::log(0.99)));
  const auto before_nine =
      StrategyProfile::symmetric(Strategy::with_cutoff(range, ArrivalTime::clock(8, 55)));
  CHECK(std::abs(expected_utility(before_nine, range, model) - -1.545) < 0.001);
  for (int cut = 5; cut <= 75; cut += 10) {
    const auto s = StrategyProfile::symmetric(Strategy::with_cutoff(range, ArrivalTime(cut)));
    CHECK(expected_utility(s, range, model) ==
          doctest::Approx(oracle::expected_penalty(10, 70, 0.99, [cut](int t) { return t < cut; })));
  }
}

TEST_CASE("expected utility is symmetric in the players") {
  const auto range = TimeRange::live_default();
  std::mt19937_64 rng(5);
  std::bernoulli_distribution coin(0.5);
  const UtilityModel model = ConcreteUtility{};
  for (int i = 0; i < 50; ++i) {
    std::vector<Action> a, b;
    for (std::size_t j = 0; j < range.grid_size(); ++j) {
      a.push_back(coin(rng) ? Action::kCanteen : Action::kOffice);
      b.push_back(coin(rng) ? Action::kCanteen : Action::kOffice);
    }
    const StrategyProfile p{Strategy(range, a), Strategy(range, b)};
    CHECK(expected_utility(p, range, model) ==
          doctest::Approx(expected_utility(p.swapped(), range, model)));
  }
}

TEST_CASE("concrete model: the front is all-office") {
  for (auto range : {TimeRange::analysis_default(), TimeRange::live_default()}) {
    const auto report = pareto_front(range, ConcreteUtility{});
    REQUIRE(report.front.size() == 1);
    CHECK(report.front[0] == StrategyProfile::symmetric(Strategy::all_office(range)));
    CHECK(report.best_eu == doctest::Approx(2 * std::log(0.99)));
    check_against_oracle(range, ConcreteUtility{}, concrete_payoff(0.99));
  }
}

TEST_CASE("random ordinal models agree with the oracle") {
  std::mt19937_64 rng(2024);
  const auto range = TimeRange::analysis_default();
  for (int trial = 0; trial < 20; ++trial) {
    const bool per_pair = trial % 2 == 1;
    const auto u = random_abstract_utility(rng, range, per_pair);
    CHECK(u.satisfies_constraints(range));
    const auto report = pareto_front(range, u);
    CHECK(report.no_late_canteen);
    CHECK(report.no_office_before_canteen);
    if (!per_pair) CHECK(report.two_candidates);
    check_against_oracle(range, u, abstract_payoff(u));
  }
}

TEST_CASE("optima pass both screens under per-pair random payoffs") {
  std::mt19937_64 rng(99);
  const auto range = TimeRange::analysis_default();
  for (int trial = 0; trial < 30; ++trial) {
    const auto u = random_abstract_utility(rng, range, true);
    const auto report = pareto_front(range, u);
    for (const auto& c : report.components) {
      for (const auto& p : c.front) {
        CHECK_FALSE(has_late_canteen(range, p));
        CHECK_FALSE(has_office_before_canteen(range, p));
      }
    }
  }
}

TEST_CASE("per-pair payoffs can move the optimal cut-off") {
  // The two-candidate result relies on every pair sharing the same
  // constants. Here the 8:50/9:00 miscoordination is ruinous while the
  // 8:40 pairs barely care, so the best cut-off in the first chain is 8:45.
  const auto range = TimeRange::analysis_default();
  auto u = AbstractUtility::from_constants(-0.1, -0.2, -0.3);
  for (const auto& t : arrival_pairs(range)) {
    if (t.t1 <= ArrivalTime::clock(8, 30) && t.t2 <= ArrivalTime::clock(8, 30)) {
      u.per_pair[t] = {-0.1, -5.0, -9.0, -9.0};
    } else if (!t.both_before_nine()) {
      u.per_pair[t] = {-9.9, -0.1, -9.9, -9.9};
    }
  }
  REQUIRE(u.satisfies_constraints(range));
  const auto report = pareto_front(range, u);
  const auto& first = report.components[0];
  REQUIRE(first.front.size() == 1);
  CHECK_FALSE(first.two_candidates);
  CHECK(first.no_late_canteen);
  CHECK(first.no_office_before_canteen);
  const auto p = unpack(range, first.front[0]);
  CHECK(p.s1.at(ArrivalTime::clock(8, 30)) == Action::kCanteen);
  CHECK(p.s2.at(ArrivalTime::clock(8, 40)) == Action::kCanteen);
  CHECK(p.s1.at(ArrivalTime::clock(8, 50)) == Action::kOffice);
  CHECK(first.best_total == doctest::Approx(-0.8));
  check_against_oracle(range, u, abstract_payoff(u));
}

TEST_CASE("a canteen-favouring ordinal model picks the 8:55 cut-off") {
  const auto range = TimeRange::analysis_default();
  // Office coordination is nearly as bad as miscoordination, so the
  // cut-off beats all-office: -0.4 - 6 - 5 against -30 per component.
  const auto u = AbstractUtility::from_constants(-0.1, -5.0, -6.0);
  const auto report = pareto_front(range, u);
  REQUIRE(report.front.size() == 1);
  CHECK(report.front[0] ==
        StrategyProfile::symmetric(Strategy::with_cutoff(range, ArrivalTime::clock(8, 55))));
  for (const auto& c : report.components) {
    CHECK(c.contains_canteen_before_nine);
    CHECK_FALSE(c.contains_all_office);
    CHECK(c.best_total == doctest::Approx(-11.4));
  }
}

TEST_CASE("screens flag the patterns they are named for") {
  const auto range = TimeRange::analysis_default();
  auto profile = [&](std::vector<Action> a, std::vector<Action> b) {
    return pack(StrategyProfile{Strategy(range, a), Strategy(range, b)});
  };
  constexpr auto C = Action::kCanteen;
  constexpr auto O = Action::kOffice;
  CHECK(has_late_canteen(range, profile({O, O, O, O, O, C, O}, {O, O, O, O, O, O, O})));
  CHECK_FALSE(has_late_canteen(range, profile({C, C, C, C, C, O, O}, {C, C, C, C, C, O, O})));
  // Player 1 office at 8:30, player 2 canteen at 8:40.
  CHECK(has_office_before_canteen(range, profile({C, C, O, O, O, O, O}, {C, C, C, C, O, O, O})));
  CHECK_FALSE(has_office_before_canteen(range, profile({C, C, C, C, C, O, O}, {C, C, C, C, C, O, O})));
  // Undefined positions are ignored.
  auto bits = profile({O, O, O, O, O, C, O}, {O, O, O, O, O, O, O});
  bits.defined = 0;
  CHECK_FALSE(has_late_canteen(range, bits));
}

TEST_CASE("only all-office is safe") {
  for (auto range : {TimeRange::analysis_default(), TimeRange::live_default()}) {
    const auto safe = safe_profiles(range);
    REQUIRE(safe.size() == 1);
    CHECK(safe[0] == StrategyProfile::symmetric(Strategy::all_office(range)));
    CHECK(is_safe(safe[0], range));
    CHECK_FALSE(is_safe(StrategyProfile::symmetric(
                            Strategy::with_cutoff(range, ArrivalTime::clock(8, 55))),
                        range));
  }
}

TEST_CASE("classification and packing") {
  const auto range = TimeRange::analysis_default();
  const auto office = classify(Strategy::all_office(range));
  CHECK(office.is_cutoff);
  CHECK(office.all_office(range));
  const auto cut = classify(Strategy::with_cutoff(range, ArrivalTime::clock(8, 55)));
  CHECK(cut.is_cutoff);
  CHECK(cut.cutoff == ArrivalTime::clock(8, 55));
  using enum Action;
  CHECK_FALSE(classify(Strategy(range, {kCanteen, kOffice, kCanteen, kOffice, kOffice, kOffice, kOffice}))
                  .is_cutoff);

  std::mt19937_64 rng(8);
  for (int i = 0; i < 100; ++i) {
    const auto mask = static_cast<std::uint32_t>(rng() & ((1u << 14) - 1));
    const ProfileBits bits{mask, (1u << 14) - 1};
    CHECK(pack(unpack(range, bits)) == bits);
  }
  CHECK_THROWS_AS(Strategy(range, {kOffice}), ConfigError);
}

TEST_CASE("enumeration refuses oversized ranges") {
  const TimeRange big{ArrivalTime::clock(8, 0), ArrivalTime::clock(10, 0)};
  CHECK_THROWS_AS(pareto_front(big, ConcreteUtility{}), CapacityError);
  CHECK_THROWS_AS(safe_profiles(big), CapacityError);
}
