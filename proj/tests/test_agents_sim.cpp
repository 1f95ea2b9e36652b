#include "doctest.h"

#include <cmath>
#include <random>

#include "canteen/agents_sim.hpp"
#include "oracles.hpp"

using namespace canteen;

namespace {

constexpr auto C = Action::kCanteen;
constexpr auto O = Action::kOffice;

}  // namespace

TEST_CASE("policy grammar") {
  for (const char* text : {"all_office", "before9", "cutoff:8:45", "mixed:8:50:0.5",
                           "logistic:12.5:-0.25"}) {
    CHECK(Policy::parse(text).str() == text);
  }
  CHECK(Policy::parse("cutoff:8:45").threshold == ArrivalTime::clock(8, 45));
  CHECK(Policy::parse("mixed:8:50:0.25").canteen_probability == 0.25);
  for (const char* bad : {"", "office", "cutoff", "cutoff:8", "cutoff:8:5x", "mixed:8:50",
                          "mixed:8:50:1.5", "mixed:8:50:x", "logistic:1", "logistic:a:b",
                          "before9:1", "all_office:"}) {
    CHECK_THROWS_AS(Policy::parse(bad), ConfigError);
  }
}

TEST_CASE("deterministic policies") {
  std::mt19937_64 rng(1);
  auto act = [&](const Policy& p, int h, int m) {
    return decide(p, ArrivalTime::clock(h, m), rng).action;
  };
  CHECK(act(Policy::all_office(), 8, 0) == O);
  CHECK(act(Policy::canteen_before_nine(), 8, 50) == C);
  CHECK(act(Policy::canteen_before_nine(), 9, 0) == O);
  CHECK(act(Policy::cutoff(ArrivalTime::clock(8, 35)), 8, 30) == C);
  CHECK(act(Policy::cutoff(ArrivalTime::clock(8, 35)), 8, 40) == O);
  // Even a late cut-off cannot send anyone to the canteen at 9:00.
  CHECK(act(Policy::cutoff(ArrivalTime::clock(9, 30)), 9, 10) == O);
  auto reckless = Policy::cutoff(ArrivalTime::clock(9, 30));
  reckless.guard_forbidden = false;
  CHECK(act(reckless, 9, 10) == C);
  CHECK(decide(Policy::all_office(), kNineAm, rng).certainty == CertaintyLevel::kVeryCertain);
}

TEST_CASE("mixed guess randomizes only at the guess time") {
  std::mt19937_64 rng(2);
  const auto p = Policy::mixed_guess(ArrivalTime::clock(8, 50), 0.3);
  int canteen = 0;
  const int n = 20000;
  for (int i = 0; i < n; ++i) canteen += decide(p, ArrivalTime::clock(8, 50), rng).action == C;
  CHECK(std::abs(canteen / double(n) - 0.3) < 0.02);
  for (int i = 0; i < 100; ++i) {
    CHECK(decide(p, ArrivalTime::clock(8, 40), rng).action == C);
    CHECK(decide(p, kNineAm, rng).action == O);
  }
}

TEST_CASE("logistic policy follows its curve") {
  std::mt19937_64 rng(3);
  const auto p = Policy::logistic(10.0, -0.2);  // midpoint at 8:50
  for (int m : {30, 40, 50}) {
    int canteen = 0;
    const int n = 20000;
    for (int i = 0; i < n; ++i) canteen += decide(p, ArrivalTime(m), rng).action == C;
    const double want = 1.0 / (1.0 + std::exp(-(10.0 - 0.2 * m)));
    CHECK(std::abs(canteen / double(n) - want) < 0.02);
  }
}

TEST_CASE("stylized certainty") {
  const auto rule = CertaintyRule::stylized();
  CHECK(rule(ArrivalTime::clock(8, 20), C) == CertaintyLevel::kVeryCertain);
  CHECK(rule(ArrivalTime::clock(8, 40), C) == CertaintyLevel::kQuiteCertain);
  CHECK(rule(ArrivalTime::clock(8, 50), C) == CertaintyLevel::kSomewhatCertain);
  CHECK(rule(ArrivalTime::clock(8, 50), O) == CertaintyLevel::kSomewhatCertain);
  CHECK(rule(ArrivalTime::clock(9, 10), O) == CertaintyLevel::kVeryCertain);
  CHECK(rule(ArrivalTime::clock(8, 40), O) == CertaintyLevel::kSlightlyCertain);
  CHECK(CertaintyRule::constant(CertaintyLevel::kQuiteCertain)(kNineAm, C) ==
        CertaintyLevel::kQuiteCertain);
}

TEST_CASE("outcome classification") {
  const ArrivalPair early{ArrivalTime::clock(8, 30), ArrivalTime::clock(8, 40)};
  const ArrivalPair late{ArrivalTime::clock(8, 50), kNineAm};
  CHECK(classify_outcome(early, C, C) == Outcome::kCanteenCoordination);
  CHECK(classify_outcome(early, O, O) == Outcome::kOfficeCoordination);
  CHECK(classify_outcome(early, C, O) == Outcome::kMiscoordination);
  CHECK(classify_outcome(late, C, C) == Outcome::kMiscoordination);
}

TEST_CASE("all-office keeps 9.80 after ten rounds") {
  SessionConfig cfg;
  std::mt19937_64 rng(4);
  const auto log = run_session(cfg, Policy::all_office(), Policy::all_office(), rng);
  CHECK(log.rounds.size() == 10);
  CHECK_FALSE(log.ruined);
  const double want = 10.0 + 10 * 2 * std::log(0.99);
  CHECK(log.final_bankroll[0] == doctest::Approx(want));
  CHECK(std::abs(log.final_bankroll[0] - 9.80) < 0.01);
}

TEST_CASE("sessions stop at ruin and replay from the seed") {
  SessionConfig cfg;
  for (std::uint64_t seed = 0; seed < 50; ++seed) {
    std::mt19937_64 a(seed), b(seed);
    const auto x = run_session(cfg, Policy::canteen_before_nine(), Policy::all_office(), a);
    const auto y = run_session(cfg, Policy::canteen_before_nine(), Policy::all_office(), b);
    CHECK(x == y);
    const bool broke = x.final_bankroll[0] <= 0 || x.final_bankroll[1] <= 0;
    CHECK(x.ruined == broke);
    if (!x.ruined) CHECK(x.rounds.size() == 10);
    for (std::size_t i = 0; i + 1 < x.rounds.size(); ++i) {
      CHECK(x.rounds[i].bankroll_after[0] > 0);
      CHECK(x.rounds[i].bankroll_after[1] > 0);
    }
  }
}

TEST_CASE("adaptation hook sees every round") {
  SessionConfig cfg;
  std::mt19937_64 rng(5);
  int calls = 0;
  const auto log = run_session(cfg, Policy::all_office(), Policy::all_office(), rng,
                               [&](int seat, Policy& p, const RoundRecord&) {
                                 ++calls;
                                 CHECK((seat == 0 || seat == 1));
                                 p = Policy::all_office();
                               });
  CHECK(calls == 2 * static_cast<int>(log.rounds.size()));
}

TEST_CASE("session config validation") {
  SessionConfig cfg;
  cfg.max_rounds = 0;
  CHECK_THROWS_AS(cfg.validate(), ConfigError);
  cfg = SessionConfig::classroom();
  CHECK(cfg.max_rounds == 30);
  CHECK(cfg.endowment == 30.0);
  cfg.endowment = 0;
  CHECK_THROWS_AS(cfg.validate(), ConfigError);
}

TEST_CASE("monte carlo bookkeeping") {
  SessionConfig cfg;
  const auto p = Policy::mixed_guess(ArrivalTime::clock(8, 50), 0.5);
  const auto a = run_monte_carlo(cfg, p, p, 300);
  const auto b = run_monte_carlo(cfg, p, p, 300);
  CHECK(summary_csv(a) == summary_csv(b));
  CHECK(pair_outcomes_csv(a) == pair_outcomes_csv(b));
  CHECK(a.counted_rounds() == a.total_rounds);
  CHECK(a.per_pair.size() == 7);
  CHECK(a.rounds_played_avg <= 10.0);
  CHECK(a.payoff_retained >= 0.0);
  CHECK(summary_csv(a).rfind("N,R,rounds_avg,ruin_pct,payoff_pct,avg_penalty\n600,10,", 0) == 0);

  cfg.seed = 2;
  CHECK(summary_csv(run_monte_carlo(cfg, p, p, 300)) != summary_csv(a));

  const auto office = run_monte_carlo(SessionConfig{}, Policy::all_office(), Policy::all_office(), 50);
  CHECK(office.ruin_rate == 0.0);
  CHECK(office.avg_penalty_per_round == doctest::Approx(-2 * std::log(0.99)));
  CHECK(office.payoff_retained == doctest::Approx((10 + 20 * std::log(0.99)) / 10));
}

TEST_CASE("mixed guess self-play miscoordinates only around the guess") {
  SessionConfig cfg;
  cfg.seed = 17;
  const auto p = Policy::mixed_guess(ArrivalTime::clock(8, 50), 0.5);
  const auto stats = run_monte_carlo(cfg, p, p, 2000);
  for (const auto& [combo, counts] : stats.per_pair) {
    if (combo.late <= ArrivalTime::clock(8, 40)) CHECK(counts.miscoordinated == 0);
    if (combo.early == ArrivalTime::clock(9, 0)) CHECK(counts.miscoordinated == 0);
  }
}

TEST_CASE("logit fit recovers a known curve") {
  std::mt19937_64 rng(6);
  const double alpha = 12.0, beta = -0.24;  // midpoint 50 minutes
  std::vector<std::pair<ArrivalTime, Action>> data;
  std::uniform_int_distribution<int> slot(0, 7);
  for (int i = 0; i < 20000; ++i) {
    const ArrivalTime t(10 * slot(rng));
    std::bernoulli_distribution coin(1.0 / (1.0 + std::exp(-(alpha + beta * t.minutes()))));
    data.emplace_back(t, coin(rng) ? C : O);
  }
  const auto fit = fit_logit(data);
  CHECK(fit.converged);
  CHECK(fit.alpha == doctest::Approx(alpha).epsilon(0.1));
  CHECK(fit.beta == doctest::Approx(beta).epsilon(0.1));
  REQUIRE(fit.midpoint_minutes.has_value());
  CHECK(*fit.midpoint_minutes == doctest::Approx(-fit.alpha / fit.beta));
  CHECK(std::abs(*fit.midpoint_minutes - 50.0) < 1.0);
}

TEST_CASE("logit fit rejects degenerate data") {
  std::vector<std::pair<ArrivalTime, Action>> separable{
      {ArrivalTime(10), C}, {ArrivalTime(20), C}, {ArrivalTime(60), O}, {ArrivalTime(70), O}};
  CHECK_THROWS_AS(fit_logit(separable), FitError);
  std::vector<std::pair<ArrivalTime, Action>> one_class{{ArrivalTime(10), C}, {ArrivalTime(20), C}};
  CHECK_THROWS_AS(fit_logit(one_class), FitError);
  std::vector<std::pair<ArrivalTime, Action>> one_time{{ArrivalTime(10), C}, {ArrivalTime(10), O}};
  CHECK_THROWS_AS(fit_logit(one_time), FitError);
  CHECK_THROWS_AS(fit_logit({}), FitError);
}

TEST_CASE("clock strings for fractional minutes") {
  CHECK(clock_string(50.0) == "8:50");
  CHECK(clock_string(48.4) == "8:48");
  CHECK(clock_string(51.6) == "8:52");
}
