#include "canteen/agents_sim.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <sstream>

namespace canteen {

CertaintyLevel CertaintyRule::operator()(ArrivalTime t, Action a) const {
  if (mode == Mode::kConstant) return level;
  const auto m = t.minutes();
  if (a == Action::kCanteen) {
    if (t >= kNineAm) return CertaintyLevel::kVeryUncertain;
    if (m <= 30) return CertaintyLevel::kVeryCertain;
    if (m == 40) return CertaintyLevel::kQuiteCertain;
    return CertaintyLevel::kSomewhatCertain;
  }
  if (t >= kNineAm) return CertaintyLevel::kVeryCertain;
  if (m <= 30) return CertaintyLevel::kQuiteCertain;
  if (m == 40) return CertaintyLevel::kSlightlyCertain;
  return CertaintyLevel::kSomewhatCertain;
}

Policy Policy::all_office() { return {}; }

Policy Policy::canteen_before_nine() {
  Policy p;
  p.kind = Kind::kCanteenBeforeNine;
  p.threshold = kNineAm;
  return p;
}

Policy Policy::cutoff(ArrivalTime t) {
  Policy p;
  p.kind = Kind::kCutoff;
  p.threshold = t;
  return p;
}

Policy Policy::mixed_guess(ArrivalTime guess_time, double q) {
  if (!(q >= 0.0 && q <= 1.0)) {
    throw ConfigError("mixed policy probability must lie in [0, 1]");
  }
  Policy p;
  p.kind = Kind::kMixedGuess;
  p.threshold = guess_time;
  p.canteen_probability = q;
  p.certainty = CertaintyRule::stylized();
  return p;
}

Policy Policy::logistic(double alpha, double beta) {
  Policy p;
  p.kind = Kind::kLogistic;
  p.alpha = alpha;
  p.beta = beta;
  p.certainty = CertaintyRule::stylized();
  return p;
}

namespace {

std::vector<std::string_view> split(std::string_view text, char sep) {
  std::vector<std::string_view> parts;
  std::size_t start = 0;
  for (;;) {
    const auto pos = text.find(sep, start);
    parts.push_back(text.substr(start, pos - start));
    if (pos == std::string_view::npos) break;
    start = pos + 1;
  }
  return parts;
}

double parse_number(std::string_view text, std::string_view spec) {
  double value = 0.0;
  auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), value);
  if (text.empty() || ec != std::errc() || ptr != text.data() + text.size()) {
    throw ConfigError("malformed number '" + std::string(text) +
                      "' in policy '" + std::string(spec) + "'");
  }
  return value;
}

ArrivalTime parse_clock(std::string_view h, std::string_view m) {
  return ArrivalTime::parse(std::string(h) + ":" + std::string(m));
}

std::string format_number(double v) {
  std::ostringstream out;
  out << v;
  return out.str();
}

}  // namespace

Policy Policy::parse(std::string_view text) {
  const auto parts = split(text, ':');
  const auto& name = parts.front();
  if (name == "all_office" && parts.size() == 1) return all_office();
  if (name == "before9" && parts.size() == 1) return canteen_before_nine();
  if (name == "cutoff" && parts.size() == 3) {
    return cutoff(parse_clock(parts[1], parts[2]));
  }
  if (name == "mixed" && parts.size() == 4) {
    return mixed_guess(parse_clock(parts[1], parts[2]),
                       parse_number(parts[3], text));
  }
  if (name == "logistic" && parts.size() == 3) {
    return logistic(parse_number(parts[1], text), parse_number(parts[2], text));
  }
  throw ConfigError("malformed policy '" + std::string(text) +
                    "'; expected all_office | before9 | cutoff:H:MM | "
                    "mixed:H:MM:q | logistic:a:b");
}

std::string Policy::str() const {
  switch (kind) {
    case Kind::kAllOffice: return "all_office";
    case Kind::kCanteenBeforeNine: return "before9";
    case Kind::kCutoff: return "cutoff:" + threshold.str();
    case Kind::kMixedGuess:
      return "mixed:" + threshold.str() + ":" + format_number(canteen_probability);
    case Kind::kLogistic:
      return "logistic:" + format_number(alpha) + ":" + format_number(beta);
  }
  return "all_office";
}

Decision decide(const Policy& policy, ArrivalTime t, std::mt19937_64& rng) {
  Action action = Action::kOffice;
  switch (policy.kind) {
    case Policy::Kind::kAllOffice:
      break;
    case Policy::Kind::kCanteenBeforeNine:
    case Policy::Kind::kCutoff:
      action = t < policy.threshold ? Action::kCanteen : Action::kOffice;
      break;
    case Policy::Kind::kMixedGuess:
      if (t < policy.threshold) {
        action = Action::kCanteen;
      } else if (t == policy.threshold) {
        std::bernoulli_distribution coin(policy.canteen_probability);
        action = coin(rng) ? Action::kCanteen : Action::kOffice;
      }
      break;
    case Policy::Kind::kLogistic: {
      const double mu = policy.alpha + policy.beta * t.minutes();
      const double p = std::clamp(1.0 / (1.0 + std::exp(-mu)), 0.0, 1.0);
      std::bernoulli_distribution coin(p);
      action = coin(rng) ? Action::kCanteen : Action::kOffice;
      break;
    }
  }
  if (policy.guard_forbidden && t >= kNineAm) action = Action::kOffice;
  return {action, policy.certainty(t, action)};
}

SessionConfig SessionConfig::classroom() {
  SessionConfig cfg;
  cfg.max_rounds = 30;
  cfg.endowment = 30.0;
  return cfg;
}

void SessionConfig::validate() const {
  if (max_rounds < 1) throw ConfigError("max_rounds must be at least 1");
  if (!(endowment > 0.0)) throw ConfigError("endowment must be positive");
}

Outcome classify_outcome(const ArrivalPair& t, Action a1, Action a2) {
  if (is_forbidden(t.t1, a1) || is_forbidden(t.t2, a2) || a1 != a2) {
    return Outcome::kMiscoordination;
  }
  return a1 == Action::kCanteen ? Outcome::kCanteenCoordination
                                : Outcome::kOfficeCoordination;
}

SessionLog run_session(const SessionConfig& cfg, Policy p1, Policy p2,
                       std::mt19937_64& rng, const AdaptationHook& hook) {
  cfg.validate();
  SessionLog log;
  std::array<double, 2> bankroll{cfg.endowment, cfg.endowment};
  std::array<Policy*, 2> policies{&p1, &p2};
  for (int round = 1; round <= cfg.max_rounds; ++round) {
    RoundRecord rec;
    rec.round = round;
    rec.arrivals = deal(cfg.range, rng);
    for (int seat = 0; seat < 2; ++seat) {
      const auto d = decide(*policies[seat], rec.arrivals.of(seat + 1), rng);
      rec.actions[seat] = d.action;
      rec.certainty[seat] = d.certainty;
    }
    bool ruined = false;
    for (int seat = 0; seat < 2; ++seat) {
      const int other = 1 - seat;
      rec.utility[seat] =
          utility(rec.certainty[seat], rec.actions[seat], rec.actions[other],
                  rec.arrivals.of(seat + 1), rec.arrivals.of(other + 1));
      const auto next = apply_round(bankroll[seat], rec.utility[seat]);
      bankroll[seat] = next.balance;
      rec.bankroll_after[seat] = next.balance;
      ruined |= next.ruined;
    }
    log.rounds.push_back(rec);
    if (hook) {
      for (int seat = 0; seat < 2; ++seat) hook(seat, *policies[seat], rec);
    }
    if (ruined) {
      log.ruined = true;
      break;
    }
  }
  log.final_bankroll = bankroll;
  return log;
}

ArrivalCombo ArrivalCombo::of(const ArrivalPair& t) {
  return t.t1 < t.t2 ? ArrivalCombo{t.t1, t.t2} : ArrivalCombo{t.t2, t.t1};
}

std::string ArrivalCombo::str() const { return early.str() + "/" + late.str(); }

long SimStats::counted_rounds() const {
  long n = 0;
  for (const auto& [combo, counts] : per_pair) n += counts.total();
  return n;
}

SimStats run_monte_carlo(const SessionConfig& cfg, const Policy& p1,
                         const Policy& p2, long n_sessions) {
  if (n_sessions < 1) throw ConfigError("need at least one session");
  cfg.validate();
  SimStats stats;
  stats.sessions = n_sessions;
  stats.max_rounds = cfg.max_rounds;
  for (const auto& t : arrival_pairs(cfg.range)) {
    stats.per_pair.try_emplace(ArrivalCombo::of(t));
  }
  long ruined = 0;
  double retained = 0.0;
  double penalty = 0.0;
  for (long i = 0; i < n_sessions; ++i) {
    std::seed_seq seq{static_cast<std::uint32_t>(cfg.seed),
                      static_cast<std::uint32_t>(cfg.seed >> 32),
                      static_cast<std::uint32_t>(i),
                      static_cast<std::uint32_t>(static_cast<std::uint64_t>(i) >> 32)};
    std::mt19937_64 rng(seq);
    const auto log = run_session(cfg, p1, p2, rng);
    stats.total_rounds += static_cast<long>(log.rounds.size());
    ruined += log.ruined ? 1 : 0;
    for (const auto& r : log.rounds) {
      auto& counts = stats.per_pair[ArrivalCombo::of(r.arrivals)];
      switch (classify_outcome(r.arrivals, r.actions[0], r.actions[1])) {
        case Outcome::kCanteenCoordination: ++counts.canteen; break;
        case Outcome::kOfficeCoordination: ++counts.office; break;
        case Outcome::kMiscoordination: ++counts.miscoordinated; break;
      }
      penalty -= r.utility[0] + r.utility[1];
    }
    for (double b : log.final_bankroll) {
      retained += std::max(b, 0.0) / cfg.endowment;
    }
  }
  const auto n = static_cast<double>(n_sessions);
  stats.rounds_played_avg = static_cast<double>(stats.total_rounds) / n;
  stats.ruin_rate = static_cast<double>(ruined) / n;
  stats.payoff_retained = retained / (2.0 * n);
  stats.avg_penalty_per_round =
      stats.total_rounds == 0 ? 0.0
                              : penalty / (2.0 * static_cast<double>(stats.total_rounds));
  return stats;
}

std::string summary_csv(const SimStats& stats) {
  std::ostringstream out;
  out.setf(std::ios::fixed);
  out << "N,R,rounds_avg,ruin_pct,payoff_pct,avg_penalty\n";
  out << 2 * stats.sessions << ',' << stats.max_rounds << ',';
  out.precision(2);
  out << stats.rounds_played_avg << ',' << 100.0 * stats.ruin_rate << ','
      << 100.0 * stats.payoff_retained << ',';
  out.precision(4);
  out << stats.avg_penalty_per_round << '\n';
  return out.str();
}

std::string pair_outcomes_csv(const SimStats& stats) {
  std::ostringstream out;
  out.setf(std::ios::fixed);
  out.precision(4);
  out << "pair,canteen_coordination,office_coordination,miscoordination,"
         "miscoordination_rate\n";
  for (const auto& [combo, c] : stats.per_pair) {
    out << combo.str() << ',' << c.canteen << ',' << c.office << ','
        << c.miscoordinated << ',' << c.miscoordination_rate() << '\n';
  }
  return out.str();
}

namespace {

double log_likelihood(const std::vector<double>& x, const std::vector<int>& y,
                      double a, double b) {
  double ll = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double eta = a + b * x[i];
    // log(1 + e^eta) without overflow
    const double softplus = eta > 0 ? eta + std::log1p(std::exp(-eta))
                                    : std::log1p(std::exp(eta));
    ll += y[i] * eta - softplus;
  }
  return ll;
}

}  // namespace

LogitFit fit_logit(const std::vector<std::pair<ArrivalTime, Action>>& data) {
  std::vector<double> x;
  std::vector<int> y;
  double lo_yes = INFINITY, hi_yes = -INFINITY, lo_no = INFINITY, hi_no = -INFINITY;
  for (const auto& [t, a] : data) {
    const double m = t.minutes();
    x.push_back(m);
    const int canteen = a == Action::kCanteen ? 1 : 0;
    y.push_back(canteen);
    if (canteen) {
      lo_yes = std::min(lo_yes, m);
      hi_yes = std::max(hi_yes, m);
    } else {
      lo_no = std::min(lo_no, m);
      hi_no = std::max(hi_no, m);
    }
  }
  if (lo_yes == INFINITY || lo_no == INFINITY) {
    throw FitError("logit fit needs both canteen and office observations");
  }
  if (std::min(lo_yes, lo_no) == std::max(hi_yes, hi_no)) {
    throw FitError("logit fit needs at least two distinct arrival times");
  }
  // Complete or quasi-complete separation: no finite maximum exists.
  if (hi_yes <= lo_no || hi_no <= lo_yes) {
    throw FitError("canteen and office choices are separated by arrival time; "
                   "no finite maximum-likelihood estimate");
  }

  // Fit on centred time for conditioning, then shift the intercept back.
  double mean = 0.0;
  for (double v : x) mean += v;
  mean /= static_cast<double>(x.size());
  for (double& v : x) v -= mean;

  const auto n = static_cast<double>(x.size());
  double a = 0.0;
  double b = 0.0;
  LogitFit fit;
  double ll = log_likelihood(x, y, a, b);
  for (fit.iterations = 0; fit.iterations < 100; ++fit.iterations) {
    double ga = 0, gb = 0, haa = 0, hab = 0, hbb = 0;
    for (std::size_t i = 0; i < x.size(); ++i) {
      const double p = 1.0 / (1.0 + std::exp(-(a + b * x[i])));
      const double r = y[i] - p;
      const double w = p * (1.0 - p);
      ga += r;
      gb += r * x[i];
      haa += w;
      hab += w * x[i];
      hbb += w * x[i] * x[i];
    }
    ga /= n;
    gb /= n;
    if (std::hypot(ga, gb) < 1e-8) {
      fit.converged = true;
      break;
    }
    haa /= n;
    hab /= n;
    hbb /= n;
    const double det = haa * hbb - hab * hab;
    if (!(det > 0.0)) throw FitError("singular information matrix in logit fit");
    double da = (hbb * ga - hab * gb) / det;
    double db = (haa * gb - hab * ga) / det;
    // Step halving keeps the log-likelihood from decreasing.
    double step = 1.0;
    for (int k = 0; k < 30; ++k) {
      const double cand = log_likelihood(x, y, a + step * da, b + step * db);
      if (cand >= ll) {
        ll = cand;
        break;
      }
      step *= 0.5;
    }
    a += step * da;
    b += step * db;
  }
  fit.beta = b;
  fit.alpha = a - b * mean;
  if (std::abs(fit.beta) > 1e-6) fit.midpoint_minutes = -fit.alpha / fit.beta;
  return fit;
}

std::string clock_string(double minutes_after_8am) {
  const long total = std::lround(8 * 60 + minutes_after_8am);
  std::ostringstream out;
  out << total / 60 << ':' << (total % 60 < 10 ? "0" : "") << total % 60;
  return out.str();
}

}  // namespace canteen
