#include "canteen/session_service.hpp"

#include <algorithm>
#include <cstdio>
#include <set>
#include <sstream>
#include <tuple>

namespace canteen {

using nlohmann::json;
using nlohmann::ordered_json;

std::string_view to_string(Phase phase) {
  switch (phase) {
    case Phase::kWaitingForPlayers: return "waiting_for_players";
    case Phase::kRoundDeciding: return "round_deciding";
    case Phase::kRoundCertainty: return "round_certainty";
    case Phase::kRoundResults: return "round_results";
    case Phase::kFinished: return "finished";
  }
  return "finished";
}

std::string_view to_string(FinishReason reason) {
  switch (reason) {
    case FinishReason::kNone: return "none";
    case FinishReason::kRuin: return "ruin";
    case FinishReason::kCompleted: return "completed";
  }
  return "none";
}

std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::kWrongPhase: return "wrong_phase";
    case ErrorCode::kDuplicateSubmission: return "duplicate_submission";
    case ErrorCode::kUnknownSeat: return "unknown_seat";
    case ErrorCode::kSeatTaken: return "seat_taken";
    case ErrorCode::kBadToken: return "bad_token";
    case ErrorCode::kUnknownSession: return "unknown_session";
    case ErrorCode::kInvalidMessage: return "invalid_message";
    case ErrorCode::kInvalidConfig: return "invalid_config";
  }
  return "invalid_message";
}

json error_message(ErrorCode code, const std::string& detail) {
  return {{"type", "error"}, {"code", to_string(code)}, {"message", detail}};
}

namespace {

const std::set<std::string> kFaultOptions = {"My fault", "Other's fault",
                                             "Other reason"};
const std::set<std::string> kSimpleOptions = {"Yes", "No", "Don't know"};

bool valid_cutoff_answer(const std::string& answer) {
  if (answer == "I don't know" || answer == "There is no such time") return true;
  try {
    return TimeRange::live_default().contains(ArrivalTime::parse(answer));
  } catch (const ConfigError&) {
    return false;
  }
}

std::optional<std::string> optional_string(const json& msg, const char* key) {
  if (!msg.contains(key) || msg[key].is_null()) return std::nullopt;
  if (!msg[key].is_string()) {
    throw ProtocolError(ErrorCode::kInvalidMessage,
                        std::string(key) + " must be a string");
  }
  return msg[key].get<std::string>();
}

}  // namespace

PostGameAnswers PostGameAnswers::from_json(const json& msg) {
  PostGameAnswers a{optional_string(msg, "fault"), optional_string(msg, "strategy"),
                    optional_string(msg, "cutoff"), optional_string(msg, "simple")};
  if (a.fault && !kFaultOptions.count(*a.fault)) {
    throw ProtocolError(ErrorCode::kInvalidMessage, "unknown fault answer");
  }
  if (a.cutoff && !valid_cutoff_answer(*a.cutoff)) {
    throw ProtocolError(ErrorCode::kInvalidMessage, "unknown cut-off answer");
  }
  if (a.simple && !kSimpleOptions.count(*a.simple)) {
    throw ProtocolError(ErrorCode::kInvalidMessage,
                        "unknown common-knowledge answer");
  }
  return a;
}

Session::Session(std::string id, SessionConfig cfg, SessionTimeouts timeouts)
    : id_(std::move(id)), cfg_(std::move(cfg)), timeouts_(timeouts) {
  try {
    cfg_.validate();
  } catch (const ConfigError& e) {
    throw ProtocolError(ErrorCode::kInvalidConfig, e.what());
  }
  std::seed_seq nature{static_cast<std::uint32_t>(cfg_.seed),
                       static_cast<std::uint32_t>(cfg_.seed >> 32), 0u};
  std::seed_seq bots{static_cast<std::uint32_t>(cfg_.seed),
                     static_cast<std::uint32_t>(cfg_.seed >> 32), 1u};
  nature_rng_.seed(nature);
  bot_rng_.seed(bots);
  for (auto& s : seats_) s.bankroll = cfg_.endowment;
}

Session::SeatSlot& Session::slot(int seat) {
  if (seat != 1 && seat != 2) {
    throw ProtocolError(ErrorCode::kUnknownSeat,
                        "seat must be 1 or 2, got " + std::to_string(seat));
  }
  return seats_[static_cast<std::size_t>(seat - 1)];
}

const Session::SeatSlot& Session::slot(int seat) const {
  return const_cast<Session*>(this)->slot(seat);
}

void Session::require_phase(Phase expected, std::string_view what) const {
  if (phase_ != expected) {
    throw ProtocolError(ErrorCode::kWrongPhase,
                        std::string(what) + " not accepted during " +
                            std::string(to_string(phase_)));
  }
}

void Session::join(int seat, Occupant occupant, Millis now) {
  advance(now);
  auto& s = slot(seat);
  if (!occupant.is_bot() && occupant.token.empty()) {
    throw ProtocolError(ErrorCode::kBadToken, "human seats need a token");
  }
  if (s.occupant) {
    if (!occupant.is_bot() && !s.occupant->is_bot() &&
        s.occupant->token == occupant.token) {
      s.connected = true;  // reconnect
      return;
    }
    throw ProtocolError(ErrorCode::kSeatTaken,
                        "seat " + std::to_string(seat) + " is taken");
  }
  if (!occupant.is_bot() && seat_of(occupant.token) != 0) {
    throw ProtocolError(ErrorCode::kBadToken, "token already holds a seat");
  }
  s.connected = !occupant.is_bot();
  s.occupant = std::move(occupant);
  if (phase_ == Phase::kWaitingForPlayers && seats_[0].occupant &&
      seats_[1].occupant) {
    deal_round(now);
  }
}

void Session::disconnect(int seat) { slot(seat).connected = false; }

void Session::submit_decision(int seat, Action action, Millis now) {
  advance(now);
  auto& s = slot(seat);
  if (!s.occupant || s.occupant->is_bot()) {
    throw ProtocolError(ErrorCode::kUnknownSeat, "seat has no human occupant");
  }
  require_phase(Phase::kRoundDeciding, "decision");
  if (s.decision) {
    throw ProtocolError(ErrorCode::kDuplicateSubmission,
                        "decision already submitted this round");
  }
  s.decision = action;
  after_decision(now);
}

void Session::submit_certainty(int seat, CertaintyLevel level, Millis now) {
  advance(now);
  auto& s = slot(seat);
  if (!s.occupant || s.occupant->is_bot()) {
    throw ProtocolError(ErrorCode::kUnknownSeat, "seat has no human occupant");
  }
  require_phase(Phase::kRoundCertainty, "certainty");
  if (s.certainty) {
    throw ProtocolError(ErrorCode::kDuplicateSubmission,
                        "certainty already submitted this round");
  }
  s.certainty = level;
  after_certainty(now);
}

void Session::submit_postgame(int seat, PostGameAnswers answers) {
  auto& s = slot(seat);
  if (!s.occupant || s.occupant->is_bot()) {
    throw ProtocolError(ErrorCode::kUnknownSeat, "seat has no human occupant");
  }
  require_phase(Phase::kFinished, "post-game answers");
  if (s.postgame) {
    throw ProtocolError(ErrorCode::kDuplicateSubmission,
                        "post-game answers already stored");
  }
  s.postgame = std::move(answers);
}

void Session::advance(Millis now) {
  for (;;) {
    if (phase_ == Phase::kWaitingForPlayers || phase_ == Phase::kFinished ||
        now < deadline_) {
      return;
    }
    // Timed transitions happen at the deadline itself, so a long gap
    // replays exactly as if the timer had fired on time.
    const Millis at = deadline_;
    switch (phase_) {
      case Phase::kRoundDeciding:
        for (auto& s : seats_) {
          if (!s.decision) {
            s.decision = Action::kOffice;
            s.certainty = CertaintyLevel::kVeryUncertain;
          }
        }
        after_decision(at);
        break;
      case Phase::kRoundCertainty:
        for (auto& s : seats_) {
          if (!s.certainty) s.certainty = CertaintyLevel::kVeryUncertain;
        }
        after_certainty(at);
        break;
      case Phase::kRoundResults: {
        const bool ruined = std::any_of(seats_.begin(), seats_.end(),
                                        [](const auto& s) { return s.bankroll <= 0.0; });
        if (ruined) {
          finish(FinishReason::kRuin);
        } else if (round_index_ >= cfg_.max_rounds) {
          finish(FinishReason::kCompleted);
        } else {
          deal_round(at);
        }
        break;
      }
      default:
        return;
    }
  }
}

void Session::deal_round(Millis now) {
  ++round_index_;
  arrivals_ = deal(cfg_.range, nature_rng_);
  phase_ = Phase::kRoundDeciding;
  deadline_ = now + timeouts_.decision;
  for (int seat = 1; seat <= 2; ++seat) {
    auto& s = slot(seat);
    s.decision.reset();
    s.certainty.reset();
    const auto arrival = arrivals_.of(seat);
    if (s.occupant->is_bot()) {
      const auto d = decide(*s.occupant->bot, arrival, bot_rng_);
      s.decision = d.action;
      s.certainty = d.certainty;
    }
    s.outbox.push_back({{"type", "round_start"},
                        {"round", round_index_},
                        {"your_arrival", arrival.str()},
                        {"deadline_ms", timeouts_.decision}});
  }
  after_decision(now);
}

void Session::after_decision(Millis now) {
  if (phase_ != Phase::kRoundDeciding) return;
  if (!seats_[0].decision || !seats_[1].decision) return;
  phase_ = Phase::kRoundCertainty;
  deadline_ = now + timeouts_.certainty;
  after_certainty(now);
}

void Session::after_certainty(Millis now) {
  if (phase_ != Phase::kRoundCertainty) return;
  if (!seats_[0].certainty || !seats_[1].certainty) return;
  score_round(now);
}

void Session::score_round(Millis now) {
  RoundRecord rec;
  rec.round = round_index_;
  rec.arrivals = arrivals_;
  for (int i = 0; i < 2; ++i) {
    rec.actions[i] = *seats_[i].decision;
    rec.certainty[i] = *seats_[i].certainty;
  }
  for (int i = 0; i < 2; ++i) {
    const int other = 1 - i;
    rec.utility[i] = utility(rec.certainty[i], rec.actions[i], rec.actions[other],
                             arrivals_.of(i + 1), arrivals_.of(other + 1));
    seats_[i].bankroll = apply_round(seats_[i].bankroll, rec.utility[i]).balance;
    rec.bankroll_after[i] = seats_[i].bankroll;
  }
  rounds_.push_back(rec);

  for (int i = 0; i < 2; ++i) {
    // Only the seat's own certainty is ever sent to it.
    seats_[i].outbox.push_back(
        {{"type", "round_result"},
         {"round", rec.round},
         {"arrivals", {rec.arrivals.t1.str(), rec.arrivals.t2.str()}},
         {"actions", {to_string(rec.actions[0]), to_string(rec.actions[1])}},
         {"your_certainty", to_string(rec.certainty[i])},
         {"your_penalty", round_cents(rec.utility[i])},
         {"bankrolls",
          {round_cents(rec.bankroll_after[0]), round_cents(rec.bankroll_after[1])}}});
  }
  phase_ = Phase::kRoundResults;
  deadline_ = now + timeouts_.results;
}

void Session::finish(FinishReason reason) {
  phase_ = Phase::kFinished;
  reason_ = reason;
  deadline_ = 0;
  for (auto& s : seats_) {
    s.outbox.push_back({{"type", "game_over"},
                        {"reason", to_string(reason)},
                        {"final_bonus", round_cents(std::max(s.bankroll, 0.0))}});
  }
}

SessionState Session::state() const {
  SessionState st;
  st.phase = phase_;
  st.round_index = round_index_;
  st.deadline = deadline_;
  st.reason = reason_;
  for (int i = 0; i < 2; ++i) {
    const auto& s = seats_[i];
    auto& v = st.seats[i];
    v.occupied = s.occupant.has_value();
    v.bot = s.occupant && s.occupant->is_bot();
    v.connected = s.connected;
    if (round_index_ > 0) v.arrival = arrivals_.of(i + 1);
    v.decision = s.decision;
    v.certainty = s.certainty;
    v.bankroll = s.bankroll;
  }
  return st;
}

int Session::seat_of(std::string_view token) const {
  if (token.empty()) return 0;
  for (int i = 0; i < 2; ++i) {
    const auto& occ = seats_[i].occupant;
    if (occ && !occ->is_bot() && occ->token == token) return i + 1;
  }
  return 0;
}

const std::vector<json>& Session::outbox(int seat) const { return slot(seat).outbox; }

const std::optional<PostGameAnswers>& Session::postgame(int seat) const {
  return slot(seat).postgame;
}

std::string Session::export_log() const {
  std::string out;
  for (const auto& rec : rounds_) {
    for (int i = 0; i < 2; ++i) {
      ordered_json line;
      line["session"] = id_;
      line["code"] = id_ + "-" + std::to_string(i + 1);
      line["group"] = 1;
      line["id_in_group"] = i + 1;
      line["round"] = rec.round;
      line["arrival"] = rec.arrivals.of(i + 1).str();
      line["choice"] = to_string(rec.actions[i]);
      line["certainty"] = probability(rec.certainty[i]);
      line["bonus"] = round_cents(rec.utility[i]);
      line["payoff"] = round_cents(rec.bankroll_after[i]);
      if (const auto& pg = seats_[i].postgame) {
        if (pg->strategy) line["strategy"] = *pg->strategy;
        if (pg->simple) line["simple"] = *pg->simple;
        if (pg->cutoff) line["cutoff"] = *pg->cutoff;
        if (pg->fault) line["fault"] = *pg->fault;
      }
      line["bonus_exact"] = rec.utility[i];
      line["payoff_exact"] = rec.bankroll_after[i];
      out += line.dump();
      out += '\n';
    }
  }
  return out;
}

std::vector<std::string> replay_log(std::string_view jsonl, double endowment) {
  std::vector<std::string> diffs;
  struct Row {
    std::string code;
    int round;
    ArrivalTime arrival;
    Action choice;
    double certainty;
    double bonus;
    double payoff;
    double bonus_exact;
    double payoff_exact;
  };
  // (session, group, round) -> seat -> row
  std::map<std::tuple<std::string, int, int>, std::map<int, Row>> rounds;
  std::istringstream in{std::string(jsonl)};
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    try {
      const auto j = json::parse(line);
      Row r{j.at("code").get<std::string>(),
            j.at("round").get<int>(),
            ArrivalTime::parse(j.at("arrival").get<std::string>()),
            parse_action(j.at("choice").get<std::string>()),
            j.at("certainty").get<double>(),
            j.at("bonus").get<double>(),
            j.at("payoff").get<double>(),
            j.at("bonus_exact").get<double>(),
            j.at("payoff_exact").get<double>()};
      certainty_from_probability(r.certainty);
      const int seat = j.at("id_in_group").get<int>();
      auto& slot = rounds[{j.at("session").get<std::string>(),
                           j.at("group").get<int>(), r.round}];
      if (!slot.emplace(seat, std::move(r)).second) {
        diffs.push_back("line " + std::to_string(line_no) + ": duplicate record");
      }
    } catch (const std::exception& e) {
      diffs.push_back("line " + std::to_string(line_no) + ": " + e.what());
    }
  }

  std::map<std::string, std::pair<int, double>> balance;  // code -> round, bal
  for (const auto& [key, seats] : rounds) {
    const auto& [session, group, round] = key;
    const std::string where = session + " round " + std::to_string(round);
    if (seats.size() != 2 || !seats.count(1) || !seats.count(2)) {
      diffs.push_back(where + ": expected records for seats 1 and 2");
      continue;
    }
    for (int seat = 1; seat <= 2; ++seat) {
      const auto& me = seats.at(seat);
      const auto& other = seats.at(3 - seat);
      const double u = utility(me.certainty, me.choice, other.choice,
                               me.arrival, other.arrival);
      const std::string who = where + " seat " + std::to_string(seat);
      if (u != me.bonus_exact) {
        diffs.push_back(who + ": bonus_exact " + std::to_string(me.bonus_exact) +
                        " != recomputed " + std::to_string(u));
      }
      if (round_cents(u) != me.bonus) {
        diffs.push_back(who + ": bonus " + std::to_string(me.bonus) +
                        " != recomputed " + std::to_string(round_cents(u)));
      }
      auto [it, fresh] = balance.try_emplace(me.code, 0, endowment);
      if (round != it->second.first + 1) {
        diffs.push_back(who + ": rounds not consecutive");
      }
      const double expected = apply_round(it->second.second, u).balance;
      if (expected != me.payoff_exact) {
        diffs.push_back(who + ": payoff_exact " + std::to_string(me.payoff_exact) +
                        " != replayed " + std::to_string(expected));
      }
      if (round_cents(expected) != me.payoff) {
        diffs.push_back(who + ": payoff " + std::to_string(me.payoff) +
                        " != replayed " + std::to_string(round_cents(expected)));
      }
      it->second = {round, expected};
    }
  }
  return diffs;
}

std::string SessionService::create_session(const SessionConfig& cfg,
                                           const SessionTimeouts& timeouts) {
  std::unique_lock lock(mu_);
  char id[32];
  std::snprintf(id, sizeof id, "s%04llu",
                static_cast<unsigned long long>(next_id_++));
  sessions_.emplace(id, std::make_shared<Entry>(id, cfg, timeouts));
  return id;
}

std::string SessionService::create_session(const json& request, Millis now) {
  SessionConfig cfg;
  SessionTimeouts timeouts;
  std::map<int, Policy> bots;
  try {
    auto tmin = cfg.range.tmin();
    auto tmax = cfg.range.tmax();
    if (request.contains("tmin")) tmin = ArrivalTime::parse(request["tmin"].get<std::string>());
    if (request.contains("tmax")) tmax = ArrivalTime::parse(request["tmax"].get<std::string>());
    cfg.range = TimeRange(tmin, tmax);
    cfg.max_rounds = request.value("rounds", cfg.max_rounds);
    cfg.endowment = request.value("endowment", cfg.endowment);
    cfg.seed = request.value("seed", cfg.seed);
    cfg.validate();
    timeouts.decision = request.value("decision_ms", timeouts.decision);
    timeouts.certainty = request.value("certainty_ms", timeouts.certainty);
    timeouts.results = request.value("results_ms", timeouts.results);
    if (timeouts.decision < 0 || timeouts.certainty < 0 || timeouts.results < 0) {
      throw ConfigError("timeouts must be non-negative");
    }
    if (request.contains("bots")) {
      for (const auto& [seat, policy] : request["bots"].items()) {
        const int n = std::stoi(seat);
        if (n != 1 && n != 2) throw ConfigError("bot seat must be 1 or 2");
        bots.emplace(n, Policy::parse(policy.get<std::string>()));
      }
    }
  } catch (const std::exception& e) {
    throw ProtocolError(ErrorCode::kInvalidConfig, e.what());
  }
  const auto id = create_session(cfg, timeouts);
  const auto entry = find(id);
  std::lock_guard lock(entry->mu);
  for (const auto& [seat, policy] : bots) {
    entry->session.join(seat, Occupant::robot(policy), now);
  }
  return id;
}

std::shared_ptr<SessionService::Entry> SessionService::find(
    const std::string& session_id) const {
  std::shared_lock lock(mu_);
  const auto it = sessions_.find(session_id);
  if (it == sessions_.end()) {
    throw ProtocolError(ErrorCode::kUnknownSession,
                        "no session '" + session_id + "'");
  }
  return it->second;
}

json SessionService::handle(const std::string& session_id,
                            const std::string& token, const json& message,
                            Millis now) {
  try {
    const auto entry = find(session_id);
    std::lock_guard lock(entry->mu);
    auto& session = entry->session;
    if (!message.is_object() || !message.contains("type") ||
        !message["type"].is_string()) {
      throw ProtocolError(ErrorCode::kInvalidMessage, "message needs a type");
    }
    const auto type = message["type"].get<std::string>();
    if (type == "join") {
      const int seat = message.value("seat", 0);
      Occupant occupant;
      if (message.contains("bot")) {
        occupant = Occupant::robot(Policy::parse(message["bot"].get<std::string>()));
      } else {
        occupant = Occupant::human(message.value("token", token));
      }
      session.join(seat, std::move(occupant), now);
      return {{"type", "ack"},
              {"of", "join"},
              {"session", session_id},
              {"seat", seat},
              {"instructions_ms", session.timeouts().instructions}};
    }
    const int seat = session.seat_of(token);
    if (seat == 0) throw ProtocolError(ErrorCode::kBadToken, "unknown seat token");
    if (type == "decision") {
      session.submit_decision(
          seat, parse_action(message.at("action").get<std::string>()), now);
    } else if (type == "certainty") {
      session.submit_certainty(
          seat, parse_certainty(message.at("level").get<std::string>()), now);
    } else if (type == "postgame") {
      session.submit_postgame(seat, PostGameAnswers::from_json(message));
    } else {
      throw ProtocolError(ErrorCode::kInvalidMessage,
                          "unknown message type '" + type + "'");
    }
    return {{"type", "ack"}, {"of", type}};
  } catch (const ProtocolError& e) {
    return error_message(e.code(), e.what());
  } catch (const std::exception& e) {
    return error_message(ErrorCode::kInvalidMessage, e.what());
  }
}

void SessionService::advance_all(Millis now) {
  std::vector<std::shared_ptr<Entry>> entries;
  {
    std::shared_lock lock(mu_);
    for (const auto& [id, e] : sessions_) entries.push_back(e);
  }
  for (const auto& e : entries) {
    std::lock_guard lock(e->mu);
    e->session.advance(now);
  }
}

SessionState SessionService::state(const std::string& session_id) const {
  const auto entry = find(session_id);
  std::lock_guard lock(entry->mu);
  return entry->session.state();
}

std::vector<json> SessionService::poll(const std::string& session_id,
                                       const std::string& token,
                                       std::size_t since) const {
  const auto entry = find(session_id);
  std::lock_guard lock(entry->mu);
  const int seat = entry->session.seat_of(token);
  if (seat == 0) throw ProtocolError(ErrorCode::kBadToken, "unknown seat token");
  const auto& box = entry->session.outbox(seat);
  if (since >= box.size()) return {};
  return {box.begin() + static_cast<std::ptrdiff_t>(since), box.end()};
}

std::string SessionService::export_log(const std::string& session_id) const {
  const auto entry = find(session_id);
  std::lock_guard lock(entry->mu);
  return entry->session.export_log();
}

void SessionService::disconnect(const std::string& session_id,
                                const std::string& token) {
  const auto entry = find(session_id);
  std::lock_guard lock(entry->mu);
  if (const int seat = entry->session.seat_of(token)) {
    entry->session.disconnect(seat);
  }
}

std::vector<std::string> SessionService::session_ids() const {
  std::shared_lock lock(mu_);
  std::vector<std::string> ids;
  for (const auto& [id, e] : sessions_) ids.push_back(id);
  return ids;
}

}  // namespace canteen
