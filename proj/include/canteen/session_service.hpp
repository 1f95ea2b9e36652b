#pragma once

#include <array>
#include <cstdint>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <random>
#include <shared_mutex>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"

#include "canteen/agents_sim.hpp"

namespace canteen {

using Millis = std::int64_t;

struct SessionTimeouts {
  Millis instructions = 240'000;  // advertised only; the client enforces it
  Millis decision = 61'000;
  Millis certainty = 61'000;
  Millis results = 30'000;
};

enum class Phase {
  kWaitingForPlayers,
  kRoundDeciding,
  kRoundCertainty,
  kRoundResults,
  kFinished,
};

std::string_view to_string(Phase phase);

enum class FinishReason { kNone, kRuin, kCompleted };

std::string_view to_string(FinishReason reason);

enum class ErrorCode {
  kWrongPhase,
  kDuplicateSubmission,
  kUnknownSeat,
  kSeatTaken,
  kBadToken,
  kUnknownSession,
  kInvalidMessage,
  kInvalidConfig,
};

std::string_view to_string(ErrorCode code);

class ProtocolError : public std::runtime_error {
 public:
  ProtocolError(ErrorCode code, const std::string& what)
      : std::runtime_error(what), code_(code) {}
  ErrorCode code() const { return code_; }

 private:
  ErrorCode code_;
};

struct Occupant {
  std::string token;          // opaque seat token for humans
  std::optional<Policy> bot;  // set for bot seats

  static Occupant human(std::string token) { return {std::move(token), {}}; }
  static Occupant robot(Policy policy) { return {{}, std::move(policy)}; }
  bool is_bot() const { return bot.has_value(); }
};

// Answers to the post-game questions; every field is optional.
struct PostGameAnswers {
  std::optional<std::string> fault;     // My fault | Other's fault | Other reason
  std::optional<std::string> strategy;  // free text, stored verbatim
  std::optional<std::string> cutoff;    // I don't know | There is no such time | H:MM
  std::optional<std::string> simple;    // Yes | No | Don't know

  static PostGameAnswers from_json(const nlohmann::json& msg);
};

struct SeatView {
  bool occupied = false;
  bool bot = false;
  bool connected = false;
  std::optional<ArrivalTime> arrival;
  std::optional<Action> decision;
  std::optional<CertaintyLevel> certainty;
  double bankroll = 0.0;
};

// Snapshot of one session, server-side view.
struct SessionState {
  Phase phase = Phase::kWaitingForPlayers;
  int round_index = 0;
  Millis deadline = 0;  // for the current phase; 0 when none
  FinishReason reason = FinishReason::kNone;
  std::array<SeatView, 2> seats;
};

// One two-seat game. Not thread-safe; SessionService serializes access.
// Seats are numbered 1 and 2. Every mutating call takes the current time.
class Session {
 public:
  Session(std::string id, SessionConfig cfg, SessionTimeouts timeouts = {});

  const std::string& id() const { return id_; }
  const SessionConfig& config() const { return cfg_; }
  const SessionTimeouts& timeouts() const { return timeouts_; }

  void join(int seat, Occupant occupant, Millis now);
  void disconnect(int seat);
  void submit_decision(int seat, Action action, Millis now);
  void submit_certainty(int seat, CertaintyLevel level, Millis now);
  void submit_postgame(int seat, PostGameAnswers answers);
  // Applies every deadline that has passed by `now`.
  void advance(Millis now);

  SessionState state() const;
  const std::vector<RoundRecord>& rounds() const { return rounds_; }
  // Seat matching the token, or 0.
  int seat_of(std::string_view token) const;
  // Messages addressed to a seat, oldest first.
  const std::vector<nlohmann::json>& outbox(int seat) const;
  const std::optional<PostGameAnswers>& postgame(int seat) const;

  // One JSON line per seat per round.
  std::string export_log() const;

 private:
  struct SeatSlot {
    std::optional<Occupant> occupant;
    bool connected = false;
    std::optional<Action> decision;
    std::optional<CertaintyLevel> certainty;
    double bankroll = 0.0;
    std::vector<nlohmann::json> outbox;
    std::optional<PostGameAnswers> postgame;
  };

  SeatSlot& slot(int seat);
  const SeatSlot& slot(int seat) const;
  void require_phase(Phase expected, std::string_view what) const;
  void deal_round(Millis now);
  void after_decision(Millis now);
  void after_certainty(Millis now);
  void score_round(Millis now);
  void finish(FinishReason reason);

  std::string id_;
  SessionConfig cfg_;
  SessionTimeouts timeouts_;
  Phase phase_ = Phase::kWaitingForPlayers;
  int round_index_ = 0;
  Millis deadline_ = 0;
  FinishReason reason_ = FinishReason::kNone;
  ArrivalPair arrivals_{};
  std::array<SeatSlot, 2> seats_;
  std::vector<RoundRecord> rounds_;
  std::mt19937_64 nature_rng_;
  std::mt19937_64 bot_rng_;
};

// Verifies an exported log by recomputing every penalty and balance.
// Returns one line per discrepancy; empty means the log checks out.
std::vector<std::string> replay_log(std::string_view jsonl, double endowment);

// Thread-safe registry of sessions plus the wire-message dispatcher.
class SessionService {
 public:
  std::string create_session(const SessionConfig& cfg,
                             const SessionTimeouts& timeouts = {});
  // Creates a session from a wire request body: rounds, endowment, tmin,
  // tmax, seed, decision_ms, certainty_ms, results_ms and optional bots
  // {"1": policy, "2": policy}.
  std::string create_session(const nlohmann::json& request, Millis now);

  // Handles one client message. `token` identifies the sender's seat for
  // everything but join. Returns the direct reply (ack or error).
  nlohmann::json handle(const std::string& session_id, const std::string& token,
                        const nlohmann::json& message, Millis now);

  void advance_all(Millis now);
  SessionState state(const std::string& session_id) const;
  // Messages for the token's seat starting at index `since`.
  std::vector<nlohmann::json> poll(const std::string& session_id,
                                   const std::string& token,
                                   std::size_t since) const;
  std::string export_log(const std::string& session_id) const;
  void disconnect(const std::string& session_id, const std::string& token);
  std::vector<std::string> session_ids() const;

 private:
  struct Entry {
    mutable std::mutex mu;
    Session session;
    Entry(std::string id, SessionConfig cfg, SessionTimeouts t)
        : session(std::move(id), std::move(cfg), t) {}
  };

  std::shared_ptr<Entry> find(const std::string& session_id) const;

  mutable std::shared_mutex mu_;
  std::map<std::string, std::shared_ptr<Entry>> sessions_;
  std::uint64_t next_id_ = 1;
};

nlohmann::json error_message(ErrorCode code, const std::string& detail);

}  // namespace canteen
