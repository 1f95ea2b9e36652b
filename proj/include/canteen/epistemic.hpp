#pragma once

#include <cstdint>
#include <functional>
#include <stdexcept>
#include <string>
#include <vector>

#include "canteen/game_model.hpp"

namespace canteen {

// Raised when propositions from different models are combined.
class ModelMismatch : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

class KripkeModel;

// Extensional proposition: the set of worlds where it holds.
class Proposition {
 public:
  std::uint64_t model_id() const { return model_id_; }
  std::size_t size() const { return bits_.size(); }
  bool holds_at(std::size_t world) const { return bits_.at(world); }
  std::size_t count() const;
  bool empty() const { return count() == 0; }
  std::vector<std::size_t> worlds() const;
  bool subset_of(const Proposition& other) const;

  Proposition operator&(const Proposition& other) const;
  Proposition operator|(const Proposition& other) const;
  Proposition operator!() const;
  bool operator==(const Proposition& other) const;

 private:
  friend class KripkeModel;
  Proposition(std::uint64_t model_id, std::vector<bool> bits)
      : model_id_(model_id), bits_(std::move(bits)) {}
  void check_same_model(const Proposition& other) const;

  std::uint64_t model_id_;
  std::vector<bool> bits_;
};

// Finite S5 model: every agent's accessibility relation is a partition of
// the worlds. Agents are numbered from 0.
class KripkeModel {
 public:
  // class_of[agent][world] names the information class of `world` for
  // `agent`; worlds with equal ids are indistinguishable.
  KripkeModel(std::size_t world_count,
              std::vector<std::vector<int>> class_of);

  std::uint64_t id() const { return id_; }
  std::size_t world_count() const { return world_count_; }
  int agent_count() const { return static_cast<int>(classes_.size()); }

  bool indistinguishable(int agent, std::size_t w, std::size_t v) const;
  // Worlds the agent cannot tell apart from w (including w).
  const std::vector<std::size_t>& information_set(int agent,
                                                  std::size_t w) const;
  const std::vector<std::vector<std::size_t>>& partition(int agent) const {
    return classes_.at(static_cast<std::size_t>(agent));
  }

  Proposition all() const;
  Proposition none() const;
  Proposition where(const std::function<bool(std::size_t)>& pred) const;
  Proposition from_worlds(const std::vector<std::size_t>& worlds) const;

  void check_owns(const Proposition& p) const;

 private:
  std::uint64_t id_;
  std::size_t world_count_;
  std::vector<std::vector<std::vector<std::size_t>>> classes_;
  std::vector<std::vector<std::size_t>> class_index_;
};

// K_agent: worlds whose whole information set lies inside phi.
Proposition knows(const KripkeModel& m, int agent, const Proposition& phi);
// E: every agent knows phi.
Proposition everyone_knows(const KripkeModel& m, const Proposition& phi);
// E^n phi with E^0 phi = phi.
Proposition iterate_everyone_knows(const KripkeModel& m, const Proposition& phi,
                                   int n);
// Greatest fixpoint of E below phi.
Proposition common_knowledge(const KripkeModel& m, const Proposition& phi);
// Number of E applications common_knowledge needed before stabilizing.
int common_knowledge_iterations(const KripkeModel& m, const Proposition& phi);

// Arrival-pair model of the game. Agent 0 is player 1, agent 1 is player 2.
struct CanteenModel {
  TimeRange range;
  std::vector<ArrivalPair> worlds;
  KripkeModel kripke;

  std::size_t world_of(const ArrivalPair& pair) const;
  // "Both players arrived before 9:00."
  Proposition both_before_nine() const;
  // Worlds where `player` (1 or 2) arrives at t.
  std::vector<std::size_t> worlds_with_arrival(int player,
                                               ArrivalTime t) const;
};

CanteenModel build_model(const TimeRange& range);

struct KnowledgeLabel {
  enum class Kind { kNone, kPrivate, kShared };
  Kind kind = Kind::kNone;
  int depth = 0;  // set for kShared only

  static KnowledgeLabel none() { return {}; }
  static KnowledgeLabel private_only() { return {Kind::kPrivate, 0}; }
  static KnowledgeLabel shared(int n) { return {Kind::kShared, n}; }

  // "none", "private", "shared:n"
  std::string str() const;
  bool operator==(const KnowledgeLabel&) const = default;
};

// What a player arriving at t knows about "both before 9:00". shared(n)
// means K_i E^{n-1} p holds at every world with that own arrival.
KnowledgeLabel knowledge_label(const CanteenModel& model, ArrivalTime t);
KnowledgeLabel knowledge_label(const TimeRange& range, ArrivalTime t);

// Acknowledgement chain: world m means exactly m messages got through.
// Agent 0 sends the odd-numbered messages, agent 1 the even ones; the
// sender of message m+1 cannot tell m from m+1.
struct MessageChain {
  KripkeModel kripke;
  Proposition first_delivered;  // worlds m >= 1
  int depth;  // max n with the actual world k in E^n first_delivered
};

MessageChain message_chain_model(int delivered);

}  // namespace canteen
