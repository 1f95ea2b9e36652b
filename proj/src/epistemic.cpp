#include "canteen/epistemic.hpp"

#include <algorithm>
#include <atomic>
#include <map>

namespace canteen {

namespace {

std::uint64_t next_model_id() {
  static std::atomic<std::uint64_t> counter{1};
  return counter.fetch_add(1);
}

}  // namespace

std::size_t Proposition::count() const {
  return static_cast<std::size_t>(std::count(bits_.begin(), bits_.end(), true));
}

std::vector<std::size_t> Proposition::worlds() const {
  std::vector<std::size_t> out;
  for (std::size_t w = 0; w < bits_.size(); ++w) {
    if (bits_[w]) out.push_back(w);
  }
  return out;
}

void Proposition::check_same_model(const Proposition& other) const {
  if (model_id_ != other.model_id_) {
    throw ModelMismatch("propositions belong to different models");
  }
}

bool Proposition::subset_of(const Proposition& other) const {
  check_same_model(other);
  for (std::size_t w = 0; w < bits_.size(); ++w) {
    if (bits_[w] && !other.bits_[w]) return false;
  }
  return true;
}

Proposition Proposition::operator&(const Proposition& other) const {
  check_same_model(other);
  auto bits = bits_;
  for (std::size_t w = 0; w < bits.size(); ++w) bits[w] = bits[w] && other.bits_[w];
  return {model_id_, std::move(bits)};
}

Proposition Proposition::operator|(const Proposition& other) const {
  check_same_model(other);
  auto bits = bits_;
  for (std::size_t w = 0; w < bits.size(); ++w) bits[w] = bits[w] || other.bits_[w];
  return {model_id_, std::move(bits)};
}

Proposition Proposition::operator!() const {
  auto bits = bits_;
  bits.flip();
  return {model_id_, std::move(bits)};
}

bool Proposition::operator==(const Proposition& other) const {
  check_same_model(other);
  return bits_ == other.bits_;
}

KripkeModel::KripkeModel(std::size_t world_count,
                         std::vector<std::vector<int>> class_of)
    : id_(next_model_id()), world_count_(world_count) {
  for (const auto& ids : class_of) {
    if (ids.size() != world_count) {
      throw std::invalid_argument("class assignment must cover every world");
    }
    std::map<int, std::size_t> slot;
    std::vector<std::vector<std::size_t>> classes;
    std::vector<std::size_t> index(world_count);
    for (std::size_t w = 0; w < world_count; ++w) {
      auto [it, inserted] = slot.try_emplace(ids[w], classes.size());
      if (inserted) classes.emplace_back();
      classes[it->second].push_back(w);
      index[w] = it->second;
    }
    classes_.push_back(std::move(classes));
    class_index_.push_back(std::move(index));
  }
}

bool KripkeModel::indistinguishable(int agent, std::size_t w,
                                    std::size_t v) const {
  const auto& index = class_index_.at(static_cast<std::size_t>(agent));
  return index.at(w) == index.at(v);
}

const std::vector<std::size_t>& KripkeModel::information_set(
    int agent, std::size_t w) const {
  const auto a = static_cast<std::size_t>(agent);
  return classes_.at(a)[class_index_.at(a).at(w)];
}

Proposition KripkeModel::all() const {
  return {id_, std::vector<bool>(world_count_, true)};
}

Proposition KripkeModel::none() const {
  return {id_, std::vector<bool>(world_count_, false)};
}

Proposition KripkeModel::where(
    const std::function<bool(std::size_t)>& pred) const {
  std::vector<bool> bits(world_count_);
  for (std::size_t w = 0; w < world_count_; ++w) bits[w] = pred(w);
  return {id_, std::move(bits)};
}

Proposition KripkeModel::from_worlds(
    const std::vector<std::size_t>& worlds) const {
  std::vector<bool> bits(world_count_);
  for (auto w : worlds) bits.at(w) = true;
  return {id_, std::move(bits)};
}

void KripkeModel::check_owns(const Proposition& p) const {
  if (p.model_id() != id_ || p.size() != world_count_) {
    throw ModelMismatch("proposition does not belong to this model");
  }
}

Proposition knows(const KripkeModel& m, int agent, const Proposition& phi) {
  m.check_owns(phi);
  std::vector<std::size_t> known;
  for (const auto& cls : m.partition(agent)) {
    const bool inside = std::all_of(cls.begin(), cls.end(),
                                    [&](auto w) { return phi.holds_at(w); });
    if (inside) known.insert(known.end(), cls.begin(), cls.end());
  }
  return m.from_worlds(known);
}

Proposition everyone_knows(const KripkeModel& m, const Proposition& phi) {
  auto result = m.all();
  for (int agent = 0; agent < m.agent_count(); ++agent) {
    result = result & knows(m, agent, phi);
  }
  return result;
}

Proposition iterate_everyone_knows(const KripkeModel& m, const Proposition& phi,
                                   int n) {
  if (n < 0) throw std::invalid_argument("iteration count must be >= 0");
  auto result = phi;
  for (int i = 0; i < n; ++i) result = everyone_knows(m, result);
  return result;
}

int common_knowledge_iterations(const KripkeModel& m, const Proposition& phi) {
  auto current = phi;
  for (int steps = 0;; ++steps) {
    auto next = everyone_knows(m, current);
    // E is factive on partition models, so the chain only shrinks.
    if (next == current) return steps;
    current = std::move(next);
  }
}

Proposition common_knowledge(const KripkeModel& m, const Proposition& phi) {
  auto current = phi;
  for (;;) {
    auto next = everyone_knows(m, current);
    if (next == current) return current;
    current = std::move(next);
  }
}

std::size_t CanteenModel::world_of(const ArrivalPair& pair) const {
  const auto it = std::lower_bound(worlds.begin(), worlds.end(), pair);
  if (it == worlds.end() || *it != pair) {
    throw ConfigError("arrival pair (" + pair.t1.str() + ", " + pair.t2.str() +
                      ") is not a world of this model");
  }
  return static_cast<std::size_t>(it - worlds.begin());
}

Proposition CanteenModel::both_before_nine() const {
  return kripke.where([&](std::size_t w) { return worlds[w].both_before_nine(); });
}

std::vector<std::size_t> CanteenModel::worlds_with_arrival(
    int player, ArrivalTime t) const {
  std::vector<std::size_t> out;
  for (std::size_t w = 0; w < worlds.size(); ++w) {
    if (worlds[w].of(player) == t) out.push_back(w);
  }
  return out;
}

CanteenModel build_model(const TimeRange& range) {
  auto worlds = arrival_pairs(range);
  std::vector<std::vector<int>> class_of(2, std::vector<int>(worlds.size()));
  for (std::size_t w = 0; w < worlds.size(); ++w) {
    class_of[0][w] = worlds[w].t1.minutes();
    class_of[1][w] = worlds[w].t2.minutes();
  }
  KripkeModel kripke(worlds.size(), std::move(class_of));
  return CanteenModel{range, std::move(worlds), std::move(kripke)};
}

std::string KnowledgeLabel::str() const {
  switch (kind) {
    case Kind::kNone: return "none";
    case Kind::kPrivate: return "private";
    case Kind::kShared: return "shared:" + std::to_string(depth);
  }
  return "none";
}

KnowledgeLabel knowledge_label(const CanteenModel& model, ArrivalTime t) {
  if (!model.range.contains(t)) {
    throw ConfigError("time " + t.str() + " outside range");
  }
  const auto& m = model.kripke;
  // (agent, world) positions where a player's own arrival is t.
  std::vector<std::pair<int, std::size_t>> positions;
  for (int player = 1; player <= 2; ++player) {
    for (auto w : model.worlds_with_arrival(player, t)) {
      positions.emplace_back(player - 1, w);
    }
  }
  auto known_everywhere = [&](auto&& phi_for_agent) {
    return std::all_of(positions.begin(), positions.end(), [&](const auto& aw) {
      return knows(m, aw.first, phi_for_agent(aw.first)).holds_at(aw.second);
    });
  };

  // K_i (t_i < 9:00)
  const bool own_early_known = known_everywhere([&](int agent) {
    return m.where([&](std::size_t w) {
      return model.worlds[w].of(agent + 1) < kNineAm;
    });
  });
  if (!own_early_known) return KnowledgeLabel::none();

  const auto p = model.both_before_nine();
  auto layer = p;  // E^{n-1} p
  int depth = 0;
  const int cap = static_cast<int>(m.world_count()) + 1;
  while (depth <= cap && known_everywhere([&](int) { return layer; })) {
    ++depth;
    layer = everyone_knows(m, layer);
  }
  if (depth > cap) {
    throw std::logic_error("knowledge depth does not terminate");
  }
  return depth == 0 ? KnowledgeLabel::private_only()
                    : KnowledgeLabel::shared(depth);
}

KnowledgeLabel knowledge_label(const TimeRange& range, ArrivalTime t) {
  return knowledge_label(build_model(range), t);
}

MessageChain message_chain_model(int delivered) {
  if (delivered < 0) throw std::invalid_argument("message count must be >= 0");
  const auto worlds = static_cast<std::size_t>(delivered) + 1;
  std::vector<std::vector<int>> class_of(2, std::vector<int>(worlds));
  for (std::size_t m = 0; m < worlds; ++m) {
    class_of[0][m] = static_cast<int>(m / 2);
    class_of[1][m] = static_cast<int>((m + 1) / 2);
  }
  KripkeModel kripke(worlds, std::move(class_of));
  auto p = kripke.where([](std::size_t m) { return m >= 1; });
  const auto actual = static_cast<std::size_t>(delivered);
  int depth = 0;
  if (p.holds_at(actual)) {
    auto layer = everyone_knows(kripke, p);
    while (layer.holds_at(actual)) {
      ++depth;
      if (depth > static_cast<int>(worlds)) {
        throw std::logic_error("message chain depth does not terminate");
      }
      layer = everyone_knows(kripke, layer);
    }
  }
  return MessageChain{std::move(kripke), std::move(p), depth};
}

}  // namespace canteen
