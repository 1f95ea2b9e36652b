#include "doctest.h"

#include <random>

#include "canteen/epistemic.hpp"
#include "oracles.hpp"

using namespace canteen;

namespace {

oracle::World to_world(const CanteenModel& m, const Proposition& p) {
  oracle::World out;
  for (auto w : p.worlds()) out.insert({m.worlds[w].t1.minutes(), m.worlds[w].t2.minutes()});
  return out;
}

Proposition from_world(const CanteenModel& m, const oracle::World& s) {
  return m.kripke.where([&](std::size_t w) {
    return s.count({m.worlds[w].t1.minutes(), m.worlds[w].t2.minutes()}) > 0;
  });
}

// A single chain component, ordered as in the game's first component.
KripkeModel chain_component(std::size_t n) {
  // Player 1 links worlds (1,2), (3,4), ...; player 2 links (0,1), (2,3), ...
  std::vector<int> c1(n), c2(n);
  for (std::size_t w = 0; w < n; ++w) {
    c1[w] = static_cast<int>((w + 1) / 2);
    c2[w] = static_cast<int>(w / 2);
  }
  return KripkeModel(n, {c1, c2});
}

}  // namespace

TEST_CASE("canteen model structure") {
  const auto m = build_model(TimeRange::analysis_default());
  CHECK(m.kripke.world_count() == 12);
  CHECK(m.kripke.agent_count() == 2);
  for (int agent = 0; agent < 2; ++agent) {
    for (std::size_t w = 0; w < m.worlds.size(); ++w) {
      const auto& cls = m.kripke.information_set(agent, w);
      CHECK((cls.size() == 1 || cls.size() == 2));
      for (auto v : cls) CHECK(m.worlds[v].of(agent + 1) == m.worlds[w].of(agent + 1));
    }
  }
  const auto boundary = m.world_of({ArrivalTime::clock(8, 10), ArrivalTime::clock(8, 20)});
  CHECK(m.kripke.information_set(0, boundary).size() == 1);
}

TEST_CASE("proposition algebra and model ownership") {
  const KripkeModel a(4, {{0, 0, 1, 1}});
  const KripkeModel b(4, {{0, 0, 1, 1}});
  const auto p = a.from_worlds({0, 2});
  const auto q = a.from_worlds({2, 3});
  CHECK((p & q).worlds() == std::vector<std::size_t>{2});
  CHECK((p | q).count() == 3);
  CHECK((!p).worlds() == std::vector<std::size_t>{1, 3});
  CHECK((p & q).subset_of(p));
  CHECK_THROWS_AS((void)(p & b.all()), ModelMismatch);
  CHECK_THROWS_AS(knows(b, 0, p), ModelMismatch);
  CHECK_THROWS_AS(KripkeModel(3, {{0, 1}}), std::invalid_argument);
}

TEST_CASE("knowledge on the component chain") {
  // (8:10,8:20) (8:30,8:20) (8:30,8:40) (8:50,8:40) (8:50,9:00) (9:10,9:00)
  const auto m = chain_component(6);
  const auto p = m.from_worlds({0, 1, 2, 3});
  CHECK(everyone_knows(m, p).worlds() == std::vector<std::size_t>{0, 1, 2});
  CHECK(iterate_everyone_knows(m, p, 2).worlds() == std::vector<std::size_t>{0, 1});
  CHECK(iterate_everyone_knows(m, p, 3).worlds() == std::vector<std::size_t>{0});
  CHECK(iterate_everyone_knows(m, p, 4).empty());
  CHECK(iterate_everyone_knows(m, p, 0) == p);
  CHECK(common_knowledge(m, p).empty());
  CHECK(common_knowledge(m, m.all()) == m.all());
  CHECK(everyone_knows(m, m.all()) == m.all());
}

TEST_CASE("K_1 of both-before-nine excludes own arrival 8:50") {
  const auto m = build_model(TimeRange::analysis_default());
  const auto k1 = knows(m.kripke, 0, m.both_before_nine());
  for (std::size_t w = 0; w < m.worlds.size(); ++w) {
    if (m.worlds[w].t1 == ArrivalTime::clock(8, 50)) CHECK_FALSE(k1.holds_at(w));
  }
}

TEST_CASE("operators agree with the set-based oracle") {
  std::mt19937_64 rng(3);
  for (int tmin = 0; tmin <= 50; tmin += 10) {
    for (int tmax = 60; tmax <= 100; tmax += 20) {
      const auto m = build_model(TimeRange(ArrivalTime(tmin), ArrivalTime(tmax)));
      const auto all = oracle::pairs(tmin, tmax);
      for (int trial = 0; trial < 20; ++trial) {
        std::bernoulli_distribution coin(0.7);
        const auto phi = m.kripke.where([&](std::size_t) { return coin(rng); });
        const auto s = to_world(m, phi);
        CHECK(to_world(m, knows(m.kripke, 0, phi)) == oracle::knows(all, s, 1));
        CHECK(to_world(m, knows(m.kripke, 1, phi)) == oracle::knows(all, s, 2));
        for (int n = 0; n <= 4; ++n) {
          CHECK(to_world(m, iterate_everyone_knows(m.kripke, phi, n)) ==
                oracle::iterate(all, s, n));
        }
        CHECK(from_world(m, oracle::iterate(all, s, static_cast<int>(all.size()))) ==
              common_knowledge(m.kripke, phi));
      }
    }
  }
}

TEST_CASE("modal properties on random propositions") {
  const auto m = build_model(TimeRange::live_default());
  const auto& k = m.kripke;
  std::mt19937_64 rng(11);
  std::bernoulli_distribution coin(0.6);
  for (int trial = 0; trial < 200; ++trial) {
    const auto phi = k.where([&](std::size_t) { return coin(rng); });
    const auto psi = phi | k.where([&](std::size_t) { return coin(rng); });
    for (int agent = 0; agent < 2; ++agent) {
      const auto kp = knows(k, agent, phi);
      CHECK(kp.subset_of(phi));
      CHECK(kp.subset_of(knows(k, agent, psi)));
      CHECK(knows(k, agent, kp) == kp);
      CHECK(everyone_knows(k, phi).subset_of(kp));
    }
    for (int n = 0; n < 6; ++n) {
      CHECK(iterate_everyone_knows(k, phi, n + 1).subset_of(iterate_everyone_knows(k, phi, n)));
    }
    const auto ck = common_knowledge(k, phi);
    CHECK(everyone_knows(k, ck) == ck);
    CHECK(ck == iterate_everyone_knows(k, phi, static_cast<int>(k.world_count())));
    CHECK(common_knowledge_iterations(k, phi) <= static_cast<int>(k.world_count()));
  }
}

TEST_CASE("knowledge labels along the arrival ladder") {
  const auto range = TimeRange::analysis_default();
  auto label = [&](int h, int m) { return knowledge_label(range, ArrivalTime::clock(h, m)).str(); };
  CHECK(label(8, 10) == "shared:4");
  CHECK(label(8, 20) == "shared:3");
  CHECK(label(8, 30) == "shared:2");
  CHECK(label(8, 40) == "shared:1");
  CHECK(label(8, 50) == "private");
  CHECK(label(9, 0) == "none");
  CHECK(label(9, 10) == "none");
}

TEST_CASE("labels match the oracle and the closed form on every range") {
  for (int tmin = 0; tmin <= 50; tmin += 10) {
    for (int tmax = 60; tmax <= 100; tmax += 10) {
      const TimeRange range{ArrivalTime(tmin), ArrivalTime(tmax)};
      const auto model = build_model(range);
      CHECK(common_knowledge(model.kripke, model.both_before_nine()).empty());
      for (auto t : range.times()) {
        const auto got = knowledge_label(model, t);
        const int want = oracle::label(tmin, tmax, t.minutes());
        if (want < 0) {
          CHECK(got == KnowledgeLabel::none());
        } else if (want == 0) {
          CHECK(got == KnowledgeLabel::private_only());
        } else {
          CHECK(got == KnowledgeLabel::shared(want));
        }
        if (t.minutes() > tmin && t.minutes() < 50) {
          CHECK(got == KnowledgeLabel::shared((50 - t.minutes()) / 10));
        }
      }
    }
  }
}

TEST_CASE("both components give the same labels") {
  const auto range = TimeRange::live_default();
  const auto model = build_model(range);
  const auto part = components(range);
  const auto p = model.both_before_nine();
  for (auto t : range.times()) {
    for (int n = 0; n < 8; ++n) {
      const auto layer = knows(model.kripke, 0, iterate_everyone_knows(model.kripke, p, n));
      const auto layer2 = knows(model.kripke, 1, iterate_everyone_knows(model.kripke, p, n));
      // Player 1 in one chain mirrors player 2 in the other.
      for (const auto& w : part.first) {
        if (w.t1 != t) continue;
        CHECK(layer.holds_at(model.world_of(w)) == layer2.holds_at(model.world_of(w.mirrored())));
      }
    }
  }
}

TEST_CASE("message chains never reach common knowledge") {
  int previous = -1;
  for (int k = 0; k <= 10; ++k) {
    const auto chain = message_chain_model(k);
    CHECK(chain.kripke.world_count() == static_cast<std::size_t>(k + 1));
    CHECK(common_knowledge(chain.kripke, chain.first_delivered).empty());
    CHECK(chain.depth >= previous);
    previous = chain.depth;
    // Depth from first principles: largest n with world k in E^n p.
    int depth = 0;
    while (iterate_everyone_knows(chain.kripke, chain.first_delivered, depth + 1)
               .holds_at(static_cast<std::size_t>(k))) {
      ++depth;
    }
    CHECK(chain.depth == depth);
  }
  CHECK(message_chain_model(0).depth == 0);
  CHECK(message_chain_model(2).depth == 1);
  CHECK_THROWS(message_chain_model(-1));
}
