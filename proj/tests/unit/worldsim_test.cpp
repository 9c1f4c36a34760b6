#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <functional>
#include <numbers>
#include <random>

#include "delan/worldsim/episode.hpp"
#include "delan/worldsim/navigation.hpp"
#include "delan/worldsim/serialize.hpp"
#include "delan/worldsim/vocabulary.hpp"
#include "delan/worldsim/world.hpp"

using namespace delan::world;

namespace {

constexpr double kPi = std::numbers::pi;

WorldSpec grid(int w, int h, double density, std::uint64_t seed) {
  WorldSpec s;
  s.width = w;
  s.height = h;
  s.object_density = density;
  s.seed = seed;
  return s;
}

/// Corridor of n nodes along +y with one object at the far end.
World corridor(int n) {
  std::vector<Point> pos;
  std::vector<std::array<int, 2>> edges;
  for (int i = 0; i < n; ++i) pos.push_back({0.0, static_cast<double>(i)});
  for (int i = 0; i + 1 < n; ++i) edges.push_back({i, i + 1});
  return World(WorldSpec{}, pos, edges, {Object{n - 1, 0, 0.0}});
}

int count_lexicon_nouns(const std::vector<int>& ids) {
  const Vocabulary& v = Vocabulary::standard();
  return static_cast<int>(std::count_if(ids.begin(), ids.end(), [&](int i) { return v.is_landmark(i); }));
}

}  // namespace

TEST(VocabularyTest, ClosedAndRoundTrips) {
  const Vocabulary& v = Vocabulary::standard();
  EXPECT_GE(v.size(), 50u);
  EXPECT_LE(v.size(), 70u);
  EXPECT_EQ(v.landmark_classes(), 20u);
  EXPECT_EQ(v.word(v.pad()), "[PAD]");
  EXPECT_EQ(v.word(v.cls()), "[CLS]");
  const auto ids = v.encode("go left past the couch");
  EXPECT_EQ(v.decode(ids), "go left past the couch");
  EXPECT_TRUE(v.is_landmark(v.id("couch")));
  EXPECT_FALSE(v.is_landmark(v.id("left")));
  EXPECT_THROW(v.id("spaceship"), std::out_of_range);
  for (std::size_t c = 0; c < v.landmark_classes(); ++c)
    EXPECT_EQ(v.class_of_noun(v.noun_of_class(static_cast<int>(c))), static_cast<int>(c));
}

TEST(AngleTest, WrapRange) {
  EXPECT_DOUBLE_EQ(wrap_angle(0.0), 0.0);
  EXPECT_DOUBLE_EQ(wrap_angle(kPi), -kPi);
  EXPECT_NEAR(wrap_angle(3 * kPi / 2), -kPi / 2, 1e-15);
  EXPECT_NEAR(bearing(1.0, 0.0), kPi / 2, 1e-15);
  EXPECT_NEAR(bearing(0.0, 1.0), 0.0, 1e-15);
  std::mt19937_64 rng(3);
  for (int i = 0; i < 1000; ++i) {
    const double a = (static_cast<double>(rng() >> 11) * 0x1.0p-53 - 0.5) * 40.0;
    const double w = wrap_angle(a);
    EXPECT_GE(w, -kPi);
    EXPECT_LT(w, kPi);
    EXPECT_NEAR(std::remainder(w - a, 2 * kPi), 0.0, 1e-9);
  }
}

// --------------------------------------------------------- generate_world

TEST(GenerateWorldTest, FullTwoByTwo) {
  const World w = generate_world(grid(2, 2, 1.0, 5));
  EXPECT_EQ(w.node_count(), 4u);
  EXPECT_EQ(w.edge_count(), 4u);
  EXPECT_EQ(w.objects().size(), 4u);
  EXPECT_TRUE(w.connected());
}

TEST(GenerateWorldTest, DeterministicSerialization) {
  WorldSpec s = grid(6, 6, 0.3, 11);
  s.edge_drop = 0.2;
  EXPECT_EQ(to_json(generate_world(s)).dump(), to_json(generate_world(s)).dump());
  s.seed = 12;
  EXPECT_TRUE(generate_world(s).connected());
}

TEST(GenerateWorldTest, ObjectCountMatchesRngReplay) {
  const World w = generate_world(grid(6, 6, 0.3, 7));
  // Replay: one uniform per node, two further draws per placed object.
  std::mt19937_64 rng(7);
  int expected = 0;
  for (int node = 0; node < 36; ++node) {
    const double u = static_cast<double>(rng() >> 11) * 0x1.0p-53;
    if (u < 0.3) {
      ++expected;
      rng();
      rng();
    }
  }
  ASSERT_GT(expected, 0);
  EXPECT_EQ(static_cast<int>(w.objects().size()), expected);
}

TEST(GenerateWorldTest, Invariants) {
  for (std::uint64_t seed = 0; seed < 30; ++seed) {
    WorldSpec s = grid(3 + seed % 4, 2 + seed % 5, 0.1 + 0.03 * seed, seed);
    s.edge_drop = seed % 2 ? 0.25 : 0.0;
    const World w = generate_world(s);
    EXPECT_TRUE(w.connected());
    EXPECT_GE(w.objects().size(), 1u);
    for (std::size_t n = 0; n < w.node_count(); ++n) EXPECT_LE(w.neighbors(static_cast<int>(n)).size(), 4u);
    for (const auto& [a, b] : w.edges()) EXPECT_DOUBLE_EQ(w.edge_length(a, b), 1.0);
  }
}

TEST(GenerateWorldTest, RejectsBadSpecs) {
  EXPECT_THROW(generate_world(grid(1, 4, 0.5, 0)), std::invalid_argument);
  EXPECT_THROW(generate_world(grid(3, 3, 0.0, 0)), std::invalid_argument);
  EXPECT_THROW(generate_world(grid(3, 3, 1.5, 0)), std::invalid_argument);
  WorldSpec s = grid(3, 3, 0.5, 0);
  s.edge_drop = 0.999;
  EXPECT_THROW(generate_world(s), std::runtime_error);
}

TEST(GenerateWorldTest, GeodesicsMatchManhattanOnFullGrid) {
  const World w = generate_world(grid(5, 4, 0.5, 2));
  for (int a = 0; a < 20; ++a)
    for (int b = 0; b < 20; ++b)
      EXPECT_DOUBLE_EQ(w.geodesic(a, b), std::abs(a % 5 - b % 5) + std::abs(a / 5 - b / 5));
}

// --------------------------------------------------------------- observe

TEST(ObserveTest, EmptyNeighbourhood) {
  const World w = corridor(6);
  const Observation o = observe(w, initial_state(0, 0.0));
  ASSERT_EQ(o.views.size(), 8u);
  for (const View& v : o.views) EXPECT_EQ(v.features, std::vector<int>{kEmptyFeature});
  ASSERT_EQ(o.candidates.size(), 2u);
  EXPECT_EQ(o.candidates.back().node, kStopNode);
}

TEST(ObserveTest, ObjectDueNorth) {
  const World w(WorldSpec{}, {{0, 0}, {0, 1}}, {{0, 1}}, {Object{1, 4, kPi}});
  const Observation o = observe(w, initial_state(0, 0.0));
  EXPECT_EQ(o.views[0].features, std::vector<int>{feature_of_class(4)});
  EXPECT_NEAR(o.views[0].angle, 0.0, 1e-15);
  for (int i = 1; i < 8; ++i) EXPECT_EQ(o.views[i].features, std::vector<int>{kEmptyFeature});
  ASSERT_EQ(o.candidates.size(), 2u);
  EXPECT_EQ(o.candidates[0].node, 1);
  EXPECT_NEAR(o.candidates[0].angle, 0.0, 1e-15);
  EXPECT_EQ(o.candidates[0].features, std::vector<int>{feature_of_class(4)});

  // Facing east, the same object sits a quarter turn to the left.
  const Observation east = observe(w, initial_state(0, kPi / 2));
  EXPECT_EQ(east.views[6].features, std::vector<int>{feature_of_class(4)});
  EXPECT_NEAR(east.candidates[0].angle, -kPi / 2, 1e-15);
}

TEST(ObserveTest, RotationShiftsViewSlots) {
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    const World w = generate_world(grid(5, 5, 0.6, seed));
    const double sector = 2 * kPi / w.views();
    for (int node = 0; node < 25; node += 3) {
      const Observation a = observe(w, initial_state(node, 0.0));
      const Observation b = observe(w, initial_state(node, sector));
      std::vector<int> fa, fb;
      for (int i = 0; i < w.views(); ++i) {
        EXPECT_EQ(b.views[i].features, a.views[(i + 1) % w.views()].features);
        fa.insert(fa.end(), a.views[i].features.begin(), a.views[i].features.end());
        fb.insert(fb.end(), b.views[i].features.begin(), b.views[i].features.end());
        EXPECT_NEAR(b.views[i].angle, a.views[i].angle, 1e-15);
      }
      std::sort(fa.begin(), fa.end());
      std::sort(fb.begin(), fb.end());
      EXPECT_EQ(fa, fb);
    }
  }
}

TEST(ObserveTest, CandidatesAreNeighboursWithWrappedAngles) {
  const World w = generate_world(grid(4, 4, 0.5, 9));
  for (int node = 0; node < 16; ++node) {
    const Observation o = observe(w, initial_state(node, kPi / 2));
    ASSERT_EQ(o.candidates.size(), w.neighbors(node).size() + 1);
    for (std::size_t i = 0; i < o.stop_index(); ++i) {
      EXPECT_TRUE(w.adjacent(node, o.candidates[i].node));
      EXPECT_GE(o.candidates[i].angle, -kPi);
      EXPECT_LT(o.candidates[i].angle, kPi);
    }
  }
}

// --------------------------------------------------------- teacher_action

TEST(TeacherActionTest, StopAtGoalAndCorridor) {
  const World w = corridor(5);
  NavState s = initial_state(2, 0.0);
  const Observation o = observe(w, s);
  EXPECT_EQ(teacher_action(w, s, 2), o.stop_index());
  const std::size_t a = teacher_action(w, s, 4);
  EXPECT_EQ(o.candidates[a].node, 3);
  EXPECT_EQ(o.candidates[teacher_action(w, s, 0)].node, 1);
}

TEST(TeacherActionTest, UnreachableGoalThrows) {
  const World w(WorldSpec{}, {{0, 0}, {0, 1}, {5, 5}}, {{0, 1}}, {Object{1, 0, 0.0}});
  EXPECT_THROW(teacher_action(w, initial_state(0, 0.0), 2), std::runtime_error);
}

TEST(TeacherActionTest, TieBreakMatchesExhaustiveSearch) {
  const World w = generate_world(grid(4, 4, 0.5, 1));
  // First hops of every shortest path, found by enumerating all simple
  // paths of geodesic length.
  const std::function<void(int, int, int, std::vector<int>&, std::vector<int>&)> walk =
      [&](int node, int goal, int left, std::vector<int>& path, std::vector<int>& firsts) {
        if (node == goal && left == 0) {
          firsts.push_back(path.at(1));
          return;
        }
        if (left == 0) return;
        for (int nb : w.neighbors(node)) {
          if (std::find(path.begin(), path.end(), nb) != path.end()) continue;
          path.push_back(nb);
          walk(nb, goal, left - 1, path, firsts);
          path.pop_back();
        }
      };
  int ties = 0;
  for (int start = 0; start < 16; ++start)
    for (int goal = 0; goal < 16; ++goal) {
      if (start == goal) continue;
      for (double heading : {0.0, kPi / 2, -kPi, -kPi / 2}) {
        std::vector<int> path{start}, firsts;
        walk(start, goal, static_cast<int>(w.geodesic(start, goal)), path, firsts);
        std::sort(firsts.begin(), firsts.end());
        firsts.erase(std::unique(firsts.begin(), firsts.end()), firsts.end());
        if (firsts.size() > 1) ++ties;
        int best = -1;
        double best_turn = 10.0;
        for (int f : firsts) {
          const double dx = f % 4 - start % 4, dy = f / 4 - start / 4;
          double turn = std::atan2(dx, dy) - heading;
          while (turn >= kPi) turn -= 2 * kPi;
          while (turn < -kPi) turn += 2 * kPi;
          if (std::abs(turn) < best_turn - 1e-9) {
            best = f;
            best_turn = std::abs(turn);
          }
        }
        const NavState s = initial_state(start, heading);
        const Observation o = observe(w, s);
        EXPECT_EQ(o.candidates[teacher_action(w, s, goal)].node, best)
            << start << "->" << goal << " heading " << heading;
      }
    }
  EXPECT_GT(ties, 0);
}

// ------------------------------------------------------------------ step

TEST(StepTest, StopAtStart) {
  const World w = corridor(3);
  for (int goal : {0, 2}) {
    NavState s = step(w, initial_state(0, 0.0), 1);
    EXPECT_TRUE(s.done);
    EXPECT_TRUE(s.stopped);
    EXPECT_EQ(s.history.size(), 1u);
    EXPECT_EQ(succeeded(w, s, goal), goal == 0);
  }
}

TEST(StepTest, MovesRecordTurns) {
  const World w = generate_world(grid(3, 3, 0.5, 4));
  NavState s = initial_state(0, 0.0);  // (0,0) facing north
  s = step(w, s, 1);                   // neighbours {1, 3}: north to node 3
  EXPECT_EQ(s.node, 3);
  s = step(w, s, 1);  // neighbours {0, 4, 6}: east to node 4
  EXPECT_EQ(s.node, 4);
  s = step(w, s, 0);  // neighbours {1, 3, 5, 7}: south to node 1
  EXPECT_EQ(s.node, 1);
  ASSERT_EQ(s.history.size(), 3u);
  EXPECT_NEAR(s.history[0].turn, 0.0, 1e-15);
  EXPECT_NEAR(s.history[1].turn, kPi / 2, 1e-15);
  EXPECT_NEAR(s.history[2].turn, kPi / 2, 1e-15);
  EXPECT_EQ(s.trajectory, (std::vector<int>{0, 3, 4, 1}));
  EXPECT_FALSE(s.done);
  EXPECT_THROW(step(w, s, 9), std::out_of_range);
}

TEST(StepTest, MaxStepsTerminates) {
  const World w = corridor(3);
  NavState s = initial_state(0, 0.0, 3);
  s = step(w, s, 0);
  s = step(w, s, 0);
  s = step(w, s, 0);
  EXPECT_TRUE(s.done);
  EXPECT_FALSE(s.stopped);
  EXPECT_THROW(step(w, s, 0), std::logic_error);
}

// -------------------------------------------------------- generate_episode

TEST(GenerateEpisodeTest, SingleHop) {
  const World w(WorldSpec{}, {{0, 0}, {0, 1}}, {{0, 1}}, {Object{1, 0, 0.0}});
  const Episode e = generate_episode(w, 3, EpisodeSpec{1, 1});
  const Vocabulary& v = Vocabulary::standard();
  EXPECT_EQ(e.path, (std::vector<int>{0, 1}));
  EXPECT_EQ(e.landmarks, std::vector<int>{v.id("couch")});
  EXPECT_NE(std::find(e.instruction.begin(), e.instruction.end(), v.id("couch")), e.instruction.end());
}

TEST(GenerateEpisodeTest, Deterministic) {
  const World w = generate_world(grid(6, 6, 0.3, 7));
  EXPECT_EQ(generate_episode(w, 42), generate_episode(w, 42));
  EXPECT_EQ(to_json(generate_episode(w, 42)).dump(), to_json(generate_episode(w, 42)).dump());
}

TEST(GenerateEpisodeTest, NoReachableLandmarkThrows) {
  const World w = corridor(3);
  EXPECT_THROW(generate_episode(w, 1, EpisodeSpec{3, 8}), std::runtime_error);
}

TEST(GenerateEpisodeTest, LandmarkTruthEqualsLexiconScan) {
  const Vocabulary& v = Vocabulary::standard();
  const World w = generate_world(grid(6, 6, 0.3, 7));
  for (std::uint64_t seed = 0; seed < 50; ++seed) {
    const Episode e = generate_episode(w, seed);
    std::vector<int> scanned;
    for (int id : e.instruction)
      if (v.word(id) != "[PAD]" && v.class_of_noun(id) >= 0) scanned.push_back(id);
    EXPECT_EQ(e.landmarks, scanned);
    EXPECT_EQ(count_lexicon_nouns(e.instruction), static_cast<int>(e.landmarks.size()));
    const int hops = static_cast<int>(e.path.size()) - 1;
    EXPECT_GE(hops, 3);
    EXPECT_LE(hops, 8);
    EXPECT_EQ(e.path.back(), e.goal);
    for (std::size_t i = 0; i + 1 < e.path.size(); ++i) EXPECT_TRUE(w.adjacent(e.path[i], e.path[i + 1]));
    // Each named landmark sits at a path node.
    for (int noun : e.landmarks) {
      bool found = false;
      for (int node : e.path)
        for (int idx : w.objects_at(node)) found |= v.noun_of_class(w.objects()[idx].cls) == noun;
      EXPECT_TRUE(found);
    }
  }
}

TEST(GenerateEpisodeTest, TeacherReplayReproducesPath) {
  for (std::uint64_t ws = 0; ws < 5; ++ws) {
    const World w = generate_world(grid(6, 6, 0.3, ws));
    for (std::uint64_t seed = 0; seed < 20; ++seed) {
      const Episode e = generate_episode(w, seed);
      const NavState s = teacher_rollout(w, e);
      EXPECT_EQ(s.trajectory, e.path);
      EXPECT_TRUE(s.stopped);
      EXPECT_TRUE(succeeded(w, s, e.goal));
      EXPECT_DOUBLE_EQ(static_cast<double>(e.path.size() - 1), w.geodesic(e.path.front(), e.goal));
    }
  }
}

// -------------------------------------------------------------- serialize

TEST(SerializeTest, WorldAndEpisodeRoundTrip) {
  const World w = generate_world(grid(5, 6, 0.4, 8));
  const World back = world_from_json(nlohmann::json::parse(to_json(w).dump()));
  EXPECT_EQ(back.objects(), w.objects());
  EXPECT_EQ(back.edges(), w.edges());
  EXPECT_EQ(back.spec(), w.spec());
  EXPECT_EQ(to_json(back).dump(), to_json(w).dump());
  const Episode e = generate_episode(w, 5);
  EXPECT_EQ(episode_from_json(nlohmann::json::parse(to_json(e).dump())), e);
}

TEST(SerializeTest, RejectsBadInput) {
  auto j = to_json(generate_world(grid(3, 3, 0.5, 1)));
  j["version"] = 99;
  EXPECT_THROW(world_from_json(j), std::invalid_argument);
  auto spec = to_json(WorldSpec{});
  spec["colour"] = "red";
  EXPECT_THROW(world_spec_from_json(spec), std::invalid_argument);
}

TEST(SerializeTest, TrajectoryRecord) {
  const auto j = nlohmann::json::parse(trajectory_record("ep1", 2, 7, 1, {0.5, -1.0}));
  EXPECT_EQ(j["episode_id"], "ep1");
  EXPECT_EQ(j["step"], 2);
  EXPECT_EQ(j["node"], 7);
  EXPECT_EQ(j["action"], 1);
  EXPECT_EQ(j["logits"].size(), 2u);
}
