#include "delan/worldsim/episode.hpp"

#include <cmath>
#include <numbers>
#include <random>
#include <stdexcept>
#include <string_view>

#include "delan/numerics/random.hpp"
#include "delan/worldsim/navigation.hpp"
#include "delan/worldsim/vocabulary.hpp"

namespace delan::world {

namespace {

constexpr int kStartDraws = 64;
constexpr const char* kVerbs[] = {"go", "walk", "head", "move"};

int landmark_noun_at(const World& world, int node) {
  const auto& here = world.objects_at(node);
  if (here.empty()) return -1;
  return Vocabulary::standard().noun_of_class(world.objects()[here.front()].cls);
}

}  // namespace

const char* direction_word(double relative_angle) {
  const double a = wrap_angle(relative_angle);
  constexpr double q = std::numbers::pi / 4.0;
  if (std::abs(a) < q) return "forward";
  if (a >= q && a <= 3.0 * q) return "right";
  if (a <= -q && a >= -3.0 * q) return "left";
  return "back";
}

void render_instruction(const World& world, Episode& episode, std::uint64_t seed) {
  const Vocabulary& vocab = Vocabulary::standard();
  if (episode.path.size() < 2) throw std::invalid_argument("render_instruction: path needs at least one hop");
  const int goal_noun = landmark_noun_at(world, episode.goal);
  if (goal_noun < 0) throw std::runtime_error("render_instruction: goal has no landmark");

  std::mt19937_64 rng(mix_seed(seed, 1));
  episode.instruction.clear();
  episode.landmarks.clear();
  const auto say = [&](const char* w) { episode.instruction.push_back(vocab.id(w)); };
  const auto name = [&](int noun) {
    say("the");
    episode.instruction.push_back(noun);
    episode.landmarks.push_back(noun);
  };

  double heading = episode.start_heading;
  const std::size_t hops = episode.path.size() - 1;
  for (std::size_t h = 0; h < hops; ++h) {
    const int from = episode.path[h], to = episode.path[h + 1];
    const Point& p = world.position(from);
    const Point& q = world.position(to);
    const double b = bearing(q[0] - p[0], q[1] - p[1]);
    if (h > 0) say("then");
    say(kVerbs[uniform_below(rng, std::size(kVerbs))]);
    say(direction_word(b - heading));
    heading = b;
    if (h + 1 == hops) break;
    const int noun = landmark_noun_at(world, to);
    if (noun < 0) continue;
    const Point& r = world.position(episode.path[h + 2]);
    const bool straight_on = std::string_view(direction_word(bearing(r[0] - q[0], r[1] - q[1]) - b)) == "forward";
    say(straight_on ? "past" : "toward");
    name(noun);
  }
  say("and");
  say("stop");
  say("at");
  name(goal_noun);
}

Episode generate_episode(const World& world, std::uint64_t seed, const EpisodeSpec& spec) {
  if (spec.min_hops < 1 || spec.max_hops < spec.min_hops)
    throw std::invalid_argument("generate_episode: bad hop range");
  if (static_cast<std::size_t>(world.spec().landmark_classes) > Vocabulary::standard().landmark_classes())
    throw std::invalid_argument("generate_episode: world has more landmark classes than the vocabulary");

  std::mt19937_64 rng(seed);
  const auto n = static_cast<std::uint64_t>(world.node_count());
  for (int draw = 0; draw < kStartDraws; ++draw) {
    const int start = static_cast<int>(uniform_below(rng, n));
    std::vector<int> goals;
    for (int g = 0; g < static_cast<int>(n); ++g) {
      if (world.objects_at(g).empty()) continue;
      const double d = world.geodesic(start, g);
      if (d >= spec.min_hops - 1e-9 && d <= spec.max_hops + 1e-9) goals.push_back(g);
    }
    if (goals.empty()) continue;
    Episode ep;
    ep.seed = seed;
    ep.id = "ep" + std::to_string(seed);
    ep.goal = goals[uniform_below(rng, goals.size())];
    ep.start_heading = wrap_angle(static_cast<double>(uniform_below(rng, 4)) * std::numbers::pi / 2.0);
    const int budget = spec.max_hops + 2;
    const NavState s = teacher_rollout(world, Episode{"", {}, {}, {start}, ep.goal, ep.start_heading, seed}, budget);
    ep.path = s.trajectory;
    render_instruction(world, ep, seed);
    return ep;
  }
  throw std::runtime_error("generate_episode: no landmark visible along any candidate path");
}

}  // namespace delan::world
