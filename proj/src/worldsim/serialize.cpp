#include "delan/worldsim/serialize.hpp"

#include <stdexcept>

namespace delan::world {

using nlohmann::json;

namespace {

void check_version(const json& j, const char* what) {
  if (j.at("version").get<int>() != kFormatVersion)
    throw std::invalid_argument(std::string(what) + ": unsupported format version");
}

}  // namespace

json to_json(const WorldSpec& s) {
  return {{"width", s.width},         {"height", s.height},
          {"object_density", s.object_density}, {"views", s.views},
          {"visibility_radius", s.visibility_radius}, {"edge_drop", s.edge_drop},
          {"landmark_classes", s.landmark_classes}, {"seed", s.seed}};
}

WorldSpec world_spec_from_json(const json& j) {
  WorldSpec s;
  for (const auto& [key, value] : j.items()) {
    if (key == "width") s.width = value.get<int>();
    else if (key == "height") s.height = value.get<int>();
    else if (key == "object_density") s.object_density = value.get<double>();
    else if (key == "views") s.views = value.get<int>();
    else if (key == "visibility_radius") s.visibility_radius = value.get<double>();
    else if (key == "edge_drop") s.edge_drop = value.get<double>();
    else if (key == "landmark_classes") s.landmark_classes = value.get<int>();
    else if (key == "seed") s.seed = value.get<std::uint64_t>();
    else throw std::invalid_argument("world spec: unknown key '" + key + "'");
  }
  s.validate();
  return s;
}

json to_json(const World& w) {
  json nodes = json::array(), edges = json::array(), objects = json::array();
  for (std::size_t i = 0; i < w.node_count(); ++i) {
    const Point& p = w.position(static_cast<int>(i));
    nodes.push_back({p[0], p[1]});
  }
  for (const auto& e : w.edges()) edges.push_back({e[0], e[1]});
  for (const Object& o : w.objects()) objects.push_back({{"node", o.node}, {"class", o.cls}, {"bearing", o.bearing}});
  return {{"version", kFormatVersion}, {"spec", to_json(w.spec())}, {"nodes", nodes}, {"edges", edges},
          {"objects", objects}};
}

World world_from_json(const json& j) {
  check_version(j, "world");
  std::vector<Point> nodes;
  for (const auto& p : j.at("nodes")) nodes.push_back({p.at(0).get<double>(), p.at(1).get<double>()});
  std::vector<std::array<int, 2>> edges;
  for (const auto& e : j.at("edges")) edges.push_back({e.at(0).get<int>(), e.at(1).get<int>()});
  std::vector<Object> objects;
  for (const auto& o : j.at("objects"))
    objects.push_back({o.at("node").get<int>(), o.at("class").get<int>(), o.at("bearing").get<double>()});
  World w(world_spec_from_json(j.at("spec")), std::move(nodes), std::move(edges), std::move(objects));
  if (!w.connected()) throw std::invalid_argument("world: graph is disconnected");
  return w;
}

json to_json(const Episode& e) {
  return {{"version", kFormatVersion}, {"id", e.id},       {"instruction", e.instruction},
          {"landmarks", e.landmarks},  {"path", e.path},   {"goal", e.goal},
          {"start_heading", e.start_heading}, {"seed", e.seed}};
}

Episode episode_from_json(const json& j) {
  check_version(j, "episode");
  Episode e;
  e.id = j.at("id").get<std::string>();
  e.instruction = j.at("instruction").get<std::vector<int>>();
  e.landmarks = j.at("landmarks").get<std::vector<int>>();
  e.path = j.at("path").get<std::vector<int>>();
  e.goal = j.at("goal").get<int>();
  e.start_heading = j.at("start_heading").get<double>();
  e.seed = j.at("seed").get<std::uint64_t>();
  if (e.path.empty() || e.path.back() != e.goal) throw std::invalid_argument("episode: path must end at the goal");
  return e;
}

std::string trajectory_record(const std::string& episode_id, int step, int node, int action,
                              const std::vector<double>& logits) {
  return json{{"episode_id", episode_id}, {"step", step}, {"node", node}, {"action", action}, {"logits", logits}}
      .dump();
}

}  // namespace delan::world
