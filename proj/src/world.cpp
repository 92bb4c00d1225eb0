#include "tlmarl/world.hpp"

#include <algorithm>
#include <deque>
#include <fstream>
#include <regex>
#include <set>

namespace tlmarl {

// ---------------------------------------------------------------------------
// Graph

EnvGraph::EnvGraph(int vertex_count, const std::vector<std::pair<Vertex, Vertex>>& edges)
    : adjacency_(static_cast<std::size_t>(vertex_count)) {
  if (vertex_count <= 0) throw ScenarioError("graph needs at least one vertex");
  for (auto [u, v] : edges) {
    if (!contains(u) || !contains(v)) {
      throw ScenarioError("edge (" + std::to_string(u) + "," + std::to_string(v) +
                          ") has an endpoint outside the graph");
    }
    if (u == v) throw ScenarioError("self-loop at vertex " + std::to_string(u));
    if (!adjacent(u, v)) {
      adjacency_[u].push_back(v);
      adjacency_[v].push_back(u);
    }
  }
  for (auto& row : adjacency_) std::sort(row.begin(), row.end());
}

EnvGraph EnvGraph::grid(int width, int height) {
  if (width <= 0 || height <= 0) throw ScenarioError("grid dimensions must be positive");
  std::vector<std::pair<Vertex, Vertex>> edges;
  for (int r = 0; r < height; ++r) {
    for (int c = 0; c < width; ++c) {
      const Vertex v = r * width + c;
      if (c + 1 < width) edges.emplace_back(v, v + 1);
      if (r + 1 < height) edges.emplace_back(v, v + width);
    }
  }
  EnvGraph g(width * height, edges);
  g.width_ = width;
  g.height_ = height;
  return g;
}

bool EnvGraph::adjacent(Vertex u, Vertex v) const {
  if (!contains(u) || !contains(v)) return false;
  const auto& row = adjacency_[u];
  return std::find(row.begin(), row.end(), v) != row.end();
}

std::vector<std::pair<Vertex, Vertex>> EnvGraph::edge_list() const {
  std::vector<std::pair<Vertex, Vertex>> out;
  for (Vertex u = 0; u < size(); ++u) {
    for (Vertex v : adjacency_[u]) {
      if (u < v) out.emplace_back(u, v);
    }
  }
  return out;
}

namespace {

std::vector<int> bfs(const EnvGraph& g, Vertex source) {
  std::vector<int> dist(static_cast<std::size_t>(g.size()), kNoPath);
  std::deque<Vertex> queue{source};
  dist[source] = 0;
  while (!queue.empty()) {
    const Vertex u = queue.front();
    queue.pop_front();
    for (Vertex v : g.neighbors(u)) {
      if (dist[v] == kNoPath) {
        dist[v] = dist[u] + 1;
        queue.push_back(v);
      }
    }
  }
  return dist;
}

}  // namespace

int graph_distance(const EnvGraph& g, Vertex u, Vertex v) {
  if (!g.contains(u) || !g.contains(v)) throw std::out_of_range("vertex outside graph");
  return bfs(g, u)[v];
}

DistanceTable::DistanceTable(const EnvGraph& g) : n_(static_cast<std::size_t>(g.size())) {
  dist_.reserve(n_ * n_);
  for (Vertex u = 0; u < g.size(); ++u) {
    auto row = bfs(g, u);
    dist_.insert(dist_.end(), row.begin(), row.end());
  }
}

// ---------------------------------------------------------------------------
// Agents and requests

bool Agent::can_reach(Vertex v) const {
  return std::binary_search(reachable.begin(), reachable.end(), v);
}

bool Agent::can_serve(int request) const {
  return std::binary_search(capabilities.begin(), capabilities.end(), request);
}

Scenario::Scenario(EnvGraph graph, std::vector<Agent> agents, std::vector<Request> requests)
    : graph_(std::move(graph)), agents_(std::move(agents)), requests_(std::move(requests)) {
  if (agents_.empty()) throw ScenarioError("scenario has no agents");
  if (requests_.size() > RequestSet::kCapacity) throw ScenarioError("too many requests");
  dist_ = DistanceTable(graph_);

  std::set<std::string> names;
  for (auto& a : agents_) {
    if (!names.insert(a.name).second) throw ScenarioError("duplicate agent '" + a.name + "'");
    if (a.reachable.empty()) {
      a.reachable.resize(static_cast<std::size_t>(graph_.size()));
      for (Vertex v = 0; v < graph_.size(); ++v) a.reachable[v] = v;
    }
    std::sort(a.reachable.begin(), a.reachable.end());
    std::sort(a.capabilities.begin(), a.capabilities.end());
    for (Vertex v : a.reachable) {
      if (!graph_.contains(v)) throw ScenarioError("agent '" + a.name + "' reaches unknown vertex");
    }
    if (!a.can_reach(a.start)) {
      throw ScenarioError("agent '" + a.name + "' starts outside its reachable set");
    }
  }

  std::set<std::string> ids;
  for (std::size_t r = 0; r < requests_.size(); ++r) {
    auto& req = requests_[r];
    if (!std::regex_match(req.id, std::regex("[A-Za-z0-9_]+"))) {
      throw ScenarioError("request id '" + req.id + "' is not alphanumeric");
    }
    if (!ids.insert(req.id).second) throw ScenarioError("duplicate request '" + req.id + "'");
    if (req.sites.empty()) throw ScenarioError("request '" + req.id + "' has no location");
    for (Vertex v : req.sites) {
      if (!graph_.contains(v)) throw ScenarioError("request '" + req.id + "' at unknown vertex");
    }
    if (req.go_constant <= 0 || req.do_constant <= 0) {
      throw ScenarioError("predicate constants of request '" + req.id + "' must be positive");
    }
    req.owners.clear();
    for (int i = 0; i < agent_count(); ++i) {
      if (agents_[i].can_serve(static_cast<int>(r))) req.owners.push_back(i);
    }
    if (req.owners.empty()) throw ScenarioError("request '" + req.id + "' has no owner");
  }
  for (const auto& a : agents_) {
    for (int r : a.capabilities) {
      if (r < 0 || r >= static_cast<int>(requests_.size())) {
        throw ScenarioError("agent '" + a.name + "' has an unknown capability");
      }
    }
  }

  for (std::size_t r = 0; r < requests_.size(); ++r) {
    const auto& req = requests_[r];
    predicates_.add("go" + req.id, PredicateKind::Go, req.id, req.go_constant);
    predicate_request_.push_back(static_cast<int>(r));
    predicates_.add("do" + req.id, PredicateKind::Do, req.id, req.do_constant);
    predicate_request_.push_back(static_cast<int>(r));
  }
}

int Scenario::request_index(std::string_view id) const {
  for (std::size_t r = 0; r < requests_.size(); ++r) {
    if (requests_[r].id == id) return static_cast<int>(r);
  }
  return -1;
}

void Scenario::set_horizon(int t) {
  if (t <= 0) throw ScenarioError("horizon must be positive");
  horizon_ = t;
}

void Scenario::set_reward_constant(double c) {
  if (!(c > 0)) throw ScenarioError("reward constant must be positive");
  reward_constant_ = c;
}

TeamState Scenario::initial_state() const {
  TeamState x;
  for (const auto& a : agents_) x.positions.push_back(a.start);
  return x;
}

void Scenario::check_action(int agent, Action a) const {
  const Agent& ag = agents_.at(agent);
  switch (a.kind) {
    case Action::Kind::Idle:
      return;
    case Action::Kind::Move:
      if (ag.can_reach(a.target)) return;
      break;
    case Action::Kind::Serve:
      if (ag.can_serve(a.target)) return;
      break;
  }
  throw std::invalid_argument("action outside the action set of agent '" + ag.name + "'");
}

Vertex Scenario::agent_step(int agent, Vertex v, Action a) const {
  check_action(agent, a);
  if (a.kind == Action::Kind::Move && graph_.adjacent(v, a.target)) return a.target;
  return v;
}

RequestSet Scenario::completed_requests(std::span<const Vertex> positions,
                                        const JointAction& actions) const {
  RequestSet done;
  for (std::size_t r = 0; r < requests_.size(); ++r) {
    const auto& req = requests_[r];
    const Vertex where = positions[req.owners.front()];
    if (std::find(req.sites.begin(), req.sites.end(), where) == req.sites.end()) continue;
    bool all = true;
    for (int i : req.owners) {
      const Action& a = actions[i];
      if (a.kind != Action::Kind::Serve || a.target != static_cast<int>(r) || positions[i] != where) {
        all = false;
        break;
      }
    }
    if (all) done.insert(static_cast<int>(r));
  }
  return done;
}

double Scenario::go_value(const TeamState& x, int request) const {
  const auto& req = requests_.at(request);
  int best = kNoPath;
  for (Vertex site : req.sites) {
    int worst = 0;
    for (int i : req.owners) worst = std::max(worst, dist_(x.positions[i], site));
    best = std::min(best, worst);
  }
  if (best == kNoPath) return -kRhoMax;
  return req.go_constant - best;
}

double Scenario::do_value(const TeamState& x, int request) const {
  const auto& req = requests_.at(request);
  return x.completed.contains(request) ? req.do_constant : -req.do_constant;
}

void Scenario::predicate_values(const TeamState& x, std::span<double> out) const {
  for (std::size_t slot = 0; slot < predicates_.size(); ++slot) {
    const int r = predicate_request_[slot];
    out[slot] = predicates_.at(slot).kind == PredicateKind::Go ? go_value(x, r) : do_value(x, r);
  }
}

std::vector<double> Scenario::predicate_values(const TeamState& x) const {
  std::vector<double> out(predicates_.size());
  predicate_values(x, out);
  return out;
}

Signal Scenario::signal(std::span<const TeamState> trajectory) const {
  Signal s(predicates_.size());
  std::vector<double> row(predicates_.size());
  for (const auto& x : trajectory) {
    predicate_values(x, row);
    s.push_back(row);
  }
  return s;
}

// ---------------------------------------------------------------------------
// JSON

namespace {

std::vector<int> capability_indices(const nlohmann::json& caps,
                                    const std::vector<Request>& requests) {
  std::vector<int> out;
  for (const auto& c : caps) {
    const std::string id = c.is_string() ? c.get<std::string>() : std::to_string(c.get<int>());
    auto it = std::find_if(requests.begin(), requests.end(), [&](const Request& r) { return r.id == id; });
    if (it == requests.end()) throw ScenarioError("capability refers to unknown request '" + id + "'");
    out.push_back(static_cast<int>(it - requests.begin()));
  }
  return out;
}

EnvGraph graph_from_json(const nlohmann::json& g) {
  if (g.contains("grid")) {
    static const std::regex shape(R"((\d+)\s*x\s*(\d+))");
    std::smatch m;
    const std::string text = g.at("grid").get<std::string>();
    if (!std::regex_match(text, m, shape)) throw ScenarioError("grid must look like 'WxH'");
    return EnvGraph::grid(std::stoi(m[1]), std::stoi(m[2]));
  }
  return EnvGraph(g.at("vertices").get<int>(),
                  g.value("edges", std::vector<std::pair<Vertex, Vertex>>{}));
}

}  // namespace

Scenario Scenario::from_json(const nlohmann::json& doc) {
  try {
    EnvGraph graph = graph_from_json(doc.at("graph"));

    const auto consts = doc.value("constants", nlohmann::json::object());
    const double go_default = consts.value("go", 0.5);
    const double do_default = consts.value("do", 1.0);

    std::vector<Request> requests;
    for (const auto& r : doc.at("requests")) {
      Request req;
      req.id = r.at("id").is_string() ? r.at("id").get<std::string>()
                                      : std::to_string(r.at("id").get<int>());
      req.sites = r.at("sites").get<std::vector<Vertex>>();
      req.go_constant = r.value("go_constant", go_default);
      req.do_constant = r.value("do_constant", do_default);
      requests.push_back(std::move(req));
    }

    std::vector<Agent> agents;
    for (const auto& a : doc.at("agents")) {
      Agent ag;
      ag.name = a.at("name").get<std::string>();
      ag.start = a.at("start").get<Vertex>();
      ag.reachable = a.value("reachable", std::vector<Vertex>{});
      ag.capabilities = capability_indices(a.value("capabilities", nlohmann::json::array()), requests);
      agents.push_back(std::move(ag));
    }

    Scenario s(std::move(graph), std::move(agents), std::move(requests));
    s.set_horizon(doc.value("horizon", 100));
    s.set_reward_constant(doc.value("reward", 1.0));
    s.set_formula_text(doc.value("formula", std::string{}));
    return s;
  } catch (const nlohmann::json::exception& e) {
    throw ScenarioError(std::string("malformed scenario: ") + e.what());
  }
}

Scenario Scenario::load(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ScenarioError("cannot open scenario '" + path + "'");
  nlohmann::json doc;
  try {
    in >> doc;
  } catch (const nlohmann::json::exception& e) {
    throw ScenarioError("scenario '" + path + "' is not valid JSON: " + e.what());
  }
  return from_json(doc);
}

nlohmann::json Scenario::to_json() const {
  nlohmann::json doc;
  if (graph_.is_grid()) {
    auto [w, h] = graph_.grid_shape();
    doc["graph"] = {{"grid", std::to_string(w) + "x" + std::to_string(h)}};
  } else {
    doc["graph"] = {{"vertices", graph_.size()}, {"edges", graph_.edge_list()}};
  }
  doc["requests"] = nlohmann::json::array();
  for (const auto& r : requests_) {
    doc["requests"].push_back({{"id", r.id},
                               {"sites", r.sites},
                               {"go_constant", r.go_constant},
                               {"do_constant", r.do_constant}});
  }
  doc["agents"] = nlohmann::json::array();
  for (const auto& a : agents_) {
    std::vector<std::string> caps;
    for (int r : a.capabilities) caps.push_back(requests_[r].id);
    doc["agents"].push_back(
        {{"name", a.name}, {"start", a.start}, {"reachable", a.reachable}, {"capabilities", caps}});
  }
  doc["horizon"] = horizon_;
  doc["reward"] = reward_constant_;
  if (!formula_.empty()) doc["formula"] = formula_;
  return doc;
}

// ---------------------------------------------------------------------------
// Motion-and-service plans

std::vector<MsPlan> extract_ms_plans(const Scenario& scenario,
                                     std::span<const TeamState> trajectory,
                                     std::span<const JointAction> actions) {
  if (trajectory.empty()) throw std::invalid_argument("empty trajectory");
  if (actions.size() + 1 != trajectory.size()) {
    throw std::invalid_argument("need one joint action between consecutive team states");
  }
  const int n = scenario.agent_count();
  std::vector<MsPlan> plans(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) {
    auto& plan = plans[i];
    plan.push_back({trajectory[0].positions[i], std::nullopt});
    for (std::size_t t = 1; t < trajectory.size(); ++t) {
      const Action& a = actions[t - 1][i];
      std::optional<int> service;
      if (a.kind == Action::Kind::Serve && trajectory[t].completed.contains(a.target)) {
        service = a.target;
      }
      plan.push_back({trajectory[t].positions[i], service});
    }
    if (auto why = validate_ms_plan(scenario, i, plan); !why.empty()) {
      throw std::logic_error("extracted plan of agent " + std::to_string(i) + " is invalid: " + why);
    }
  }
  return plans;
}

std::string validate_ms_plan(const Scenario& scenario, int agent, const MsPlan& plan) {
  const Agent& ag = scenario.agents().at(agent);
  if (plan.empty()) return "plan is empty";
  if (plan[0].vertex != ag.start || plan[0].service) return "first element is not (start, eps)";
  for (std::size_t t = 0; t < plan.size(); ++t) {
    const auto& z = plan[t];
    if (!ag.can_reach(z.vertex)) return "step " + std::to_string(t) + " leaves the reachable set";
    if (z.service) {
      if (!ag.can_serve(*z.service)) return "step " + std::to_string(t) + " serves a foreign request";
      const auto& sites = scenario.requests()[*z.service].sites;
      if (std::find(sites.begin(), sites.end(), z.vertex) == sites.end()) {
        return "step " + std::to_string(t) + " serves away from the request location";
      }
    }
    if (t == 0) continue;
    const auto& prev = plan[t - 1];
    if (prev.vertex != z.vertex) {
      if (z.service) return "step " + std::to_string(t) + " moves and serves at once";
      if (!scenario.graph().adjacent(prev.vertex, z.vertex)) {
        return "step " + std::to_string(t) + " jumps between non-adjacent vertices";
      }
    }
  }
  return {};
}

}  // namespace tlmarl
