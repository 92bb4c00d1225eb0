#include "tlmarl/learning.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <numeric>
#include <unordered_set>

namespace tlmarl {

std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t stream) {
  // splitmix64 finalizer over (seed, stream)
  std::uint64_t z = seed + 0x9E3779B97F4A7C15ULL * (stream + 1);
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

double sample_uniform(Rng& rng) {
  // 53 random bits in [0, 1)
  return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

void softmax(std::span<const double> row, double temperature, std::span<double> out) {
  const double top = *std::max_element(row.begin(), row.end());
  double total = 0.0;
  for (std::size_t k = 0; k < row.size(); ++k) {
    out[k] = std::exp((row[k] - top) / temperature);
    total += out[k];
  }
  for (std::size_t k = 0; k < row.size(); ++k) out[k] /= total;
}

std::vector<double> softmax(std::span<const double> row, double temperature) {
  std::vector<double> out(row.size());
  softmax(row, temperature, out);
  return out;
}

int sample_index(std::span<const double> probs, Rng& rng) {
  const double u = sample_uniform(rng);
  double acc = 0.0;
  for (std::size_t k = 0; k < probs.size(); ++k) {
    acc += probs[k];
    if (u < acc) return static_cast<int>(k);
  }
  // Rounding left u above the final partial sum; take the last positive entry.
  for (std::size_t k = probs.size(); k-- > 0;) {
    if (probs[k] > 0) return static_cast<int>(k);
  }
  return 0;
}

int argmax(std::span<const double> row) {
  return static_cast<int>(std::max_element(row.begin(), row.end()) - row.begin());
}

// ---------------------------------------------------------------------------
// Action encodings

std::string to_string(ActionEncoding e) { return e == ActionEncoding::Vertex ? "vertex" : "compass"; }

ActionEncoding action_encoding_from_string(const std::string& s) {
  if (s == "vertex") return ActionEncoding::Vertex;
  if (s == "compass") return ActionEncoding::Compass;
  throw std::invalid_argument("unknown action encoding '" + s + "'");
}

ActionCodec::ActionCodec(const Scenario& scenario, int agent, ActionEncoding encoding)
    : encoding_(encoding) {
  const Agent& ag = scenario.agents().at(agent);
  reachable_ = ag.reachable;
  capabilities_ = ag.capabilities;
  observation_of_.assign(static_cast<std::size_t>(scenario.graph().size()), -1);
  for (std::size_t k = 0; k < reachable_.size(); ++k) observation_of_[reachable_[k]] = static_cast<int>(k);

  if (encoding == ActionEncoding::Compass) {
    if (!scenario.graph().is_grid()) throw std::invalid_argument("compass actions need a grid graph");
    std::tie(grid_width_, grid_height_) = scenario.graph().grid_shape();
    labels_ = {"N", "E", "S", "W", "eps"};
  } else {
    labels_.push_back("eps");
    for (Vertex v : reachable_) labels_.push_back("v" + std::to_string(v));
  }
  for (int r : capabilities_) labels_.push_back("serve:" + scenario.requests()[r].id);
}

Action ActionCodec::decode(int index, Vertex current) const {
  if (index < 0 || index >= size()) throw std::out_of_range("action index out of range");
  const int services_from = size() - static_cast<int>(capabilities_.size());
  if (index >= services_from) return Action::serve(capabilities_[index - services_from]);
  if (encoding_ == ActionEncoding::Vertex) {
    return index == 0 ? Action::idle() : Action::move(reachable_[index - 1]);
  }
  if (index == 4) return Action::idle();
  int row = current / grid_width_;
  int col = current % grid_width_;
  switch (index) {
    case 0: --row; break;
    case 1: ++col; break;
    case 2: ++row; break;
    default: --col; break;
  }
  Vertex target = current;
  if (row >= 0 && row < grid_height_ && col >= 0 && col < grid_width_) target = row * grid_width_ + col;
  if (target < 0 || target >= static_cast<int>(observation_of_.size()) || observation_of_[target] < 0) {
    target = current;
  }
  // Moving "into" the current vertex is a legal no-op in A_i.
  return Action::move(target);
}

int ActionCodec::observation(Vertex v) const {
  const int o = observation_of_.at(v);
  if (o < 0) throw std::out_of_range("vertex outside the agent's reachable set");
  return o;
}

// ---------------------------------------------------------------------------
// Policy graphs

PolicyGraph::PolicyGraph(int nodes, int observations, int actions, double temperature)
    : nodes_(nodes), observations_(observations), actions_(actions), temperature_(temperature) {
  if (nodes < 1 || observations < 1 || actions < 1) {
    throw std::invalid_argument("policy graph dimensions must be positive");
  }
  if (!(temperature > 0)) throw std::invalid_argument("temperature must be positive");
  const auto n = static_cast<std::size_t>(nodes);
  const auto o = static_cast<std::size_t>(observations);
  params_.assign(n * actions + n * o * n + o * n, 0.0);
}

std::size_t PolicyGraph::action_offset(int node) const {
  return static_cast<std::size_t>(node) * actions_;
}
std::size_t PolicyGraph::transition_offset(int node, int observation) const {
  return static_cast<std::size_t>(nodes_) * actions_ +
         (static_cast<std::size_t>(node) * observations_ + observation) * nodes_;
}
std::size_t PolicyGraph::initial_offset(int observation) const {
  return static_cast<std::size_t>(nodes_) * actions_ +
         static_cast<std::size_t>(nodes_) * observations_ * nodes_ +
         static_cast<std::size_t>(observation) * nodes_;
}

std::span<const double> PolicyGraph::action_row(int node) const {
  return {params_.data() + action_offset(node), static_cast<std::size_t>(actions_)};
}
std::span<const double> PolicyGraph::transition_row(int node, int observation) const {
  return {params_.data() + transition_offset(node, observation), static_cast<std::size_t>(nodes_)};
}
std::span<const double> PolicyGraph::initial_row(int observation) const {
  return {params_.data() + initial_offset(observation), static_cast<std::size_t>(nodes_)};
}

namespace {

constexpr std::size_t kMaxRow = 256;

int sample_row(std::span<const double> row, double temperature, Rng& rng) {
  double buf[kMaxRow];
  std::vector<double> heap;
  std::span<double> probs;
  if (row.size() <= kMaxRow) {
    probs = {buf, row.size()};
  } else {
    heap.resize(row.size());
    probs = heap;
  }
  softmax(row, temperature, probs);
  return sample_index(probs, rng);
}

// Adds scale * d/dw log softmax(w / temperature)[chosen] into grad[offset..].
void add_score(std::span<const double> row, int chosen, double temperature, double scale,
               double* grad) {
  double buf[kMaxRow];
  std::vector<double> heap;
  std::span<double> probs;
  if (row.size() <= kMaxRow) {
    probs = {buf, row.size()};
  } else {
    heap.resize(row.size());
    probs = heap;
  }
  softmax(row, temperature, probs);
  const double s = scale / temperature;
  for (std::size_t k = 0; k < row.size(); ++k) grad[k] -= s * probs[k];
  grad[chosen] += s;
}

}  // namespace

int PolicyGraph::sample_initial(int observation, Rng& rng) const {
  return sample_row(initial_row(observation), temperature_, rng);
}
int PolicyGraph::sample_action(int node, Rng& rng) const {
  return sample_row(action_row(node), temperature_, rng);
}
int PolicyGraph::sample_transition(int node, int observation, Rng& rng) const {
  return sample_row(transition_row(node, observation), temperature_, rng);
}

nlohmann::json PolicyGraph::to_json() const {
  return {{"nodes", nodes_},
          {"observations", observations_},
          {"actions", actions_},
          {"temperature", temperature_},
          {"parameters", params_}};
}

PolicyGraph PolicyGraph::from_json(const nlohmann::json& j) {
  PolicyGraph pg(j.at("nodes").get<int>(), j.at("observations").get<int>(), j.at("actions").get<int>(),
                 j.at("temperature").get<double>());
  auto params = j.at("parameters").get<std::vector<double>>();
  if (params.size() != pg.params_.size()) throw std::invalid_argument("policy graph parameter count mismatch");
  pg.params_ = std::move(params);
  return pg;
}

double log_probability(const PolicyGraph& pg, const ControllerTrace& trace) {
  double total = 0.0;
  for (std::size_t t = 0; t < trace.size(); ++t) {
    const auto& step = trace[t];
    const auto node_row = t == 0 ? pg.initial_row(step.observation)
                                 : pg.transition_row(trace[t - 1].node, step.observation);
    total += std::log(softmax(node_row, pg.temperature())[step.node]);
    total += std::log(softmax(pg.action_row(step.node), pg.temperature())[step.action]);
  }
  return total;
}

void accumulate_step_gradient(const PolicyGraph& pg, const ControllerTrace& trace, std::size_t t,
                              double scale, std::span<double> grad) {
  const auto& step = trace.at(t);
  const double theta = pg.temperature();
  if (t == 0) {
    add_score(pg.initial_row(step.observation), step.node, theta, scale,
              grad.data() + pg.initial_offset(step.observation));
  } else {
    const int prev = trace[t - 1].node;
    add_score(pg.transition_row(prev, step.observation), step.node, theta, scale,
              grad.data() + pg.transition_offset(prev, step.observation));
  }
  add_score(pg.action_row(step.node), step.action, theta, scale, grad.data() + pg.action_offset(step.node));
}

std::vector<double> log_probability_gradient(const PolicyGraph& pg, const ControllerTrace& trace) {
  std::vector<double> grad(pg.parameters().size(), 0.0);
  for (std::size_t t = 0; t < trace.size(); ++t) accumulate_step_gradient(pg, trace, t, 1.0, grad);
  return grad;
}

void pg_update(PolicyGraph& pg, const ControllerTrace& trace, std::span<const double> rewards,
               double gamma, double alpha, double decay) {
  if (trace.size() != rewards.size()) throw std::invalid_argument("trace and reward lengths differ");
  if (!(decay > 0.0 && decay <= 1.0)) throw std::invalid_argument("trace decay must lie in (0, 1]");
  // sum_t gamma^t r_t z_t with z_t = decay * z_{t-1} + score_t equals
  // sum_k score_k * (sum_{t>=k} decay^(t-k) gamma^t r_t); the scores are all
  // taken at the pre-update parameters.
  std::vector<double> to_go(rewards.size() + 1, 0.0);
  std::vector<double> powers(rewards.size());
  double g = 1.0;
  for (auto& p : powers) {
    p = g;
    g *= gamma;
  }
  for (std::size_t t = rewards.size(); t-- > 0;) to_go[t] = decay * to_go[t + 1] + powers[t] * rewards[t];

  std::vector<double> grad(pg.parameters().size(), 0.0);
  bool any = false;
  for (std::size_t k = 0; k < trace.size(); ++k) {
    if (to_go[k] == 0.0) continue;
    any = true;
    accumulate_step_gradient(pg, trace, k, to_go[k], grad);
  }
  if (!any) return;
  auto& w = pg.parameters();
  for (std::size_t k = 0; k < w.size(); ++k) w[k] += alpha * grad[k];
}

// ---------------------------------------------------------------------------
// Q-learning

QTable::QTable(int observations, int actions)
    : observations_(observations),
      actions_(actions),
      values_(static_cast<std::size_t>(observations) * actions, 0.0) {
  if (observations < 1 || actions < 1) throw std::invalid_argument("Q-table dimensions must be positive");
}

int QTable::epsilon_greedy(int o, double epsilon, Rng& rng) const {
  if (sample_uniform(rng) < epsilon) return static_cast<int>(rng() % static_cast<std::uint64_t>(actions_));
  return greedy(o);
}

nlohmann::json QTable::to_json() const {
  return {{"observations", observations_}, {"actions", actions_}, {"values", values_}};
}

QTable QTable::from_json(const nlohmann::json& j) {
  QTable q(j.at("observations").get<int>(), j.at("actions").get<int>());
  auto values = j.at("values").get<std::vector<double>>();
  if (values.size() != q.values_.size()) throw std::invalid_argument("Q-table size mismatch");
  q.values_ = std::move(values);
  return q;
}

void q_update(QTable& table, int o, int a, double r, int o_next, bool done, double alpha, double gamma) {
  double target = r;
  if (!done) {
    const auto row = table.row(o_next);
    target += gamma * *std::max_element(row.begin(), row.end());
  }
  table.at(o, a) += alpha * (target - table.at(o, a));
}

// ---------------------------------------------------------------------------
// Configuration and checkpoints

std::string to_string(LearnerKind k) {
  return k == LearnerKind::PolicyGraph ? "policy-graph" : "q-memoryless";
}

LearnerKind learner_from_string(const std::string& s) {
  if (s == "policy-graph") return LearnerKind::PolicyGraph;
  if (s == "q-memoryless") return LearnerKind::QMemoryless;
  throw std::invalid_argument("unknown learner '" + s + "'");
}

void TrainConfig::validate() const {
  if (episodes < 0) throw std::invalid_argument("episodes must be non-negative");
  if (horizon < 0) throw std::invalid_argument("horizon must be non-negative");
  if (!(gamma > 0 && gamma <= 1)) throw std::invalid_argument("gamma must lie in (0, 1]");
  if (!(alpha > 0)) throw std::invalid_argument("alpha must be positive");
  if (!(temperature > 0)) throw std::invalid_argument("temperature must be positive");
  if (nodes < 1) throw std::invalid_argument("need at least one internal state");
  if (!(trace_decay > 0 && trace_decay <= 1)) throw std::invalid_argument("trace_decay must lie in (0, 1]");
  if (!(trap_penalty >= 0 && trap_penalty <= kRhoMax)) {
    throw std::invalid_argument("trap_penalty must lie in [0, rho_max]");
  }
  if (!(q_alpha > 0 && q_alpha <= 1)) throw std::invalid_argument("q_alpha must lie in (0, 1]");
  if (epsilon_start < 0 || epsilon_start > 1 || epsilon_end < 0 || epsilon_end > 1) {
    throw std::invalid_argument("exploration rates must lie in [0, 1]");
  }
}

nlohmann::json TrainConfig::to_json() const {
  return {{"episodes", episodes},
          {"horizon", horizon},
          {"gamma", gamma},
          {"alpha", alpha},
          {"temperature", temperature},
          {"nodes", nodes},
          {"lambda_rho", mix.rho},
          {"lambda_energy", mix.energy},
          {"trace_decay", trace_decay},
          {"trap_penalty", trap_penalty},
          {"seed", seed},
          {"learner", to_string(learner)},
          {"encoding", to_string(encoding)},
          {"q_alpha", q_alpha},
          {"epsilon_start", epsilon_start},
          {"epsilon_end", epsilon_end}};
}

TrainConfig TrainConfig::from_json(const nlohmann::json& j) {
  TrainConfig c;
  c.episodes = j.value("episodes", c.episodes);
  c.horizon = j.value("horizon", c.horizon);
  c.gamma = j.value("gamma", c.gamma);
  c.alpha = j.value("alpha", c.alpha);
  c.temperature = j.value("temperature", c.temperature);
  c.nodes = j.value("nodes", c.nodes);
  c.mix.rho = j.value("lambda_rho", c.mix.rho);
  c.mix.energy = j.value("lambda_energy", c.mix.energy);
  c.trace_decay = j.value("trace_decay", c.trace_decay);
  c.trap_penalty = j.value("trap_penalty", c.trap_penalty);
  c.seed = j.value("seed", c.seed);
  c.learner = learner_from_string(j.value("learner", to_string(c.learner)));
  c.encoding = action_encoding_from_string(j.value("encoding", to_string(c.encoding)));
  c.q_alpha = j.value("q_alpha", c.q_alpha);
  c.epsilon_start = j.value("epsilon_start", c.epsilon_start);
  c.epsilon_end = j.value("epsilon_end", c.epsilon_end);
  return c;
}

nlohmann::json Policies::to_json() const {
  nlohmann::json j;
  j["format"] = "tlmarl-policies/1";
  j["learner"] = to_string(kind);
  j["encoding"] = to_string(encoding);
  j["config"] = config.to_json();
  j["agents"] = nlohmann::json::array();
  if (kind == LearnerKind::PolicyGraph) {
    for (const auto& g : graphs) j["agents"].push_back(g.to_json());
  } else {
    for (const auto& t : tables) j["agents"].push_back(t.to_json());
  }
  return j;
}

Policies Policies::from_json(const nlohmann::json& j) {
  if (j.value("format", std::string{}) != "tlmarl-policies/1") {
    throw std::invalid_argument("not a policy checkpoint");
  }
  Policies p;
  p.kind = learner_from_string(j.at("learner").get<std::string>());
  p.encoding = action_encoding_from_string(j.at("encoding").get<std::string>());
  p.config = TrainConfig::from_json(j.at("config"));
  for (const auto& a : j.at("agents")) {
    if (p.kind == LearnerKind::PolicyGraph) {
      p.graphs.push_back(PolicyGraph::from_json(a));
    } else {
      p.tables.push_back(QTable::from_json(a));
    }
  }
  return p;
}

std::vector<ActionCodec> make_codecs(const Game& game, ActionEncoding encoding) {
  std::vector<ActionCodec> codecs;
  for (int i = 0; i < game.agent_count(); ++i) codecs.emplace_back(game.scenario(), i, encoding);
  return codecs;
}

Policies initial_policies(const Game& game, const TrainConfig& config) {
  config.validate();
  Policies p;
  p.kind = config.learner;
  p.encoding = config.encoding;
  p.config = config;
  for (const auto& codec : make_codecs(game, config.encoding)) {
    if (p.kind == LearnerKind::PolicyGraph) {
      p.graphs.emplace_back(config.nodes, codec.observation_count(), codec.size(), config.temperature);
    } else {
      p.tables.emplace_back(codec.observation_count(), codec.size());
    }
  }
  return p;
}

// ---------------------------------------------------------------------------
// Episodes

namespace {

/// Steps the game horizon down to the configured one when requested.
int episode_horizon(const Game& game, const TrainConfig& config) {
  return config.horizon > 0 ? std::min(config.horizon, game.horizon()) : game.horizon();
}

std::vector<Rng> agent_streams(std::uint64_t seed, int agents) {
  std::vector<Rng> out;
  for (int i = 0; i < agents; ++i) out.emplace_back(derive_seed(seed, static_cast<std::uint64_t>(i)));
  return out;
}

/// Per-agent decision state shared by training and rollouts.
class Controllers {
 public:
  Controllers(const Policies& policies, const std::vector<ActionCodec>& codecs)
      : policies_(policies), codecs_(codecs), nodes_(codecs.size(), 0) {}

  // Chooses internal nodes (policy graphs) and returns action indices.
  int first(int agent, int observation, bool greedy, Rng& rng) {
    if (policies_.kind == LearnerKind::PolicyGraph) {
      const auto& pg = policies_.graphs[agent];
      nodes_[agent] = greedy ? pg.greedy_initial(observation) : pg.sample_initial(observation, rng);
      return emit(agent, greedy, rng);
    }
    return table_action(agent, observation, greedy, rng);
  }

  int next(int agent, int observation, bool greedy, Rng& rng) {
    if (policies_.kind == LearnerKind::PolicyGraph) {
      const auto& pg = policies_.graphs[agent];
      nodes_[agent] = greedy ? pg.greedy_transition(nodes_[agent], observation)
                             : pg.sample_transition(nodes_[agent], observation, rng);
      return emit(agent, greedy, rng);
    }
    return table_action(agent, observation, greedy, rng);
  }

  int node(int agent) const { return nodes_[agent]; }
  double epsilon = 0.0;

 private:
  int emit(int agent, bool greedy, Rng& rng) {
    const auto& pg = policies_.graphs[agent];
    return greedy ? pg.greedy_action(nodes_[agent]) : pg.sample_action(nodes_[agent], rng);
  }

  int table_action(int agent, int observation, bool greedy, Rng& rng) {
    const auto& q = policies_.tables[agent];
    return greedy ? q.greedy(observation) : q.epsilon_greedy(observation, epsilon, rng);
  }

  const Policies& policies_;
  const std::vector<ActionCodec>& codecs_;
  std::vector<int> nodes_;
};

}  // namespace

TrainResult train(const Game& base_game, const TrainConfig& config) {
  Game game = base_game;
  game.set_trap_penalty(config.trap_penalty);
  TrainResult result{initial_policies(game, config), {}};
  Policies& policies = result.policies;
  const auto codecs = make_codecs(game, config.encoding);
  const int n = game.agent_count();
  const int horizon = episode_horizon(game, config);
  const double c = game.scenario().reward_constant();
  auto streams = agent_streams(config.seed, n);
  Controllers controllers(policies, codecs);

  std::vector<ControllerTrace> traces(static_cast<std::size_t>(n));
  std::vector<std::vector<double>> rewards(static_cast<std::size_t>(n));
  std::vector<int> obs(static_cast<std::size_t>(n));
  std::vector<int> act(static_cast<std::size_t>(n));
  JointAction joint(static_cast<std::size_t>(n));
  result.metrics.reserve(static_cast<std::size_t>(config.episodes));

  for (int episode = 0; episode < config.episodes; ++episode) {
    if (config.learner == LearnerKind::QMemoryless) {
      const double frac = config.episodes > 1 ? double(episode) / (config.episodes - 1) : 1.0;
      controllers.epsilon = config.epsilon_start + (config.epsilon_end - config.epsilon_start) * frac;
    }
    for (int i = 0; i < n; ++i) {
      traces[i].clear();
      rewards[i].clear();
    }
    EpisodeMetrics m;
    GameState s = game.reset();
    m.q_trajectory.push_back(s.q);
    for (int i = 0; i < n; ++i) {
      obs[i] = codecs[i].observation(game.observe(i, s));
      act[i] = controllers.first(i, obs[i], false, streams[i]);
      traces[i].push_back({obs[i], controllers.node(i), act[i]});
    }
    double discount = 1.0;
    while (true) {
      for (int i = 0; i < n; ++i) joint[i] = codecs[i].decode(act[i], s.team.positions[i]);
      StepOutcome out = game.step(s, joint);
      const bool done = out.done || out.next.t >= horizon;
      for (int i = 0; i < n; ++i) rewards[i].push_back(out.total(i, config.mix));
      m.normalized_reward += discount * out.base_reward / c;
      discount *= config.gamma;
      m.success = out.success;
      m.q_trajectory.push_back(out.next.q);
      s = std::move(out.next);

      if (config.learner == LearnerKind::QMemoryless) {
        for (int i = 0; i < n; ++i) {
          const int o_next = codecs[i].observation(game.observe(i, s));
          q_update(policies.tables[i], obs[i], act[i], rewards[i].back(), o_next, done, config.q_alpha,
                   config.gamma);
          obs[i] = o_next;
        }
        if (done) break;
        for (int i = 0; i < n; ++i) act[i] = controllers.next(i, obs[i], false, streams[i]);
        continue;
      }

      if (done) break;
      for (int i = 0; i < n; ++i) {
        obs[i] = codecs[i].observation(game.observe(i, s));
        act[i] = controllers.next(i, obs[i], false, streams[i]);
        traces[i].push_back({obs[i], controllers.node(i), act[i]});
      }
    }
    m.length = s.t;

    if (config.learner == LearnerKind::PolicyGraph) {
      for (int i = 0; i < n; ++i) pg_update(policies.graphs[i], traces[i], rewards[i], config.gamma, config.alpha,
                                            config.trace_decay);
    }
    result.metrics.push_back(std::move(m));
  }
  return result;
}

EpisodeTrace rollout(const Game& base_game, const Policies& policies, bool greedy, std::uint64_t seed) {
  Game game = base_game;
  game.set_trap_penalty(policies.config.trap_penalty);
  const auto codecs = make_codecs(game, policies.encoding);
  const int n = game.agent_count();
  const int horizon = episode_horizon(game, policies.config);
  auto streams = agent_streams(seed, n);
  Controllers controllers(policies, codecs);
  controllers.epsilon = policies.config.epsilon_end;

  EpisodeTrace trace;
  GameState s = game.reset();
  std::vector<int> act(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) {
    act[i] = controllers.first(i, codecs[i].observation(game.observe(i, s)), greedy, streams[i]);
  }
  while (true) {
    JointAction joint(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) joint[i] = codecs[i].decode(act[i], s.team.positions[i]);
    StepOutcome out = game.step(s, joint);
    const bool done = out.done || out.next.t >= horizon;
    out.done = done;
    trace.push_back({s, joint, out});
    s = out.next;
    if (done) break;
    for (int i = 0; i < n; ++i) {
      act[i] = controllers.next(i, codecs[i].observation(game.observe(i, s)), greedy, streams[i]);
    }
  }
  return trace;
}

EvaluationReport evaluate(const Game& game, const Formula& phi, const Policies& policies, int episodes,
                          bool greedy, std::uint64_t seed) {
  EvaluationReport report;
  for (int e = 0; e < episodes; ++e) {
    auto trace = rollout(game, policies, greedy, derive_seed(seed, 1000 + static_cast<std::uint64_t>(e)));
    const bool success = trace.back().outcome.success;
    const auto traj = team_trajectory(trace);
    const bool sat = satisfies(game.scenario().signal(traj), phi);
    ++report.episodes;
    report.successes += success;
    report.satisfied += sat;
    report.inconsistent += success != sat;
    report.lengths.push_back(static_cast<int>(trace.size()));
    report.traces.push_back(std::move(trace));
  }
  return report;
}

int minimum_accepting_steps(const Game& game, int max_steps) {
  const Scenario& sc = game.scenario();
  const int n = sc.agent_count();

  // Effective action sets: moves to non-neighbors duplicate eps.
  std::vector<std::vector<std::vector<Action>>> options(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) {
    const Agent& ag = sc.agents()[i];
    options[i].resize(static_cast<std::size_t>(sc.graph().size()));
    for (Vertex v : ag.reachable) {
      auto& opts = options[i][v];
      opts.push_back(Action::idle());
      for (Vertex u : sc.graph().neighbors(v)) {
        if (ag.can_reach(u)) opts.push_back(Action::move(u));
      }
      for (int r : ag.capabilities) opts.push_back(Action::serve(r));
    }
  }

  auto key = [&](const GameState& s) {
    std::uint64_t k = static_cast<std::uint64_t>(s.q);
    for (Vertex v : s.team.positions) k = k * static_cast<std::uint64_t>(sc.graph().size()) + static_cast<std::uint64_t>(v);
    return k;
  };

  GameState start = game.reset();
  if (game.fspa().is_final(start.q)) return 0;
  std::unordered_set<std::uint64_t> seen{key(start)};
  std::vector<GameState> frontier{start};
  for (int depth = 1; depth <= max_steps && !frontier.empty(); ++depth) {
    std::vector<GameState> next_frontier;
    for (const auto& s : frontier) {
      std::vector<std::size_t> idx(static_cast<std::size_t>(n), 0);
      JointAction joint(static_cast<std::size_t>(n));
      while (true) {
        for (int i = 0; i < n; ++i) joint[i] = options[i][s.team.positions[i]][idx[i]];
        GameState probe = s;
        probe.t = 0;  // depth is tracked by the search, not the game clock
        StepOutcome out = game.step(probe, joint);
        if (out.success) return depth;
        if (!game.fspa().is_trap(out.next.q) && seen.insert(key(out.next)).second) {
          next_frontier.push_back(out.next);
        }
        int i = 0;
        while (i < n && ++idx[i] == options[i][s.team.positions[i]].size()) idx[i++] = 0;
        if (i == n) break;
      }
    }
    frontier = std::move(next_frontier);
  }
  return -1;
}

}  // namespace tlmarl
