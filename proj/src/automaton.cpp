#include "tlmarl/automaton.hpp"

#include <algorithm>
#include <deque>
#include <fstream>
#include <functional>
#include <optional>
#include <queue>
#include <set>
#include <unordered_map>

namespace tlmarl {

EnergyTable compute_energy(std::size_t state_count, const std::vector<FspaEdge>& edges,
                           const std::vector<bool>& final_states) {
  std::vector<std::vector<std::pair<FspaState, double>>> incoming(state_count);
  for (const auto& e : edges) {
    if (e.from != e.to) incoming[e.to].emplace_back(e.from, e.weight);
  }

  EnergyTable dist(state_count, kInfiniteEnergy);
  using Item = std::pair<double, FspaState>;
  std::priority_queue<Item, std::vector<Item>, std::greater<>> heap;
  for (std::size_t q = 0; q < state_count; ++q) {
    if (final_states[q]) {
      dist[q] = 0.0;
      heap.emplace(0.0, static_cast<FspaState>(q));
    }
  }
  while (!heap.empty()) {
    auto [d, q] = heap.top();
    heap.pop();
    if (d > dist[q]) continue;
    for (auto [p, w] : incoming[q]) {
      if (d + w < dist[p]) {
        dist[p] = d + w;
        heap.emplace(dist[p], p);
      }
    }
  }
  return dist;
}

Fspa::Fspa(std::vector<std::string> names, FspaState initial, std::vector<FspaState> finals,
           std::vector<FspaState> traps, std::vector<FspaEdge> edges)
    : names_(std::move(names)),
      initial_(initial),
      final_(names_.size(), false),
      trap_(names_.size(), false),
      edges_(std::move(edges)),
      outgoing_(names_.size()) {
  const auto n = static_cast<FspaState>(names_.size());
  auto valid = [n](FspaState q) { return q >= 0 && q < n; };

  if (n == 0) throw FspaError("automaton has no states");
  std::set<std::string> seen;
  for (const auto& s : names_) {
    if (!seen.insert(s).second) throw FspaError("duplicate state id '" + s + "'");
  }
  if (!valid(initial_)) throw FspaError("initial state is not a declared state");
  if (finals.empty()) throw FspaError("final set is empty");
  for (FspaState q : finals) {
    if (!valid(q)) throw FspaError("final state is not a declared state");
    final_[q] = true;
  }
  for (FspaState q : traps) {
    if (!valid(q)) throw FspaError("trap state is not a declared state");
    if (final_[q]) throw FspaError("state '" + names_[q] + "' is both final and trap");
    trap_[q] = true;
  }

  for (std::size_t k = 0; k < edges_.size(); ++k) {
    const auto& e = edges_[k];
    if (!valid(e.from) || !valid(e.to)) throw FspaError("edge with an undeclared endpoint");
    if (!(e.weight > 0)) throw FspaError("edge weights must be positive");
    if (e.guard.has_temporal()) throw FspaError("edge guard contains a temporal operator");
    if (is_terminal(e.from) && e.to != e.from) {
      throw FspaError("final/trap state '" + names_[e.from] + "' has an outgoing edge");
    }
    outgoing_[e.from].push_back(k);
  }

  for (FspaState q = 0; q < n; ++q) {
    std::optional<Formula> d;
    for (std::size_t k : outgoing_[q]) {
      const auto& e = edges_[k];
      if (e.to == q || trap_[e.to]) continue;
      d = d ? Formula::disj(*d, e.guard) : e.guard;
    }
    disjunction_.push_back(d ? *d : Formula::falsum());
  }

  energy_ = compute_energy(names_.size(), edges_, final_);
  if (energy_[initial_] == kInfiniteEnergy) {
    throw FspaError("no final state is reachable from the initial state");
  }

  std::vector<bool> reached(names_.size(), false);
  std::deque<FspaState> queue{initial_};
  reached[initial_] = true;
  while (!queue.empty()) {
    const FspaState q = queue.front();
    queue.pop_front();
    for (std::size_t k : outgoing_[q]) {
      if (!reached[edges_[k].to]) {
        reached[edges_[k].to] = true;
        queue.push_back(edges_[k].to);
      }
    }
  }
  for (FspaState q = 0; q < n; ++q) {
    if (!reached[q]) warnings_.push_back("state '" + names_[q] + "' is unreachable from the initial state");
    if (!trap_[q] && energy_[q] == kInfiniteEnergy) {
      warnings_.push_back("non-trap state '" + names_[q] + "' cannot reach a final state");
    }
  }
}

FspaState Fspa::index_of(const std::string& name) const {
  auto it = std::find(names_.begin(), names_.end(), name);
  return it == names_.end() ? -1 : static_cast<FspaState>(it - names_.begin());
}

FspaState Fspa::step(FspaState q, std::span<const double> row) const {
  if (is_terminal(q)) return q;
  for (std::size_t k : outgoing_.at(q)) {
    if (eval_guard(row, edges_[k].guard) > 0.0) return edges_[k].to;
  }
  return q;
}

namespace {

std::string state_id(const nlohmann::json& j) {
  return j.is_string() ? j.get<std::string>() : std::to_string(j.get<long long>());
}

}  // namespace

Fspa Fspa::from_json(const nlohmann::json& doc, const PredicateTable& predicates) {
  try {
    std::vector<std::string> names;
    for (const auto& s : doc.at("states")) names.push_back(state_id(s));
    std::unordered_map<std::string, FspaState> index;
    for (std::size_t k = 0; k < names.size(); ++k) index.emplace(names[k], static_cast<FspaState>(k));
    auto lookup = [&](const nlohmann::json& j) -> FspaState {
      auto it = index.find(state_id(j));
      if (it == index.end()) throw FspaError("reference to undeclared state '" + state_id(j) + "'");
      return it->second;
    };
    auto lookup_all = [&](const char* key) {
      std::vector<FspaState> out;
      for (const auto& s : doc.value(key, nlohmann::json::array())) out.push_back(lookup(s));
      return out;
    };

    std::vector<FspaEdge> edges;
    for (const auto& e : doc.at("edges")) {
      FspaEdge edge{0, 0, Formula::top(), {}, 1.0};
      if (e.is_array()) {
        if (e.size() < 3 || e.size() > 4) throw FspaError("edge must be [from, to, guard, weight?]");
        edge.from = lookup(e[0]);
        edge.to = lookup(e[1]);
        edge.guard_text = e[2].get<std::string>();
        if (e.size() == 4) edge.weight = e[3].get<double>();
      } else {
        edge.from = lookup(e.at("from"));
        edge.to = lookup(e.at("to"));
        edge.guard_text = e.at("guard").get<std::string>();
        edge.weight = e.value("weight", 1.0);
      }
      try {
        edge.guard = parse_guard(edge.guard_text, predicates);
      } catch (const ParseError& err) {
        throw FspaError("malformed guard '" + edge.guard_text + "': " + err.what());
      }
      edges.push_back(std::move(edge));
    }
    return Fspa(std::move(names), lookup(doc.at("initial")), lookup_all("final"),
                lookup_all("trap"), std::move(edges));
  } catch (const nlohmann::json::exception& e) {
    throw FspaError(std::string("malformed automaton document: ") + e.what());
  }
}

Fspa Fspa::load(const std::string& path, const PredicateTable& predicates) {
  std::ifstream in(path);
  if (!in) throw FspaError("cannot open automaton '" + path + "'");
  nlohmann::json doc;
  try {
    in >> doc;
  } catch (const nlohmann::json::exception& e) {
    throw FspaError("automaton '" + path + "' is not valid JSON: " + e.what());
  }
  return from_json(doc, predicates);
}

nlohmann::json Fspa::to_json() const {
  nlohmann::json doc;
  doc["states"] = names_;
  doc["initial"] = names_[initial_];
  doc["final"] = nlohmann::json::array();
  doc["trap"] = nlohmann::json::array();
  for (std::size_t q = 0; q < names_.size(); ++q) {
    if (final_[q]) doc["final"].push_back(names_[q]);
    if (trap_[q]) doc["trap"].push_back(names_[q]);
  }
  doc["edges"] = nlohmann::json::array();
  for (const auto& e : edges_) {
    doc["edges"].push_back({{"from", names_[e.from]},
                            {"to", names_[e.to]},
                            {"guard", e.guard_text},
                            {"weight", e.weight}});
  }
  return doc;
}

std::vector<std::string> guard_overlaps(const Fspa& fspa,
                                        const std::vector<std::vector<double>>& rows,
                                        std::size_t limit) {
  std::vector<std::string> out;
  for (FspaState q = 0; q < static_cast<FspaState>(fspa.size()); ++q) {
    if (fspa.is_terminal(q)) continue;
    for (std::size_t r = 0; r < rows.size() && out.size() < limit; ++r) {
      std::vector<std::string> firing;
      for (std::size_t k : fspa.outgoing(q)) {
        const auto& e = fspa.edges()[k];
        if (e.to != q && eval_guard(rows[r], e.guard) > 0.0) firing.push_back(fspa.name(e.to));
      }
      if (firing.size() > 1) {
        std::string msg = "state '" + fspa.name(q) + "': guards to";
        for (const auto& t : firing) msg += " '" + t + "'";
        msg += " fire together on sample " + std::to_string(r);
        out.push_back(std::move(msg));
        break;
      }
    }
  }
  return out;
}

}  // namespace tlmarl
