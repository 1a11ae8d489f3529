#include "latval/io.hpp"

#include <cstdio>
#include <map>
#include <sstream>

namespace latval {

namespace {

using nlohmann::json;

std::string format_double(double x) {
  char buffer[40];
  std::snprintf(buffer, sizeof(buffer), "%.17g", x);
  return buffer;
}

int rank_from(const json& doc) {
  if (!doc.contains("rank") || !doc["rank"].is_number_integer()) {
    throw validation_error("document needs an integer 'rank'");
  }
  return doc["rank"].get<int>();
}

}  // namespace

Game game_from_json(const json& doc, int max_rank) {
  if (!doc.is_object()) {
    throw validation_error("game document must be a JSON object");
  }
  int rank = rank_from(doc);
  auto lattice = DownSetLattice::make(BooleanAlgebra(rank), max_rank);
  if (!doc.contains("worth") || !doc["worth"].is_object()) {
    throw validation_error("game document needs a 'worth' object");
  }
  std::map<std::string, double> worth;
  for (const auto& [key, value] : doc["worth"].items()) {
    if (!value.is_number()) {
      throw validation_error("worth of '" + key + "' must be a number");
    }
    worth[key] = value.get<double>();
  }
  return Game::from_map(std::move(lattice), worth);
}

json game_to_json(const Game& v) {
  json worth = json::object();
  for (int i = 1; i < v.lattice().size(); ++i) {
    worth[v.lattice().key_of(i)] = v.at(i);
  }
  return json{{"rank", v.lattice().algebra().rank()}, {"worth", worth}};
}

std::string game_csv(const Game& v, const DividendTable* dividends) {
  std::ostringstream out;
  out << (dividends ? "coalition,worth,dividend\n" : "coalition,worth\n");
  for (int i = 1; i < v.lattice().size(); ++i) {
    out << v.lattice().key_of(i) << ',' << format_double(v.at(i));
    if (dividends) out << ',' << format_double(dividends->at(i));
    out << '\n';
  }
  return out.str();
}

SharingSystem sharing_from_json(const json& doc, int max_rank) {
  if (!doc.is_object()) {
    throw validation_error("sharing document must be a JSON object");
  }
  int rank = rank_from(doc);
  BooleanAlgebra algebra(rank);
  auto lattice = DownSetLattice::make(algebra, max_rank);
  if (!doc.contains("q") || !doc["q"].is_object()) {
    throw validation_error("sharing document needs a 'q' object");
  }
  std::vector<SharingSystem::Row> rows(lattice->size());
  std::vector<bool> seen(lattice->size(), false);
  seen[0] = true;
  for (const auto& [key, row] : doc["q"].items()) {
    auto index = lattice->find_key(key);
    if (!index || *index == 0) {
      throw validation_error("unknown coalition key '" + key + "'");
    }
    if (!row.is_object()) {
      throw validation_error("sharing row '" + key + "' must be an object");
    }
    seen[*index] = true;
    for (const auto& [element_key, weight] : row.items()) {
      rows[*index].emplace_back(algebra.element_from_key(element_key),
                                weight.get<double>());
    }
  }
  for (int i = 1; i < lattice->size(); ++i) {
    if (!seen[i]) {
      throw validation_error("missing sharing row for coalition '" +
                             lattice->key_of(i) + "'");
    }
  }
  try {
    return SharingSystem(std::move(lattice), std::move(rows));
  } catch (const std::invalid_argument& err) {
    throw validation_error(err.what());
  }
}

json sharing_to_json(const SharingSystem& q) {
  const DownSetLattice& lat = q.lattice();
  const BooleanAlgebra alg = lat.algebra();
  json rows = json::object();
  for (int i = 1; i < lat.size(); ++i) {
    json row = json::object();
    for (const auto& [element, weight] : q.row(i)) {
      row[alg.element_key(element)] = weight;
    }
    rows[lat.key_of(i)] = row;
  }
  return json{{"rank", alg.rank()}, {"q", rows}};
}

json allocation_to_json(const std::string& value_name,
                        const std::string& method, const Game& v,
                        const Allocation& phi, const Vector* stderrs) {
  const BooleanAlgebra alg = phi.algebra();
  json allocation = json::object();
  for (int e = 0; e < alg.size(); ++e) {
    allocation[alg.element_key(static_cast<Element>(e))] =
        phi.at(static_cast<Element>(e));
  }
  json out{{"value", value_name},
           {"method", method},
           {"allocation", allocation},
           {"efficiency_residual", efficiency_residual(v, phi)}};
  if (stderrs) {
    json se = json::object();
    for (int e = 0; e < alg.size(); ++e) {
      se[alg.element_key(static_cast<Element>(e))] = (*stderrs)(e);
    }
    out["stderr"] = se;
  }
  return out;
}

json axiom_report_to_json(const AxiomReport& report) {
  json axioms = json::object();
  for (const AxiomResult& result : report.results) {
    json entry{{"passed", result.passed}, {"trials", result.trials}};
    if (!result.passed) entry["witness"] = result.witness;
    axioms[axiom_name(result.axiom)] = entry;
  }
  return json{{"value", report.value_name},
              {"all_passed", report.all_passed()},
              {"axioms", axioms}};
}

namespace {

struct Axis {
  std::string name;
  std::vector<std::string> states;
};

Axis axis_from_json(const json& doc, const char* what) {
  if (!doc.is_object() || !doc.contains("name") || !doc.contains("states") ||
      !doc["states"].is_array() || doc["states"].empty()) {
    throw validation_error(std::string(what) +
                           " needs a name and a nonempty state list");
  }
  Axis axis;
  axis.name = doc["name"].get<std::string>();
  for (const auto& state : doc["states"]) {
    axis.states.push_back(state.is_string() ? state.get<std::string>()
                                            : state.dump());
  }
  for (std::size_t i = 0; i < axis.states.size(); ++i) {
    for (std::size_t j = i + 1; j < axis.states.size(); ++j) {
      if (axis.states[i] == axis.states[j]) {
        throw validation_error("duplicate state '" + axis.states[i] +
                               "' in " + what);
      }
    }
  }
  return axis;
}

std::vector<std::string> split_key(const std::string& key, int inputs) {
  auto bar = key.find('|');
  if (bar == std::string::npos) {
    throw validation_error("mass key '" + key + "' lacks the '|' separator");
  }
  std::vector<std::string> parts;
  std::string head = key.substr(0, bar);
  std::size_t start = 0;
  while (true) {
    auto comma = head.find(',', start);
    if (comma == std::string::npos) {
      parts.push_back(head.substr(start));
      break;
    }
    parts.push_back(head.substr(start, comma - start));
    start = comma + 1;
  }
  if (static_cast<int>(parts.size()) != inputs) {
    throw validation_error("mass key '" + key + "' names " +
                           std::to_string(parts.size()) + " input states, expected " +
                           std::to_string(inputs));
  }
  parts.push_back(key.substr(bar + 1));
  return parts;
}

int state_index(const Axis& axis, const std::string& label,
                const std::string& key) {
  for (std::size_t i = 0; i < axis.states.size(); ++i) {
    if (axis.states[i] == label) return static_cast<int>(i);
  }
  throw validation_error("mass key '" + key + "' uses unknown state '" +
                         label + "' for " + axis.name);
}

}  // namespace

JointDistribution distribution_from_json(const json& doc,
                                         DistributionMeta* meta) {
  if (!doc.is_object() || !doc.contains("inputs") ||
      !doc["inputs"].is_array() || doc["inputs"].empty()) {
    throw validation_error("distribution needs a nonempty 'inputs' array");
  }
  if (!doc.contains("target")) {
    throw validation_error("distribution needs a 'target'");
  }
  if (!doc.contains("mass") || !doc["mass"].is_object()) {
    throw validation_error("distribution needs a 'mass' object");
  }

  std::vector<Axis> inputs;
  for (const auto& axis : doc["inputs"]) {
    inputs.push_back(axis_from_json(axis, "input"));
  }
  Axis target = axis_from_json(doc["target"], "target");

  const int n = static_cast<int>(inputs.size());
  std::vector<int> sizes(n);
  Eigen::Index cells = static_cast<int>(target.states.size());
  for (int v = 0; v < n; ++v) {
    sizes[v] = static_cast<int>(inputs[v].states.size());
    cells *= sizes[v];
  }
  Array mass = Array::Zero(cells);
  for (const auto& [key, value] : doc["mass"].items()) {
    auto parts = split_key(key, n);
    int index = 0;
    for (int v = 0; v < n; ++v) {
      index = index * sizes[v] + state_index(inputs[v], parts[v], key);
    }
    index = index * static_cast<int>(target.states.size()) +
            state_index(target, parts[n], key);
    if (!value.is_number()) {
      throw validation_error("mass of '" + key + "' must be a number");
    }
    double w = value.get<double>();
    if (w < 0.0) {
      throw validation_error("mass of '" + key + "' is negative");
    }
    mass(index) += w;
  }

  JointDistribution raw = JointDistribution::normalized(
      sizes, static_cast<int>(target.states.size()), std::move(mass));
  PruneInfo prune;
  JointDistribution pruned = prune_zero_states(raw, &prune);

  if (meta) {
    meta->input_names.clear();
    meta->input_states.clear();
    for (int v = 0; v < n; ++v) {
      meta->input_names.push_back(inputs[v].name);
      std::vector<std::string> labels;
      for (int s : prune.kept[v]) labels.push_back(inputs[v].states[s]);
      meta->input_states.push_back(std::move(labels));
    }
    meta->target_name = target.name;
    meta->target_states.clear();
    for (int s : prune.kept[n]) meta->target_states.push_back(target.states[s]);
    meta->pruned = prune.changed;
    meta->pruning_note =
        prune.changed
            ? "states with zero marginal mass were removed before solving"
            : "";
  }
  return pruned;
}

json decomposition_to_json(const Decomposition& d,
                           const DistributionMeta& meta,
                           const IpfOptions& ipf) {
  const BooleanAlgebra alg = d.algebra;
  json variables = json::object();
  for (int k = 0; k < alg.rank(); ++k) {
    variables[alg.element_key(alg.atom(k))] =
        k < static_cast<int>(meta.input_names.size()) ? meta.input_names[k]
                                                      : ("X" + std::to_string(k + 1));
  }
  json psi = json::object();
  for (int e = 0; e < alg.size(); ++e) {
    psi[alg.element_key(static_cast<Element>(e))] = d.psi(e);
  }
  json game = json::object();
  const DownSetLattice& lat = d.game.game.lattice();
  for (int i = 1; i < lat.size(); ++i) {
    game[lat.key_of(i)] = d.game.game.at(i);
  }

  int total_sweeps = 0;
  double worst_residual = 0.0;
  json per_coalition = json::array();
  for (int i = 1; i < lat.size(); ++i) {
    const IpfDiagnostics& diag = d.game.diagnostics[i];
    total_sweeps += diag.sweeps;
    worst_residual = std::max(worst_residual, diag.residual);
    per_coalition.push_back(json{{"coalition", lat.key_of(i)},
                                 {"sweeps", diag.sweeps},
                                 {"residual", diag.residual},
                                 {"closed_form", diag.closed_form}});
  }

  json out{{"version", kVersion},
           {"method", d.method},
           {"variables", variables},
           {"total_information_bits", d.total_information},
           {"psi", psi},
           {"residual", d.residual},
           {"negative_flag", d.has_negative},
           {"game", game},
           {"solver",
            json{{"tolerance", ipf.tolerance},
                 {"max_sweeps", ipf.max_sweeps},
                 {"worst_residual", worst_residual},
                 {"total_sweeps", total_sweeps},
                 {"monotonicity_slack", d.game.monotonicity_slack},
                 {"per_coalition", per_coalition}}}};
  if (d.psi_stderr) {
    json se = json::object();
    for (int e = 0; e < alg.size(); ++e) {
      se[alg.element_key(static_cast<Element>(e))] = (*d.psi_stderr)(e);
    }
    out["stderr"] = se;
  }
  if (meta.pruned) out["pruning"] = meta.pruning_note;
  return out;
}

std::string information_game_csv(const InformationGame& info) {
  std::ostringstream out;
  out << "coalition,bits,sweeps,residual\n";
  const DownSetLattice& lat = info.game.lattice();
  for (int i = 1; i < lat.size(); ++i) {
    const IpfDiagnostics& diag = info.diagnostics[i];
    out << lat.key_of(i) << ',' << format_double(info.game.at(i)) << ','
        << diag.sweeps << ',' << format_double(diag.residual) << '\n';
  }
  return out.str();
}

}  // namespace latval
