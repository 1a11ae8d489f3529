#include "latval/info.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <numeric>

namespace latval {

namespace {

double log2_safe(double x) { return std::log2(x); }

void require_same_shape(const JointDistribution& a,
                        const JointDistribution& b) {
  if (a.input_sizes() != b.input_sizes() ||
      a.target_size() != b.target_size()) {
    throw std::invalid_argument("distributions have different state spaces");
  }
}

}  // namespace

JointDistribution::JointDistribution(std::vector<int> input_sizes,
                                     int target_size, Array mass)
    : input_sizes_(std::move(input_sizes)),
      target_size_(target_size),
      mass_(std::move(mass)) {
  if (input_sizes_.empty()) {
    throw std::invalid_argument("at least one input variable required");
  }
  Eigen::Index cells = target_size_;
  if (target_size_ < 1) {
    throw std::invalid_argument("target needs at least one state");
  }
  for (int size : input_sizes_) {
    if (size < 1) {
      throw std::invalid_argument("every input needs at least one state");
    }
    cells *= size;
  }
  if (mass_.size() != cells) {
    throw std::invalid_argument("mass array does not match the state space");
  }
  if ((mass_ < 0.0).any()) {
    throw std::invalid_argument("probability mass must be nonnegative");
  }
  if (std::abs(mass_.sum() - 1.0) > 1e-12) {
    throw std::invalid_argument("probability mass must sum to one");
  }
}

JointDistribution JointDistribution::normalized(std::vector<int> input_sizes,
                                                int target_size, Array mass,
                                                double tol) {
  double total = mass.sum();
  if (std::abs(total - 1.0) > tol) {
    throw validation_error("probability mass sums to " + std::to_string(total) +
                           ", outside the normalization tolerance");
  }
  if (total <= 0.0) {
    throw validation_error("probability mass is empty");
  }
  mass /= total;
  return JointDistribution(std::move(input_sizes), target_size,
                           std::move(mass));
}

int JointDistribution::cell_index(std::span<const int> inputs,
                                  int target) const {
  if (static_cast<int>(inputs.size()) != num_inputs()) {
    throw std::invalid_argument("wrong number of input states");
  }
  int index = 0;
  for (int v = 0; v < num_inputs(); ++v) {
    if (inputs[v] < 0 || inputs[v] >= input_sizes_[v]) {
      throw std::invalid_argument("input state out of range");
    }
    index = index * input_sizes_[v] + inputs[v];
  }
  if (target < 0 || target >= target_size_) {
    throw std::invalid_argument("target state out of range");
  }
  return index * target_size_ + target;
}

double entropy(const Array& mass) {
  double h = 0.0;
  for (Eigen::Index i = 0; i < mass.size(); ++i) {
    if (mass(i) > 0.0) h -= mass(i) * log2_safe(mass(i));
  }
  return h;
}

double entropy(const JointDistribution& q) { return entropy(q.mass()); }

double kl_divergence(const JointDistribution& q1, const JointDistribution& q2) {
  require_same_shape(q1, q2);
  double d = 0.0;
  for (Eigen::Index i = 0; i < q1.cells(); ++i) {
    double a = q1.mass()(i);
    if (a <= 0.0) continue;
    double b = q2.mass()(i);
    if (b <= 0.0) return std::numeric_limits<double>::infinity();
    d += a * log2_safe(a / b);
  }
  return std::max(d, 0.0);
}

namespace {

// Projection of the full cell space onto (X_A [, Y]) bucket indices.
struct Projection {
  std::vector<int> bucket_of;  // per cell
  int buckets;
};

Projection make_projection(const JointDistribution& p, Element predictor,
                           bool include_target) {
  const int n = p.num_inputs();
  Projection proj;
  proj.buckets = include_target ? p.target_size() : 1;
  for (int v = 0; v < n; ++v) {
    if ((predictor >> v) & 1u) proj.buckets *= p.input_sizes()[v];
  }
  proj.bucket_of.resize(p.cells());
  std::vector<int> state(n, 0);
  Eigen::Index cell = 0;
  // Row-major walk mirrors cell_index: x_1 slowest, target fastest.
  std::function<void(int)> recurse = [&](int v) {
    if (v == n) {
      for (int y = 0; y < p.target_size(); ++y, ++cell) {
        int bucket = 0;
        for (int u = 0; u < n; ++u) {
          if ((predictor >> u) & 1u) {
            bucket = bucket * p.input_sizes()[u] + state[u];
          }
        }
        if (include_target) bucket = bucket * p.target_size() + y;
        proj.bucket_of[cell] = bucket;
      }
      return;
    }
    for (state[v] = 0; state[v] < p.input_sizes()[v]; ++state[v]) recurse(v + 1);
    state[v] = 0;
  };
  recurse(0);
  return proj;
}

Array project(const Array& mass, const Projection& proj) {
  Array out = Array::Zero(proj.buckets);
  for (Eigen::Index i = 0; i < mass.size(); ++i) {
    out(proj.bucket_of[i]) += mass(i);
  }
  return out;
}

}  // namespace

Marginal marginalize(const JointDistribution& p, Element predictor,
                     bool include_target) {
  if (!p.predictor_algebra().contains(predictor)) {
    throw std::invalid_argument("predictor outside the variable set");
  }
  Projection proj = make_projection(p, predictor, include_target);
  Marginal out;
  for (int v = 0; v < p.num_inputs(); ++v) {
    if ((predictor >> v) & 1u) out.dims.push_back(p.input_sizes()[v]);
  }
  if (include_target) out.dims.push_back(p.target_size());
  out.mass = project(p.mass(), proj);
  return out;
}

JointDistribution product_baseline(const JointDistribution& p) {
  const Element all = p.predictor_algebra().top();
  Array px = project(p.mass(), make_projection(p, all, false));
  Array py = project(p.mass(), make_projection(p, 0, true));
  Array mass(p.cells());
  const int ny = p.target_size();
  for (Eigen::Index i = 0; i < p.cells(); ++i) {
    mass(i) = px(i / ny) * py(i % ny);
  }
  return JointDistribution(p.input_sizes(), p.target_size(), std::move(mass));
}

JointDistribution prune_zero_states(const JointDistribution& p,
                                    PruneInfo* info) {
  const int n = p.num_inputs();
  std::vector<std::vector<int>> kept(n + 1);
  bool changed = false;
  for (int v = 0; v < n; ++v) {
    Marginal mv = marginalize(p, Element{1} << v, false);
    for (int s = 0; s < p.input_sizes()[v]; ++s) {
      if (mv.mass(s) > 0.0) kept[v].push_back(s);
    }
    if (static_cast<int>(kept[v].size()) != p.input_sizes()[v]) changed = true;
    if (kept[v].empty()) {
      throw validation_error("an input variable has no positive-mass state");
    }
  }
  Marginal my = marginalize(p, 0, true);
  for (int y = 0; y < p.target_size(); ++y) {
    if (my.mass(y) > 0.0) kept[n].push_back(y);
  }
  if (static_cast<int>(kept[n].size()) != p.target_size()) changed = true;
  if (kept[n].empty()) {
    throw validation_error("the target variable has no positive-mass state");
  }

  if (info) {
    info->kept = kept;
    info->changed = changed;
  }
  if (!changed) return p;

  std::vector<int> sizes(n);
  for (int v = 0; v < n; ++v) sizes[v] = static_cast<int>(kept[v].size());
  int ny = static_cast<int>(kept[n].size());
  Eigen::Index cells = ny;
  for (int v = 0; v < n; ++v) cells *= sizes[v];
  Array mass(cells);
  std::vector<int> state(n, 0);
  Eigen::Index cell = 0;
  std::function<void(int)> recurse = [&](int v) {
    if (v == n) {
      std::vector<int> original(n);
      for (int u = 0; u < n; ++u) original[u] = kept[u][state[u]];
      for (int yi = 0; yi < ny; ++yi, ++cell) {
        mass(cell) = p.at(original, kept[n][yi]);
      }
      return;
    }
    for (state[v] = 0; state[v] < sizes[v]; ++state[v]) recurse(v + 1);
    state[v] = 0;
  };
  recurse(0);
  return JointDistribution(std::move(sizes), ny, std::move(mass));
}

JointDistribution max_entropy_fit(const JointDistribution& p,
                                  std::span<const Element> predictors,
                                  const IpfOptions& options,
                                  IpfDiagnostics* diagnostics) {
  const BooleanAlgebra algebra = p.predictor_algebra();
  struct Constraint {
    Projection projection;
    Array target;
  };
  std::vector<Constraint> constraints;
  {
    Projection all = make_projection(p, algebra.top(), false);
    constraints.push_back({all, project(p.mass(), all)});
  }
  for (Element a : predictors) {
    if (!algebra.contains(a)) {
      throw std::invalid_argument("predictor outside the variable set");
    }
    Projection proj = make_projection(p, a, true);
    constraints.push_back({proj, project(p.mass(), proj)});
  }

  Array q = Array::Constant(p.cells(), 1.0 / static_cast<double>(p.cells()));
  std::vector<double> history;
  int sweep = 0;
  double residual = std::numeric_limits<double>::infinity();
  for (; sweep < options.max_sweeps; ++sweep) {
    for (const Constraint& c : constraints) {
      Array current = project(q, c.projection);
      Array factor(c.target.size());
      for (Eigen::Index b = 0; b < c.target.size(); ++b) {
        factor(b) = current(b) > 0.0 ? c.target(b) / current(b)
                                     : (c.target(b) > 0.0 ? 1.0 : 0.0);
      }
      for (Eigen::Index i = 0; i < q.size(); ++i) {
        q(i) *= factor(c.projection.bucket_of[i]);
      }
    }
    residual = 0.0;
    for (const Constraint& c : constraints) {
      residual = std::max(
          residual, (project(q, c.projection) - c.target).abs().sum());
    }
    history.push_back(residual);
    if (residual < options.tolerance) break;
  }
  if (residual >= options.tolerance) {
    if (history.size() > 32) {
      history.erase(history.begin(),
                    history.end() - static_cast<std::ptrdiff_t>(32));
    }
    throw numerical_error("iterative proportional fitting stalled at residual " +
                              std::to_string(residual),
                          std::move(history));
  }
  if (diagnostics) {
    diagnostics->sweeps = sweep + 1;
    diagnostics->residual = residual;
    diagnostics->converged = true;
    diagnostics->closed_form = false;
  }
  return JointDistribution(p.input_sizes(), p.target_size(), std::move(q));
}

JointDistribution split_distribution(const JointDistribution& p,
                                     const DownSet& coalition,
                                     const IpfOptions& options,
                                     IpfDiagnostics* diagnostics) {
  const BooleanAlgebra algebra = p.predictor_algebra();
  if (coalition.algebra() != algebra) {
    throw std::invalid_argument("coalition is not over the predictor algebra");
  }
  if (coalition.is_empty()) {
    throw std::invalid_argument("split distribution needs a nonempty coalition");
  }
  auto antichain = coalition.maximal();
  if (options.use_closed_forms) {
    auto closed = [&](JointDistribution result) {
      if (diagnostics) *diagnostics = IpfDiagnostics{0, 0.0, true, true};
      return result;
    };
    if (coalition.contains(algebra.top())) {
      return closed(p);
    }
    if (static_cast<int>(antichain.size()) == algebra.rank() &&
        std::all_of(antichain.begin(), antichain.end(), [](Element a) {
          return BooleanAlgebra::element_rank(a) == 1;
        })) {
      // Product of the one-dimensional marginals.
      const int n = p.num_inputs();
      std::vector<Array> one_dim;
      one_dim.reserve(n);
      for (int v = 0; v < n; ++v) {
        one_dim.push_back(
            project(p.mass(), make_projection(p, Element{1} << v, false)));
      }
      Array py = project(p.mass(), make_projection(p, 0, true));
      Array mass(p.cells());
      std::vector<int> state(n, 0);
      Eigen::Index cell = 0;
      std::function<void(int)> recurse = [&](int v) {
        if (v == n) {
          double wx = 1.0;
          for (int u = 0; u < n; ++u) wx *= one_dim[u](state[u]);
          for (int y = 0; y < p.target_size(); ++y, ++cell) {
            mass(cell) = wx * py(y);
          }
          return;
        }
        for (state[v] = 0; state[v] < p.input_sizes()[v]; ++state[v]) {
          recurse(v + 1);
        }
        state[v] = 0;
      };
      recurse(0);
      return closed(JointDistribution(p.input_sizes(), p.target_size(),
                                      std::move(mass)));
    }
    if (antichain.size() == 1 && antichain[0] == algebra.bottom()) {
      return closed(product_baseline(p));
    }
  }
  try {
    return max_entropy_fit(p, antichain, options, diagnostics);
  } catch (const numerical_error& err) {
    throw numerical_error("split distribution for coalition " +
                              coalition.key() + " failed: " + err.what(),
                          err.residual_history);
  }
}

InformationGame information_game(const JointDistribution& p,
                                 const IpfOptions& options, int max_rank) {
  const BooleanAlgebra algebra = p.predictor_algebra();
  if (algebra.rank() > max_rank) {
    throw capacity_error("information game capped at " +
                         std::to_string(max_rank) +
                         " input variables; one split solve per coalition");
  }
  auto lattice = DownSetLattice::make(algebra);
  JointDistribution baseline = product_baseline(p);
  Vector worth = Vector::Zero(lattice->size());
  std::vector<IpfDiagnostics> diagnostics(lattice->size());
  for (int i = 1; i < lattice->size(); ++i) {
    JointDistribution split =
        split_distribution(p, lattice->at(i), options, &diagnostics[i]);
    worth(i) = kl_divergence(split, baseline);
  }
  InformationGame out{Game(lattice, std::move(worth)), std::move(diagnostics),
                      0.0};

  // The split of a larger coalition can only move further from the
  // baseline; residual violations reveal loose solves.
  const Game& v = out.game;
  for (int i = 0; i < lattice->size(); ++i) {
    for (int j = 0; j < lattice->size(); ++j) {
      if (i == j) continue;
      if ((lattice->at(i).members() & ~lattice->at(j).members()) != 0) continue;
      out.monotonicity_slack =
          std::max(out.monotonicity_slack, v.at(i) - v.at(j));
    }
  }
  if (out.monotonicity_slack > 1e-8) {
    throw numerical_error(
        "information game violates monotonicity beyond tolerance",
        {out.monotonicity_slack});
  }
  return out;
}

std::string attribution_method_name(AttributionMethod method) {
  switch (method) {
    case AttributionMethod::kHierarchicalExact: return "hierarchical-exact";
    case AttributionMethod::kHierarchicalSampled: return "hierarchical-sampled";
    case AttributionMethod::kPriority: return "priority";
    case AttributionMethod::kProportional: return "proportional";
  }
  return "unknown";
}

Decomposition attribute(const JointDistribution& p,
                        const AttributionOptions& options) {
  InformationGame info = information_game(p, options.ipf, options.max_rank);
  const Game& v = info.game;
  const BooleanAlgebra algebra = v.lattice().algebra();
  double total = v.at(v.lattice().whole_index());

  Vector psi;
  std::optional<Vector> psi_stderr;
  switch (options.method) {
    case AttributionMethod::kHierarchicalExact: {
      psi = hierarchical_value_dividend(v, options.max_exact_rank).values();
      break;
    }
    case AttributionMethod::kHierarchicalSampled: {
      if (options.samples < 1) {
        throw std::invalid_argument(
            "sampled attribution requires a positive sample count");
      }
      SampledAllocation sampled =
          hierarchical_value_sampled(v, options.samples, options.seed);
      psi = sampled.value.values();
      psi_stderr = sampled.standard_error;
      break;
    }
    case AttributionMethod::kPriority: {
      psi = sharing_value(v, priority_sharing_system(v.lattice_ptr())).values();
      break;
    }
    case AttributionMethod::kProportional: {
      psi = sharing_value(v, proportional_sharing_system(v.lattice_ptr()))
                .values();
      break;
    }
  }

  Decomposition out{algebra,
                    std::move(psi),
                    std::move(psi_stderr),
                    total,
                    0.0,
                    false,
                    attribution_method_name(options.method),
                    std::move(info)};
  out.residual = out.psi.sum() - total;
  out.has_negative = (out.psi.array() < -1e-9).any();
  return out;
}

}  // namespace latval
