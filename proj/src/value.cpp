#include "latval/value.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>

namespace latval {

namespace {

MemberMask bit_of(Element e) { return MemberMask{1} << e; }

constexpr double kWeightTol = 1e-12;

void require_same_algebra(const DownSetLattice& lattice,
                          const BooleanAlgebra& algebra) {
  if (lattice.algebra() != algebra) {
    throw std::invalid_argument("objects belong to different algebras");
  }
}

// Maximal chain counts of D(P,<=): chains from the empty coalition up to
// each down-set and from each down-set up to the full player set. Their
// products count linear extensions with prescribed prefixes.
struct ChainCounts {
  std::vector<std::uint64_t> up;
  std::vector<std::uint64_t> down;
};

ChainCounts compute_chain_counts(const DownSetLattice& lat) {
  const int m = lat.size();
  const BooleanAlgebra& alg = lat.algebra();
  ChainCounts counts{std::vector<std::uint64_t>(m, 0),
                     std::vector<std::uint64_t>(m, 0)};
  counts.up[0] = 1;
  for (int i = 1; i < m; ++i) {
    const DownSet& s = lat.at(i);
    std::uint64_t total = 0;
    for (Element e : s.maximal()) {
      total += counts.up[lat.index_of_mask(s.members() & ~bit_of(e))];
    }
    counts.up[i] = total;
  }
  counts.down[m - 1] = 1;
  for (int i = m - 2; i >= 0; --i) {
    const DownSet& s = lat.at(i);
    std::uint64_t total = 0;
    for (int e = 0; e < alg.size(); ++e) {
      if (s.contains(static_cast<Element>(e))) continue;
      MemberMask need = alg.down_mask(static_cast<Element>(e)) & ~bit_of(e);
      if ((need & ~s.members()) != 0) continue;
      total += counts.down[lat.index_of_mask(s.members() | bit_of(e))];
    }
    counts.down[i] = total;
  }
  return counts;
}

std::uint64_t outranking_extensions(const DownSetLattice& lat,
                                    const ChainCounts& counts,
                                    const DownSet& s, Element i) {
  // Extensions ranking i above all of S: i enters at some coalition C that
  // already contains S \ i and keeps i maximal.
  MemberMask others = s.members() & ~bit_of(i);
  std::uint64_t total = 0;
  for (int c = 0; c < lat.size(); ++c) {
    const DownSet& cs = lat.at(c);
    if (!cs.contains(i) || !cs.is_maximal(i)) continue;
    if ((others & ~cs.members()) != 0) continue;
    std::uint64_t below =
        counts.up[lat.index_of_mask(cs.members() & ~bit_of(i))];
    total += below * counts.down[c];
  }
  return total;
}

}  // namespace

Allocation::Allocation(const BooleanAlgebra& algebra, Vector values)
    : rank_(algebra.rank()), values_(std::move(values)) {
  if (values_.size() != algebra.size()) {
    throw std::invalid_argument("allocation must cover every player");
  }
  if (!values_.allFinite()) {
    throw std::invalid_argument("allocation entries must be finite");
  }
}

double efficiency_residual(const Game& v, const Allocation& phi) {
  return phi.total() - v.at(v.lattice().whole_index());
}

DownSet predecessor_set(const LinearExtension& f, Element i) {
  const BooleanAlgebra alg = f.algebra();
  if (!alg.contains(i)) {
    throw std::invalid_argument("element outside the algebra");
  }
  MemberMask members = 0;
  for (int e = 0; e < alg.size(); ++e) {
    if (f.rank_of(static_cast<Element>(e)) <= f.rank_of(i)) {
      members |= bit_of(static_cast<Element>(e));
    }
  }
  return DownSet(alg, members);
}

double marginal_contribution(const Game& v, const LinearExtension& f,
                             Element i) {
  const DownSetLattice& lat = v.lattice();
  require_same_algebra(lat, f.algebra());
  DownSet s = predecessor_set(f, i);
  return v.at(lat.index_of(s)) -
         v.at(lat.index_of_mask(s.members() & ~bit_of(i)));
}

Vector marginal_vector(const Game& v, const LinearExtension& f) {
  const DownSetLattice& lat = v.lattice();
  require_same_algebra(lat, f.algebra());
  Vector delta(lat.algebra().size());
  MemberMask prefix = 0;
  double previous = 0.0;
  for (Element e : f.order()) {
    prefix |= bit_of(e);
    double current = v.at(lat.index_of_mask(prefix));
    delta(e) = current - previous;
    previous = current;
  }
  return delta;
}

ExtensionDistribution::ExtensionDistribution(
    std::vector<LinearExtension> extensions, Vector weights)
    : extensions_(std::move(extensions)), weights_(std::move(weights)) {
  if (extensions_.empty()) {
    throw std::invalid_argument("extension distribution needs support");
  }
  if (weights_.size() != static_cast<Eigen::Index>(extensions_.size())) {
    throw std::invalid_argument("one weight per extension required");
  }
  for (const LinearExtension& f : extensions_) {
    if (f.algebra() != extensions_.front().algebra()) {
      throw std::invalid_argument("extensions from different algebras");
    }
  }
  if ((weights_.array() < -kWeightTol).any()) {
    throw std::invalid_argument("extension weights must be nonnegative");
  }
  if (std::abs(weights_.sum() - 1.0) > kWeightTol) {
    throw std::invalid_argument("extension weights must sum to one");
  }
}

ExtensionDistribution ExtensionDistribution::uniform(
    const BooleanAlgebra& algebra, int max_rank) {
  auto extensions = enumerate_linear_extensions(algebra, max_rank);
  const auto count = static_cast<Eigen::Index>(extensions.size());
  return ExtensionDistribution(std::move(extensions),
                               Vector::Constant(count, 1.0 / count));
}

ExtensionDistribution ExtensionDistribution::point_mass(LinearExtension f) {
  std::vector<LinearExtension> support;
  support.push_back(std::move(f));
  return ExtensionDistribution(std::move(support), Vector::Ones(1));
}

Allocation random_order_value(const Game& v, const ExtensionDistribution& r) {
  const DownSetLattice& lat = v.lattice();
  require_same_algebra(lat, r.extensions().front().algebra());
  Vector phi = Vector::Zero(lat.algebra().size());
  for (std::size_t k = 0; k < r.extensions().size(); ++k) {
    double weight = r.weights()(static_cast<Eigen::Index>(k));
    if (weight == 0.0) continue;
    phi += weight * marginal_vector(v, r.extensions()[k]);
  }
  return Allocation(lat.algebra(), std::move(phi));
}

Selector::Selector(std::shared_ptr<const DownSetLattice> lattice,
                   std::vector<Element> choice)
    : lattice_(std::move(lattice)), choice_(std::move(choice)) {
  if (static_cast<int>(choice_.size()) != lattice_->size()) {
    throw std::invalid_argument("selector must choose for every nonempty coalition");
  }
  choice_[0] = 0;
  for (int i = 1; i < lattice_->size(); ++i) {
    if (!lattice_->at(i).is_maximal(choice_[i])) {
      throw std::invalid_argument("selector must pick a maximal element of " +
                                  lattice_->key_of(i));
    }
  }
}

Element Selector::at(int ds_index) const {
  if (ds_index <= 0 || ds_index >= lattice_->size()) {
    throw std::invalid_argument("selector is defined on nonempty coalitions");
  }
  return choice_[ds_index];
}

std::vector<Selector> enumerate_selectors(
    std::shared_ptr<const DownSetLattice> lattice, int max_rank) {
  if (lattice->algebra().rank() > max_rank) {
    throw capacity_error("selector enumeration capped at rank " +
                         std::to_string(max_rank) +
                         "; the selector space grows doubly exponentially");
  }
  const int m = lattice->size();
  std::vector<Selector> out;
  std::vector<std::size_t> pick(m, 0);
  while (true) {
    std::vector<Element> choice(m, 0);
    for (int i = 1; i < m; ++i) {
      choice[i] = lattice->at(i).maximal()[pick[i]];
    }
    out.emplace_back(lattice, std::move(choice));
    int pos = m - 1;
    while (pos >= 1) {
      if (++pick[pos] < lattice->at(pos).maximal().size()) break;
      pick[pos] = 0;
      --pos;
    }
    if (pos == 0) break;
  }
  return out;
}

Allocation selector_value(const DividendTable& d, const Selector& alpha) {
  const DownSetLattice& lat = d.lattice();
  require_same_algebra(lat, alpha.lattice().algebra());
  Vector delta = Vector::Zero(lat.algebra().size());
  for (int i = 1; i < lat.size(); ++i) {
    delta(alpha.at(i)) += d.at(i);
  }
  return Allocation(lat.algebra(), std::move(delta));
}

Allocation selector_value(const Game& v, const Selector& alpha) {
  return selector_value(harsanyi_transform(v), alpha);
}

std::optional<ConsistencyWitness> inconsistency_witness(const Selector& alpha) {
  const DownSetLattice& lat = alpha.lattice();
  for (int outer = 1; outer < lat.size(); ++outer) {
    for (int inner = 1; inner < lat.size(); ++inner) {
      if (inner == outer) continue;
      const DownSet& s = lat.at(inner);
      const DownSet& t = lat.at(outer);
      if ((s.members() & ~t.members()) != 0) continue;
      if (!s.is_maximal(alpha.at(outer))) continue;
      if (alpha.at(inner) != alpha.at(outer)) {
        return ConsistencyWitness{inner, outer};
      }
    }
  }
  return std::nullopt;
}

std::optional<ConsistencyWitness> inconsistency_witness_on(
    const Selector& alpha, Element t) {
  const DownSetLattice& lat = alpha.lattice();
  for (int outer = 1; outer < lat.size(); ++outer) {
    if (alpha.at(outer) != t) continue;
    for (int inner = 1; inner < lat.size(); ++inner) {
      if (inner == outer) continue;
      const DownSet& s = lat.at(inner);
      if ((s.members() & ~lat.at(outer).members()) != 0) continue;
      if (!s.is_maximal(t)) continue;
      if (alpha.at(inner) != t) return ConsistencyWitness{inner, outer};
    }
  }
  return std::nullopt;
}

bool is_consistent(const Selector& alpha) {
  return !inconsistency_witness(alpha).has_value();
}

bool is_consistent_on(const Selector& alpha, Element t) {
  return !inconsistency_witness_on(alpha, t).has_value();
}

Selector selector_from_extension(std::shared_ptr<const DownSetLattice> lattice,
                                 const LinearExtension& f) {
  require_same_algebra(*lattice, f.algebra());
  std::vector<Element> choice(lattice->size(), 0);
  for (int i = 1; i < lattice->size(); ++i) {
    Element best = 0;
    int best_rank = 0;
    for (Element e : lattice->at(i).maximal()) {
      if (f.rank_of(e) > best_rank) {
        best_rank = f.rank_of(e);
        best = e;
      }
    }
    choice[i] = best;
  }
  return Selector(std::move(lattice), std::move(choice));
}

LinearExtension extension_from_selector(const Selector& alpha) {
  if (auto witness = inconsistency_witness(alpha)) {
    const DownSetLattice& lat = alpha.lattice();
    throw std::invalid_argument(
        "selector is inconsistent: picks " +
        lat.algebra().element_key(alpha.at(witness->outer)) + " at " +
        lat.key_of(witness->outer) + " but " +
        lat.algebra().element_key(alpha.at(witness->inner)) + " at " +
        lat.key_of(witness->inner));
  }
  const DownSetLattice& lat = alpha.lattice();
  const BooleanAlgebra alg = lat.algebra();
  std::vector<Element> order(alg.size());
  DownSet remaining = DownSet::whole(alg);
  for (int pos = alg.size(); pos >= 1; --pos) {
    Element e = alpha.at(lat.index_of(remaining));
    order[pos - 1] = e;
    remaining = remaining.without(e);
  }
  return LinearExtension(alg, std::move(order));
}

SharingSystem::SharingSystem(std::shared_ptr<const DownSetLattice> lattice,
                             std::vector<Row> rows)
    : lattice_(std::move(lattice)), rows_(std::move(rows)) {
  if (static_cast<int>(rows_.size()) != lattice_->size()) {
    throw std::invalid_argument("sharing system needs one row per coalition");
  }
  if (!rows_[0].empty()) {
    throw std::invalid_argument("the empty coalition carries no weights");
  }
  for (int i = 1; i < lattice_->size(); ++i) {
    double total = 0.0;
    auto& row = rows_[i];
    std::sort(row.begin(), row.end());
    for (std::size_t k = 0; k < row.size(); ++k) {
      const auto& [element, weight] = row[k];
      if (!lattice_->at(i).is_maximal(element)) {
        throw std::invalid_argument("sharing weight on a non-maximal player of " +
                                    lattice_->key_of(i));
      }
      if (k > 0 && row[k - 1].first == element) {
        throw std::invalid_argument("duplicate sharing weight in row " +
                                    lattice_->key_of(i));
      }
      if (weight < -kWeightTol || weight > 1.0 + kWeightTol) {
        throw std::invalid_argument("sharing weights must lie in [0, 1]");
      }
      total += weight;
    }
    if (std::abs(total - 1.0) > kWeightTol) {
      throw std::invalid_argument("sharing row for " + lattice_->key_of(i) +
                                  " must sum to one");
    }
  }
}

double SharingSystem::q(int ds_index, Element i) const {
  for (const auto& [element, weight] : rows_.at(ds_index)) {
    if (element == i) return weight;
  }
  return 0.0;
}

Allocation sharing_value(const DividendTable& d, const SharingSystem& q) {
  const DownSetLattice& lat = d.lattice();
  require_same_algebra(lat, q.lattice().algebra());
  Vector phi = Vector::Zero(lat.algebra().size());
  for (int i = 1; i < lat.size(); ++i) {
    for (const auto& [element, weight] : q.row(i)) {
      phi(element) += weight * d.at(i);
    }
  }
  return Allocation(lat.algebra(), std::move(phi));
}

Allocation sharing_value(const Game& v, const SharingSystem& q) {
  return sharing_value(harsanyi_transform(v), q);
}

SharingSystem priority_sharing_system(
    std::shared_ptr<const DownSetLattice> lattice) {
  std::vector<SharingSystem::Row> rows(lattice->size());
  for (int i = 1; i < lattice->size(); ++i) {
    auto maximal = lattice->at(i).maximal();
    double share = 1.0 / static_cast<double>(maximal.size());
    for (Element e : maximal) rows[i].emplace_back(e, share);
  }
  return SharingSystem(std::move(lattice), std::move(rows));
}

SharingSystem proportional_sharing_system(
    std::shared_ptr<const DownSetLattice> lattice) {
  std::vector<SharingSystem::Row> rows(lattice->size());
  for (int i = 1; i < lattice->size(); ++i) {
    auto maximal = lattice->at(i).maximal();
    int rank_sum = 0;
    for (Element e : maximal) rank_sum += BooleanAlgebra::element_rank(e);
    if (rank_sum == 0) {
      // Only the bottom-only coalition; its dividend is zero whenever the
      // bottom worth vanishes, and the row must still normalize.
      rows[i].emplace_back(lattice->algebra().bottom(), 1.0);
      continue;
    }
    for (Element e : maximal) {
      rows[i].emplace_back(e, static_cast<double>(
                                  BooleanAlgebra::element_rank(e)) /
                                  rank_sum);
    }
  }
  return SharingSystem(std::move(lattice), std::move(rows));
}

SelectorDistribution::SelectorDistribution(
    std::shared_ptr<const DownSetLattice> lattice, std::vector<Entry> entries)
    : lattice_(std::move(lattice)), entries_(std::move(entries)) {
  double total = 0.0;
  for (const auto& [alpha, weight] : entries_) {
    if (alpha.lattice().algebra() != lattice_->algebra()) {
      throw std::invalid_argument("selector from a different algebra");
    }
    if (weight < -kWeightTol) {
      throw std::invalid_argument("selector weights must be nonnegative");
    }
    total += weight;
  }
  if (std::abs(total - 1.0) > kWeightTol) {
    throw std::invalid_argument("selector weights must sum to one");
  }
}

Allocation average_selector_value(const DividendTable& d,
                                  const SelectorDistribution& p) {
  const DownSetLattice& lat = d.lattice();
  require_same_algebra(lat, p.lattice().algebra());
  Vector phi = Vector::Zero(lat.algebra().size());
  for (const auto& [alpha, weight] : p.entries()) {
    if (weight == 0.0) continue;
    phi += weight * selector_value(d, alpha).values();
  }
  return Allocation(lat.algebra(), std::move(phi));
}

SharingSystem sharing_from_selector_distribution(const SelectorDistribution& p) {
  std::shared_ptr<const DownSetLattice> shared = p.lattice_ptr();
  const DownSetLattice& lat = *shared;
  std::vector<SharingSystem::Row> rows(lat.size());
  for (int i = 1; i < lat.size(); ++i) {
    for (const auto& [alpha, weight] : p.entries()) {
      Element chosen = alpha.at(i);
      auto& row = rows[i];
      auto it = std::find_if(row.begin(), row.end(),
                             [&](const auto& e) { return e.first == chosen; });
      if (it == row.end()) {
        row.emplace_back(chosen, weight);
      } else {
        it->second += weight;
      }
    }
  }
  return SharingSystem(shared, std::move(rows));
}

SelectorDistribution selector_distribution_from_sharing(const SharingSystem& q,
                                                        int max_rank) {
  auto lattice = q.lattice_ptr();
  std::vector<SelectorDistribution::Entry> entries;
  for (Selector& alpha : enumerate_selectors(lattice, max_rank)) {
    double weight = 1.0;
    for (int i = 1; i < lattice->size() && weight != 0.0; ++i) {
      weight *= q.q(i, alpha.at(i));
    }
    if (weight != 0.0) {
      entries.emplace_back(std::move(alpha), weight);
    }
  }
  return SelectorDistribution(std::move(lattice), std::move(entries));
}

std::optional<Prop4Site> prop4_locate(const Selector& alpha) {
  const DownSetLattice& lat = alpha.lattice();
  const BooleanAlgebra alg = lat.algebra();
  for (int e = 0; e < alg.size(); ++e) {
    auto t = static_cast<Element>(e);
    if (is_consistent_on(alpha, t)) continue;
    MemberMask joined = 0;
    for (int i = 1; i < lat.size(); ++i) {
      if (alpha.at(i) == t) joined |= lat.at(i).members();
    }
    if (joined == 0) continue;
    DownSet cover(alg, joined);
    if (alpha.at(lat.index_of(cover)) == t) {
      return Prop4Site{t, cover};
    }
  }
  return std::nullopt;
}

namespace {

struct UnionFind {
  std::vector<int> parent;

  explicit UnionFind(int n) : parent(n) {
    std::iota(parent.begin(), parent.end(), 0);
  }

  int find(int x) {
    while (parent[x] != x) {
      parent[x] = parent[parent[x]];
      x = parent[x];
    }
    return x;
  }

  void unite(int a, int b) { parent[find(a)] = find(b); }
};

}  // namespace

Game prop4_witness(const Selector& alpha, Element t, const DownSet& T,
                   double level) {
  auto lattice = alpha.lattice_ptr();
  const DownSetLattice& lat = *lattice;
  if (level <= 0.0) {
    throw std::invalid_argument("witness level must be positive");
  }
  if (T.is_empty() || alpha.at(lat.index_of(T)) != t) {
    throw std::invalid_argument("selector must pick t at T");
  }
  if (is_consistent_on(alpha, t)) {
    throw std::invalid_argument("selector is consistent on t; no witness exists");
  }
  for (int i = 1; i < lat.size(); ++i) {
    if (alpha.at(i) == t && (lat.at(i).members() & ~T.members()) != 0) {
      throw std::invalid_argument(
          "every coalition selected to t must lie inside T");
    }
  }

  // Maximal coalitions strictly inside T that contain t yet select elsewhere.
  std::vector<int> family;
  for (int i = 1; i < lat.size(); ++i) {
    const DownSet& s = lat.at(i);
    if (s.members() == T.members()) continue;
    if ((s.members() & ~T.members()) != 0) continue;
    if (!s.contains(t)) continue;
    if (alpha.at(i) != t) family.push_back(i);
  }
  if (family.empty()) {
    throw std::invalid_argument("no inconsistency witnesses inside T");
  }
  std::vector<int> peaks;
  for (int a : family) {
    bool maximal = true;
    for (int b : family) {
      if (a != b && (lat.at(a).members() & ~lat.at(b).members()) == 0) {
        maximal = false;
        break;
      }
    }
    if (maximal) peaks.push_back(a);
  }
  std::vector<bool> is_peak(lat.size(), false);
  for (int p : peaks) is_peak[p] = true;

  // Worth is constant on classes tied by removing a maximal t, zero below
  // every peak, `level` at the peaks, and minimally monotone elsewhere.
  UnionFind classes(lat.size());
  for (int i = 1; i < lat.size(); ++i) {
    if (is_peak[i]) continue;
    const DownSet& s = lat.at(i);
    if (!s.is_maximal(t)) continue;
    classes.unite(i, lat.index_of_mask(s.members() & ~bit_of(t)));
  }

  std::vector<bool> pinned_zero(lat.size(), false);
  std::vector<bool> pinned_level(lat.size(), false);
  for (int p : peaks) {
    for (int i = 0; i < lat.size(); ++i) {
      if (i != p && (lat.at(i).members() & ~lat.at(p).members()) == 0) {
        pinned_zero[classes.find(i)] = true;
      }
    }
  }
  for (int p : peaks) pinned_level[classes.find(p)] = true;

  std::vector<double> value(lat.size(), 0.0);
  for (int i = 0; i < lat.size(); ++i) {
    if (pinned_level[classes.find(i)]) value[classes.find(i)] = level;
  }
  const auto infeasible = [] {
    return std::invalid_argument(
        "witness construction infeasible for this selector");
  };
  for (int i = 0; i < lat.size(); ++i) {
    if (pinned_zero[i] && pinned_level[i]) throw infeasible();
  }

  bool changed = true;
  while (changed) {
    changed = false;
    for (int i = 1; i < lat.size(); ++i) {
      const DownSet& s = lat.at(i);
      int root = classes.find(i);
      for (Element e : s.maximal()) {
        double below = value[classes.find(
            lat.index_of_mask(s.members() & ~bit_of(e)))];
        if (below > value[root]) {
          if (pinned_zero[root] || pinned_level[root]) throw infeasible();
          value[root] = below;
          changed = true;
        }
      }
    }
  }

  Vector worth = Vector::Zero(lat.size());
  for (int i = 1; i < lat.size(); ++i) {
    worth(i) = value[classes.find(i)];
  }
  Game game(lattice, std::move(worth));

  // The construction must satisfy the three structural conditions exactly
  // and price t at -k * level under alpha.
  if (monotonicity_violation(game, 0.0)) throw infeasible();
  for (int p : peaks) {
    if (game.at(p) != level) throw infeasible();
  }
  for (int i = 1; i < lat.size(); ++i) {
    const DownSet& s = lat.at(i);
    if (!s.is_maximal(t) || is_peak[i]) continue;
    if (game.at(i) != game.at(lat.index_of_mask(s.members() & ~bit_of(t)))) {
      throw infeasible();
    }
  }
  double priced = selector_value(game, alpha).at(t);
  if (std::abs(priced + static_cast<double>(peaks.size()) * level) > 1e-9) {
    throw infeasible();
  }
  return game;
}

double hierarchical_strength(const DownSetLattice& lattice, const DownSet& s,
                             Element i) {
  require_same_algebra(lattice, s.algebra());
  if (!s.contains(i)) {
    throw std::invalid_argument("player does not belong to the coalition");
  }
  if (!s.is_maximal(i)) return 0.0;
  ChainCounts counts = compute_chain_counts(lattice);
  std::uint64_t hits = outranking_extensions(lattice, counts, s, i);
  auto total = static_cast<long double>(counts.up[lattice.size() - 1]);
  return static_cast<double>(static_cast<long double>(hits) / total);
}

double hierarchical_strength_sampled(const ExtensionSampler& sampler,
                                     const DownSet& s, Element i, int samples,
                                     std::uint64_t seed) {
  if (samples < 1) {
    throw std::invalid_argument("sample count must be positive");
  }
  if (!s.contains(i)) {
    throw std::invalid_argument("player does not belong to the coalition");
  }
  std::mt19937_64 rng(seed);
  int hits = 0;
  const BooleanAlgebra alg = s.algebra();
  for (int k = 0; k < samples; ++k) {
    LinearExtension f = sampler.sample(rng);
    bool outranks = true;
    for (int e = 0; e < alg.size() && outranks; ++e) {
      auto j = static_cast<Element>(e);
      if (j != i && s.contains(j) && f.rank_of(j) > f.rank_of(i)) {
        outranks = false;
      }
    }
    if (outranks) ++hits;
  }
  return static_cast<double>(hits) / samples;
}

SharingSystem hierarchical_sharing_system(
    std::shared_ptr<const DownSetLattice> lattice) {
  const DownSetLattice& lat = *lattice;
  ChainCounts counts = compute_chain_counts(lat);
  auto total = static_cast<long double>(counts.up[lat.size() - 1]);
  std::vector<SharingSystem::Row> rows(lat.size());
  for (int i = 1; i < lat.size(); ++i) {
    for (Element e : lat.at(i).maximal()) {
      auto hits = static_cast<long double>(
          outranking_extensions(lat, counts, lat.at(i), e));
      rows[i].emplace_back(e, static_cast<double>(hits / total));
    }
  }
  return SharingSystem(std::move(lattice), std::move(rows));
}

namespace {

void require_exact_rank(const Game& v, int max_rank) {
  if (v.lattice().algebra().rank() > max_rank) {
    throw capacity_error(
        "exact hierarchical value capped at rank " + std::to_string(max_rank) +
        "; use the sampled method for larger algebras");
  }
}

}  // namespace

Allocation hierarchical_value_dividend(const Game& v, int max_rank) {
  require_exact_rank(v, max_rank);
  return sharing_value(harsanyi_transform(v),
                       hierarchical_sharing_system(v.lattice_ptr()));
}

Allocation hierarchical_value_random_order(const Game& v, int max_rank) {
  require_exact_rank(v, max_rank);
  return random_order_value(
      v, ExtensionDistribution::uniform(v.lattice().algebra(), max_rank));
}

Allocation hierarchical_value_probabilistic(const Game& v, int max_rank) {
  require_exact_rank(v, max_rank);
  const DownSetLattice& lat = v.lattice();
  const BooleanAlgebra alg = lat.algebra();
  auto elements_of = [&](MemberMask mask) {
    std::vector<Element> out;
    for (int e = 0; e < alg.size(); ++e) {
      if ((mask >> e) & 1u) out.push_back(static_cast<Element>(e));
    }
    return out;
  };
  MemberMask everyone = DownSet::whole(alg).members();
  auto total = static_cast<long double>(
      count_extensions_of_subposet(alg, elements_of(everyone)));
  Vector phi = Vector::Zero(alg.size());
  for (int i = 1; i < lat.size(); ++i) {
    const DownSet& s = lat.at(i);
    for (Element e : s.maximal()) {
      auto below = static_cast<long double>(count_extensions_of_subposet(
          alg, elements_of(s.members() & ~bit_of(e))));
      auto above = static_cast<long double>(count_extensions_of_subposet(
          alg, elements_of(everyone & ~s.members())));
      double weight = static_cast<double>(below * above / total);
      double marginal =
          v.at(i) - v.at(lat.index_of_mask(s.members() & ~bit_of(e)));
      phi(e) += weight * marginal;
    }
  }
  return Allocation(alg, std::move(phi));
}

SampledAllocation hierarchical_value_sampled(const Game& v,
                                             std::uint64_t samples,
                                             std::uint64_t seed) {
  if (samples < 1) {
    throw std::invalid_argument("sample count must be positive");
  }
  const BooleanAlgebra alg = v.lattice().algebra();
  ExtensionSampler sampler(v.lattice_ptr());
  std::mt19937_64 rng(seed);
  Vector sum = Vector::Zero(alg.size());
  Vector sum_sq = Vector::Zero(alg.size());
  for (std::uint64_t k = 0; k < samples; ++k) {
    Vector delta = marginal_vector(v, sampler.sample(rng));
    sum += delta;
    sum_sq += delta.cwiseProduct(delta);
  }
  auto n = static_cast<double>(samples);
  Vector mean = sum / n;
  Vector stderrs = Vector::Zero(alg.size());
  if (samples > 1) {
    Vector variance =
        (sum_sq - n * mean.cwiseProduct(mean)).cwiseMax(0.0) / (n - 1.0);
    stderrs = (variance / n).cwiseSqrt();
  }
  return SampledAllocation{Allocation(alg, std::move(mean)),
                           std::move(stderrs), samples, seed};
}

std::string axiom_name(Axiom axiom) {
  switch (axiom) {
    case Axiom::kEfficiency: return "efficiency";
    case Axiom::kPositivity: return "positivity";
    case Axiom::kNullPlayer: return "null-player";
    case Axiom::kCarrier: return "carrier";
    case Axiom::kSymmetry: return "symmetry";
    case Axiom::kLinearity: return "linearity";
    case Axiom::kHierarchicalStrength: return "hierarchical-strength";
  }
  return "unknown";
}

bool AxiomReport::all_passed() const {
  return std::all_of(results.begin(), results.end(),
                     [](const AxiomResult& r) { return r.passed; });
}

Game random_game(std::shared_ptr<const DownSetLattice> lattice,
                 std::mt19937_64& rng) {
  std::normal_distribution<double> normal(0.0, 1.0);
  Vector worth = Vector::Zero(lattice->size());
  for (int i = 1; i < lattice->size(); ++i) worth(i) = normal(rng);
  return Game(std::move(lattice), std::move(worth));
}

Game random_monotone_game(std::shared_ptr<const DownSetLattice> lattice,
                          std::mt19937_64& rng) {
  const DownSetLattice& lat = *lattice;
  std::normal_distribution<double> normal(0.0, 1.0);
  std::bernoulli_distribution keep(0.5);
  Vector dividend = Vector::Zero(lat.size());
  for (int i = 1; i < lat.size(); ++i) {
    if (keep(rng)) dividend(i) = normal(rng);
  }
  Game base = zeta_transform(DividendTable(lattice, std::move(dividend)));
  Vector worth = base.worth();
  for (int i = 1; i < lat.size(); ++i) {
    const DownSet& s = lat.at(i);
    for (Element e : s.maximal()) {
      worth(i) = std::max(worth(i),
                          worth(lat.index_of_mask(s.members() & ~bit_of(e))));
    }
  }
  return Game(std::move(lattice), std::move(worth));
}

Game random_upset_game(std::shared_ptr<const DownSetLattice> lattice,
                       std::mt19937_64& rng) {
  const DownSetLattice& lat = *lattice;
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  double density = 0.05 + 0.25 * unit(rng);
  Vector worth = Vector::Zero(lat.size());
  for (int i = 1; i < lat.size(); ++i) {
    bool inside = unit(rng) < density;
    const DownSet& s = lat.at(i);
    for (Element e : s.maximal()) {
      if (worth(lat.index_of_mask(s.members() & ~bit_of(e))) > 0.0) {
        inside = true;
        break;
      }
    }
    worth(i) = inside ? 1.0 : 0.0;
  }
  return Game(std::move(lattice), std::move(worth));
}

Game force_null_player(const Game& v, Element i) {
  const DownSetLattice& lat = v.lattice();
  const BooleanAlgebra alg = lat.algebra();
  if (!alg.contains(i)) {
    throw std::invalid_argument("element outside the algebra");
  }
  MemberMask need = alg.down_mask(i) & ~bit_of(i);
  Vector worth = v.worth();
  for (int s = 0; s < lat.size(); ++s) {
    MemberMask ms = lat.at(s).members();
    if ((ms >> i) & 1u) continue;
    if ((need & ~ms) != 0) continue;
    worth(lat.index_of_mask(ms | bit_of(i))) = worth(s);
  }
  return Game(v.lattice_ptr(), std::move(worth));
}

namespace {

std::string element_list(const BooleanAlgebra& alg, const Vector& values,
                         Element e) {
  std::ostringstream out;
  out << alg.element_key(e) << " -> " << values(e);
  return out.str();
}

}  // namespace

AxiomReport check_axioms(std::shared_ptr<const DownSetLattice> lattice,
                         const ValueOperator& value,
                         const std::string& value_name, int trials,
                         std::uint64_t seed, double tol) {
  const DownSetLattice& lat = *lattice;
  const BooleanAlgebra alg = lat.algebra();
  AxiomReport report{value_name, {}};
  std::mt19937_64 rng(seed);

  // Efficiency on random games.
  {
    AxiomResult result{Axiom::kEfficiency, true, trials, ""};
    for (int k = 0; k < trials && result.passed; ++k) {
      Game v = random_game(lattice, rng);
      double residual = efficiency_residual(v, value(v));
      if (std::abs(residual) > tol) {
        result.passed = false;
        result.witness = "trial " + std::to_string(k) + ": residual " +
                         std::to_string(residual);
      }
    }
    report.results.push_back(std::move(result));
  }

  // Positivity on monotone games (random repaired games plus vertices of
  // the monotone order polytope).
  {
    AxiomResult result{Axiom::kPositivity, true, trials, ""};
    for (int k = 0; k < trials && result.passed; ++k) {
      Game v = (k % 2 == 0) ? random_monotone_game(lattice, rng)
                            : random_upset_game(lattice, rng);
      Allocation phi = value(v);
      for (int e = 0; e < alg.size(); ++e) {
        if (phi.values()(e) < -tol) {
          result.passed = false;
          result.witness =
              "trial " + std::to_string(k) + ": monotone game pays " +
              element_list(alg, phi.values(), static_cast<Element>(e));
          break;
        }
      }
    }
    report.results.push_back(std::move(result));
  }

  // Null player: forced-null games must pay the null player nothing.
  {
    AxiomResult result{Axiom::kNullPlayer, true, trials, ""};
    std::uniform_int_distribution<int> pick(0, alg.size() - 1);
    for (int k = 0; k < trials && result.passed; ++k) {
      auto i = static_cast<Element>(pick(rng));
      Game v = force_null_player(random_game(lattice, rng), i);
      Allocation phi = value(v);
      if (std::abs(phi.at(i)) > tol) {
        result.passed = false;
        result.witness = "trial " + std::to_string(k) + ": null player " +
                         element_list(alg, phi.values(), i);
      }
    }
    report.results.push_back(std::move(result));
  }

  // Carrier: games of the form v(S) = w(S n U) must pay U exactly v(U).
  {
    AxiomResult result{Axiom::kCarrier, true, trials, ""};
    std::uniform_int_distribution<int> pick(1, lat.size() - 1);
    for (int k = 0; k < trials && result.passed; ++k) {
      const DownSet& u = lat.at(pick(rng));
      Game w = random_game(lattice, rng);
      Vector worth = Vector::Zero(lat.size());
      for (int s = 0; s < lat.size(); ++s) {
        worth(s) = w.at(lat.index_of_mask(lat.at(s).members() & u.members()));
      }
      Game v(lattice, std::move(worth));
      Allocation phi = value(v);
      double inside = 0.0;
      for (int e = 0; e < alg.size(); ++e) {
        if (u.contains(static_cast<Element>(e))) {
          inside += phi.at(static_cast<Element>(e));
        }
      }
      double gap = inside - v.at(lat.index_of(u));
      if (std::abs(gap) > tol) {
        result.passed = false;
        result.witness = "trial " + std::to_string(k) + ": carrier " +
                         u.key() + " off by " + std::to_string(gap);
      }
    }
    report.results.push_back(std::move(result));
  }

  // Symmetry under every atom permutation.
  {
    AxiomResult result{Axiom::kSymmetry, true, trials, ""};
    auto automorphisms = enumerate_automorphisms(alg);
    for (int k = 0; k < trials && result.passed; ++k) {
      Game v = random_game(lattice, rng);
      Allocation phi = value(v);
      for (const Automorphism& sigma : automorphisms) {
        Allocation mapped = value(automorphism_image(v, sigma));
        for (int e = 0; e < alg.size() && result.passed; ++e) {
          auto i = static_cast<Element>(e);
          if (std::abs(mapped.at(sigma(i)) - phi.at(i)) > tol) {
            result.passed = false;
            result.witness = "trial " + std::to_string(k) +
                             ": permuted payoff differs at " +
                             alg.element_key(i);
          }
        }
        if (!result.passed) break;
      }
    }
    report.results.push_back(std::move(result));
  }

  // Linearity over random combinations.
  {
    AxiomResult result{Axiom::kLinearity, true, trials, ""};
    std::uniform_real_distribution<double> coeff(-2.0, 2.0);
    for (int k = 0; k < trials && result.passed; ++k) {
      Game v = random_game(lattice, rng);
      Game w = random_game(lattice, rng);
      double a = coeff(rng);
      double b = coeff(rng);
      Game mix(lattice, a * v.worth() + b * w.worth());
      Vector expected = a * value(v).values() + b * value(w).values();
      Vector got = value(mix).values();
      if (((got - expected).cwiseAbs().maxCoeff()) > tol) {
        result.passed = false;
        result.witness = "trial " + std::to_string(k) + ": combination drifts by " +
                         std::to_string((got - expected).cwiseAbs().maxCoeff());
      }
    }
    report.results.push_back(std::move(result));
  }

  // Hierarchical strength on every unanimity game (exhaustive).
  {
    AxiomResult result{Axiom::kHierarchicalStrength, true, lat.size() - 1, ""};
    for (int s = 1; s < lat.size() && result.passed; ++s) {
      const DownSet& coalition = lat.at(s);
      Allocation phi = value(unanimity_game(lattice, coalition));
      for (int ei = 0; ei < alg.size() && result.passed; ++ei) {
        auto i = static_cast<Element>(ei);
        if (!coalition.contains(i)) continue;
        double hi = hierarchical_strength(lat, coalition, i);
        for (int ej = ei + 1; ej < alg.size(); ++ej) {
          auto j = static_cast<Element>(ej);
          if (!coalition.contains(j)) continue;
          double hj = hierarchical_strength(lat, coalition, j);
          if (std::abs(hi * phi.at(j) - hj * phi.at(i)) > tol) {
            result.passed = false;
            result.witness = "coalition " + lat.key_of(s) + ", players " +
                             alg.element_key(i) + "," + alg.element_key(j);
            break;
          }
        }
      }
    }
    report.results.push_back(std::move(result));
  }

  return report;
}

}  // namespace latval
