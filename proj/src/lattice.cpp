#include "latval/lattice.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <numeric>
#include <sstream>
#include <unordered_set>

namespace latval {

namespace {

MemberMask bit_of(Element e) { return MemberMask{1} << e; }

std::uint64_t checked_add(std::uint64_t a, std::uint64_t b) {
  std::uint64_t out = 0;
  if (__builtin_add_overflow(a, b, &out)) {
    throw capacity_error("chain count overflows 64 bits");
  }
  return out;
}

}  // namespace

BooleanAlgebra::BooleanAlgebra(int rank) : rank_(rank) {
  if (rank < 1 || rank > kMaxRank) {
    throw capacity_error("boolean algebra rank must be between 1 and " +
                         std::to_string(kMaxRank));
  }
}

Element BooleanAlgebra::atom(int k) const {
  if (k < 0 || k >= rank_) {
    throw std::invalid_argument("atom index out of range");
  }
  return Element{1} << k;
}

MemberMask BooleanAlgebra::down_mask(Element e) const {
  if (!contains(e)) {
    throw std::invalid_argument("element outside the algebra");
  }
  MemberMask m = 0;
  Element sub = e;
  while (true) {
    m |= bit_of(sub);
    if (sub == 0) break;
    sub = (sub - 1) & e;
  }
  return m;
}

std::string BooleanAlgebra::element_key(Element e) const {
  if (!contains(e)) {
    throw std::invalid_argument("element outside the algebra");
  }
  if (e == 0) return "0";
  std::string key;
  for (int k = 0; k < rank_; ++k) {
    if ((e >> k) & 1u) key.push_back(static_cast<char>('a' + k));
  }
  return key;
}

Element BooleanAlgebra::element_from_key(std::string_view key) const {
  if (key == "0") return 0;
  if (key.empty()) {
    throw validation_error("empty element key");
  }
  Element e = 0;
  for (char c : key) {
    int k = c - 'a';
    if (k < 0 || k >= rank_) {
      throw validation_error("element key '" + std::string(key) +
                             "' names an atom outside rank " +
                             std::to_string(rank_));
    }
    if ((e >> k) & 1u) {
      throw validation_error("element key '" + std::string(key) +
                             "' repeats an atom");
    }
    e |= Element{1} << k;
  }
  return e;
}

DownSet::DownSet(const BooleanAlgebra& algebra, MemberMask members)
    : rank_(algebra.rank()), members_(members) {
  if (algebra.size() < 64 && (members >> algebra.size()) != 0) {
    throw std::invalid_argument("member mask names elements outside the algebra");
  }
  for (int e = 0; e < algebra.size(); ++e) {
    if (!contains(static_cast<Element>(e))) continue;
    if ((algebra.down_mask(static_cast<Element>(e)) & ~members_) != 0) {
      throw std::invalid_argument("set is not closed downward");
    }
  }
  maximal_ = maximal_elements(algebra, members_);
}

DownSet DownSet::unchecked(const BooleanAlgebra& algebra, MemberMask members) {
  return DownSet(algebra.rank(), members, maximal_elements(algebra, members));
}

DownSet DownSet::empty(const BooleanAlgebra& algebra) {
  return DownSet(algebra.rank(), 0, {});
}

DownSet DownSet::whole(const BooleanAlgebra& algebra) {
  MemberMask all = algebra.size() == 64 ? ~MemberMask{0}
                                        : (MemberMask{1} << algebra.size()) - 1;
  return DownSet(algebra.rank(), all, {algebra.top()});
}

bool DownSet::is_maximal(Element e) const {
  return std::find(maximal_.begin(), maximal_.end(), e) != maximal_.end();
}

DownSet DownSet::without(Element maximal_element) const {
  if (!is_maximal(maximal_element)) {
    throw std::invalid_argument("element is not maximal in the down-set");
  }
  return unchecked(algebra(), members_ & ~bit_of(maximal_element));
}

bool DownSet::is_subset_of(const DownSet& other) const {
  if (rank_ != other.rank_) {
    throw std::invalid_argument("down-sets from different algebras");
  }
  return (members_ & ~other.members_) == 0;
}

std::string DownSet::key() const {
  const BooleanAlgebra alg = algebra();
  std::vector<std::string> keys;
  keys.reserve(maximal_.size());
  for (Element e : maximal_) keys.push_back(alg.element_key(e));
  std::sort(keys.begin(), keys.end());
  std::string out = "<";
  for (std::size_t i = 0; i < keys.size(); ++i) {
    if (i > 0) out.push_back(',');
    out += keys[i];
  }
  out.push_back('>');
  return out;
}

std::vector<Element> maximal_elements(const BooleanAlgebra& algebra,
                                      MemberMask subset) {
  std::vector<Element> out;
  for (int e = 0; e < algebra.size(); ++e) {
    if (!((subset >> e) & 1u)) continue;
    bool maximal = true;
    for (int j = 0; j < algebra.size(); ++j) {
      if (j == e || !((subset >> j) & 1u)) continue;
      if (BooleanAlgebra::leq(static_cast<Element>(e), static_cast<Element>(j))) {
        maximal = false;
        break;
      }
    }
    if (maximal) out.push_back(static_cast<Element>(e));
  }
  return out;
}

std::vector<Element> maximal_elements(const BooleanAlgebra& algebra,
                                      std::span<const Element> subset) {
  MemberMask m = 0;
  for (Element e : subset) {
    if (!algebra.contains(e)) {
      throw std::invalid_argument("element outside the algebra");
    }
    m |= bit_of(e);
  }
  return maximal_elements(algebra, m);
}

DownSet down_closure(const BooleanAlgebra& algebra,
                     std::span<const Element> generators) {
  MemberMask members = 0;
  for (Element g : generators) {
    if (!algebra.contains(g)) {
      throw std::invalid_argument("generator outside the algebra");
    }
    members |= algebra.down_mask(g);
  }
  return DownSet::unchecked(algebra, members);
}

DownSet down_closure(const BooleanAlgebra& algebra,
                     std::initializer_list<Element> generators) {
  return down_closure(algebra, std::span<const Element>(generators.begin(),
                                                        generators.size()));
}

DownSetLattice::DownSetLattice(const BooleanAlgebra& algebra)
    : algebra_(algebra) {}

std::shared_ptr<const DownSetLattice> DownSetLattice::make(
    const BooleanAlgebra& algebra, int max_rank) {
  if (algebra.rank() > max_rank) {
    throw capacity_error(
        "down-set enumeration capped at rank " + std::to_string(max_rank) +
        "; the coalition count grows as the Dedekind numbers "
        "(6, 20, 168, 7581, 7828354, ...)");
  }

  // Breadth-first closure growth: extend each down-set by one addable
  // element, deduplicated by member mask.
  const int n = algebra.size();
  std::vector<MemberMask> preds(n);
  for (int e = 0; e < n; ++e) {
    preds[e] = algebra.down_mask(static_cast<Element>(e)) & ~bit_of(e);
  }

  std::unordered_set<MemberMask> seen{0};
  std::deque<MemberMask> queue{0};
  std::vector<MemberMask> masks{0};
  while (!queue.empty()) {
    MemberMask s = queue.front();
    queue.pop_front();
    for (int e = 0; e < n; ++e) {
      if ((s >> e) & 1u) continue;
      if ((preds[e] & ~s) != 0) continue;
      MemberMask grown = s | bit_of(e);
      if (seen.insert(grown).second) {
        queue.push_back(grown);
        masks.push_back(grown);
      }
    }
  }

  auto lattice = std::shared_ptr<DownSetLattice>(new DownSetLattice(algebra));
  lattice->downsets_.reserve(masks.size());
  for (MemberMask m : masks) {
    lattice->downsets_.push_back(DownSet::unchecked(algebra, m));
  }

  std::vector<std::string> raw_keys(masks.size());
  for (std::size_t i = 0; i < masks.size(); ++i) {
    raw_keys[i] = lattice->downsets_[i].key();
  }
  std::vector<int> perm(masks.size());
  std::iota(perm.begin(), perm.end(), 0);
  std::sort(perm.begin(), perm.end(), [&](int a, int b) {
    int ca = lattice->downsets_[a].size();
    int cb = lattice->downsets_[b].size();
    if (ca != cb) return ca < cb;
    return raw_keys[a] < raw_keys[b];
  });

  std::vector<DownSet> ordered;
  ordered.reserve(masks.size());
  lattice->keys_.reserve(masks.size());
  for (std::size_t i = 0; i < perm.size(); ++i) {
    ordered.push_back(std::move(lattice->downsets_[perm[i]]));
    lattice->keys_.push_back(std::move(raw_keys[perm[i]]));
    lattice->index_.emplace(ordered.back().members(), static_cast<int>(i));
  }
  lattice->downsets_ = std::move(ordered);
  return lattice;
}

int DownSetLattice::index_of(const DownSet& s) const {
  if (s.algebra() != algebra_) {
    throw std::invalid_argument("down-set from a different algebra");
  }
  return index_of_mask(s.members());
}

int DownSetLattice::index_of_mask(MemberMask members) const {
  auto it = index_.find(members);
  if (it == index_.end()) {
    throw std::invalid_argument("mask is not a down-set of this lattice");
  }
  return it->second;
}

std::optional<int> DownSetLattice::find_key(std::string_view key) const {
  for (int i = 0; i < size(); ++i) {
    if (keys_[i] == key) return i;
  }
  return std::nullopt;
}

std::uint64_t count_down_sets(const BooleanAlgebra& algebra, int max_rank) {
  if (algebra.rank() > max_rank) {
    throw capacity_error(
        "down-set counting capped at rank " + std::to_string(max_rank) +
        "; counts grow as the Dedekind numbers");
  }
  const int n = algebra.size();
  std::vector<MemberMask> preds(n);
  for (int e = 0; e < n; ++e) {
    preds[e] = algebra.down_mask(static_cast<Element>(e)) & ~bit_of(e);
  }
  // Level-by-level growth (level = cardinality) keeps only one level of
  // masks alive, which makes rank 6 feasible.
  std::uint64_t total = 1;  // the empty down-set
  std::unordered_set<MemberMask> level{0};
  while (!level.empty()) {
    std::unordered_set<MemberMask> next;
    for (MemberMask s : level) {
      for (int e = 0; e < n; ++e) {
        if ((s >> e) & 1u) continue;
        if ((preds[e] & ~s) != 0) continue;
        next.insert(s | bit_of(e));
      }
    }
    total += next.size();
    level = std::move(next);
  }
  return total;
}

LinearExtension::LinearExtension(const BooleanAlgebra& algebra,
                                 std::vector<Element> order)
    : rank_(algebra.rank()), order_(std::move(order)) {
  const int n = algebra.size();
  if (static_cast<int>(order_.size()) != n) {
    throw std::invalid_argument("linear extension must rank every player");
  }
  rank_of_.assign(n, 0);
  MemberMask prefix = 0;
  for (int pos = 0; pos < n; ++pos) {
    Element e = order_[pos];
    if (!algebra.contains(e) || ((prefix >> e) & 1u)) {
      throw std::invalid_argument("linear extension order is not a permutation");
    }
    if ((algebra.down_mask(e) & ~bit_of(e) & ~prefix) != 0) {
      throw std::invalid_argument("ranking does not preserve the player order");
    }
    prefix |= bit_of(e);
    rank_of_[e] = pos + 1;
  }
}

namespace {

// Depth-first enumeration over currently addable players, ascending ids.
bool visit_extensions(const BooleanAlgebra& algebra,
                      const std::vector<MemberMask>& preds,
                      std::vector<Element>& order, MemberMask prefix,
                      const std::function<bool(const LinearExtension&)>& visit) {
  const int n = algebra.size();
  if (static_cast<int>(order.size()) == n) {
    return visit(LinearExtension(algebra, order));
  }
  for (int e = 0; e < n; ++e) {
    if ((prefix >> e) & 1u) continue;
    if ((preds[e] & ~prefix) != 0) continue;
    order.push_back(static_cast<Element>(e));
    bool keep_going = visit_extensions(algebra, preds, order,
                                       prefix | bit_of(e), visit);
    order.pop_back();
    if (!keep_going) return false;
  }
  return true;
}

std::vector<MemberMask> strict_pred_masks(const BooleanAlgebra& algebra) {
  std::vector<MemberMask> preds(algebra.size());
  for (int e = 0; e < algebra.size(); ++e) {
    preds[e] = algebra.down_mask(static_cast<Element>(e)) & ~bit_of(e);
  }
  return preds;
}

}  // namespace

std::vector<LinearExtension> enumerate_linear_extensions(
    const BooleanAlgebra& algebra, int max_rank) {
  if (algebra.rank() > max_rank) {
    throw capacity_error("materialized extension enumeration capped at rank " +
                         std::to_string(max_rank) +
                         "; rank 4 already has more than 1.5e6 extensions");
  }
  std::vector<LinearExtension> out;
  for_each_linear_extension(
      algebra,
      [&](const LinearExtension& f) {
        out.push_back(f);
        return true;
      },
      max_rank);
  return out;
}

void for_each_linear_extension(
    const BooleanAlgebra& algebra,
    const std::function<bool(const LinearExtension&)>& visit, int max_rank) {
  if (algebra.rank() > max_rank) {
    throw capacity_error("extension streaming capped at rank " +
                         std::to_string(max_rank));
  }
  auto preds = strict_pred_masks(algebra);
  std::vector<Element> order;
  order.reserve(algebra.size());
  visit_extensions(algebra, preds, order, 0, visit);
}

std::uint64_t count_linear_extensions(const DownSetLattice& lattice) {
  // Linear extensions are exactly the maximal chains of D(P,<=): count
  // them bottom-up, peeling one maximal element at a time.
  std::vector<std::uint64_t> chains(lattice.size(), 0);
  chains[0] = 1;
  for (int i = 1; i < lattice.size(); ++i) {
    const DownSet& s = lattice.at(i);
    std::uint64_t total = 0;
    for (Element e : s.maximal()) {
      total = checked_add(total,
                          chains[lattice.index_of_mask(s.members() & ~bit_of(e))]);
    }
    chains[i] = total;
  }
  return chains[lattice.size() - 1];
}

std::uint64_t count_linear_extensions(const BooleanAlgebra& algebra,
                                      int max_rank) {
  if (algebra.rank() > max_rank) {
    throw capacity_error("extension counting capped at rank " +
                         std::to_string(max_rank));
  }
  return count_linear_extensions(*DownSetLattice::make(algebra, max_rank));
}

std::uint64_t count_extensions_of_subposet(const BooleanAlgebra& algebra,
                                           std::span<const Element> subset,
                                           int max_size) {
  std::vector<Element> elems(subset.begin(), subset.end());
  std::sort(elems.begin(), elems.end());
  elems.erase(std::unique(elems.begin(), elems.end()), elems.end());
  for (Element e : elems) {
    if (!algebra.contains(e)) {
      throw std::invalid_argument("element outside the algebra");
    }
  }
  const int m = static_cast<int>(elems.size());
  if (m > max_size) {
    throw capacity_error("subposet extension counting capped at " +
                         std::to_string(max_size) + " elements");
  }
  if (m == 0) return 1;

  // prec[i]: local bitmask of elements below elems[i] in the induced order.
  std::vector<std::uint32_t> prec(m, 0);
  for (int i = 0; i < m; ++i) {
    for (int j = 0; j < m; ++j) {
      if (i != j && BooleanAlgebra::leq(elems[j], elems[i])) {
        prec[i] |= std::uint32_t{1} << j;
      }
    }
  }
  std::vector<std::uint64_t> count(std::size_t{1} << m, 0);
  count[0] = 1;
  for (std::uint32_t mask = 1; mask < (std::uint32_t{1} << m); ++mask) {
    std::uint64_t total = 0;
    for (int i = 0; i < m; ++i) {
      if (!((mask >> i) & 1u)) continue;
      std::uint32_t rest = mask & ~(std::uint32_t{1} << i);
      if ((prec[i] & ~rest) != 0) continue;  // i must come last in mask
      total = checked_add(total, count[rest]);
    }
    count[mask] = total;
  }
  return count[(std::uint32_t{1} << m) - 1];
}

ExtensionSampler::ExtensionSampler(std::shared_ptr<const DownSetLattice> lattice)
    : lattice_(std::move(lattice)) {
  const auto& lat = *lattice_;
  chains_above_.assign(lat.size(), 0);
  chains_above_[lat.whole_index()] = 1;
  for (int i = lat.size() - 1; i >= 0; --i) {
    const DownSet& s = lat.at(i);
    if (i == lat.whole_index()) continue;
    const int n = lat.algebra().size();
    std::uint64_t total = 0;
    for (int e = 0; e < n; ++e) {
      if (s.contains(static_cast<Element>(e))) continue;
      MemberMask need =
          lat.algebra().down_mask(static_cast<Element>(e)) & ~bit_of(e);
      if ((need & ~s.members()) != 0) continue;
      total = checked_add(
          total, chains_above_[lat.index_of_mask(s.members() | bit_of(e))]);
    }
    chains_above_[i] = total;
  }
}

LinearExtension ExtensionSampler::sample(std::mt19937_64& rng) const {
  const auto& lat = *lattice_;
  const BooleanAlgebra& alg = lat.algebra();
  const int n = alg.size();
  std::vector<Element> order;
  order.reserve(n);
  MemberMask current = 0;
  for (int step = 0; step < n; ++step) {
    long double total = 0;
    std::vector<std::pair<Element, long double>> choices;
    for (int e = 0; e < n; ++e) {
      if ((current >> e) & 1u) continue;
      MemberMask need = alg.down_mask(static_cast<Element>(e)) & ~bit_of(e);
      if ((need & ~current) != 0) continue;
      auto weight = static_cast<long double>(
          chains_above_[lat.index_of_mask(current | bit_of(e))]);
      choices.emplace_back(static_cast<Element>(e), weight);
      total += weight;
    }
    long double u = static_cast<long double>(rng()) /
                    static_cast<long double>(std::mt19937_64::max());
    long double target = u * total;
    Element picked = choices.back().first;
    long double acc = 0;
    for (const auto& [e, w] : choices) {
      acc += w;
      if (target < acc) {
        picked = e;
        break;
      }
    }
    order.push_back(picked);
    current |= bit_of(picked);
  }
  return LinearExtension(alg, std::move(order));
}

LinearExtension sample_linear_extension(const DownSetLattice& lattice,
                                        std::uint64_t seed) {
  // One-shot convenience; build the sampler once for repeated draws.
  auto shared = DownSetLattice::make(lattice.algebra());
  ExtensionSampler sampler(shared);
  std::mt19937_64 rng(seed);
  return sampler.sample(rng);
}

WeightedExtension sample_linear_extension_greedy(const BooleanAlgebra& algebra,
                                                 std::mt19937_64& rng) {
  const int n = algebra.size();
  auto preds = strict_pred_masks(algebra);
  std::vector<Element> order;
  order.reserve(n);
  MemberMask current = 0;
  double log_weight = 0;
  for (int step = 0; step < n; ++step) {
    std::vector<Element> addable;
    for (int e = 0; e < n; ++e) {
      if ((current >> e) & 1u) continue;
      if ((preds[e] & ~current) != 0) continue;
      addable.push_back(static_cast<Element>(e));
    }
    std::uniform_int_distribution<std::size_t> pick(0, addable.size() - 1);
    Element e = addable[pick(rng)];
    log_weight += std::log(static_cast<double>(addable.size()));
    order.push_back(e);
    current |= bit_of(e);
  }
  return WeightedExtension{LinearExtension(algebra, std::move(order)),
                           log_weight};
}

Automorphism::Automorphism(const BooleanAlgebra& algebra,
                           std::vector<int> atom_map)
    : rank_(algebra.rank()), atom_map_(std::move(atom_map)) {
  if (static_cast<int>(atom_map_.size()) != rank_) {
    throw std::invalid_argument("atom map must cover every atom");
  }
  std::vector<bool> hit(rank_, false);
  for (int image : atom_map_) {
    if (image < 0 || image >= rank_ || hit[image]) {
      throw std::invalid_argument("atom map is not a permutation");
    }
    hit[image] = true;
  }
}

Automorphism Automorphism::identity(const BooleanAlgebra& algebra) {
  std::vector<int> id(algebra.rank());
  std::iota(id.begin(), id.end(), 0);
  return Automorphism(algebra, std::move(id));
}

Element Automorphism::operator()(Element e) const {
  Element out = 0;
  for (int k = 0; k < rank_; ++k) {
    if ((e >> k) & 1u) out |= Element{1} << atom_map_[k];
  }
  return out;
}

Automorphism Automorphism::inverse() const {
  std::vector<int> inv(rank_);
  for (int k = 0; k < rank_; ++k) inv[atom_map_[k]] = k;
  return Automorphism(algebra(), std::move(inv));
}

DownSet apply_automorphism(const Automorphism& sigma, const DownSet& s) {
  const BooleanAlgebra alg = s.algebra();
  MemberMask image = 0;
  for (int e = 0; e < alg.size(); ++e) {
    if (s.contains(static_cast<Element>(e))) {
      image |= bit_of(sigma(static_cast<Element>(e)));
    }
  }
  return DownSet(alg, image);
}

std::vector<Automorphism> enumerate_automorphisms(
    const BooleanAlgebra& algebra) {
  std::vector<int> perm(algebra.rank());
  std::iota(perm.begin(), perm.end(), 0);
  std::vector<Automorphism> out;
  do {
    out.emplace_back(algebra, perm);
  } while (std::next_permutation(perm.begin(), perm.end()));
  return out;
}

}  // namespace latval
