#pragma once

#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "latval/game.hpp"
#include "latval/lattice.hpp"
#include "latval/types.hpp"

namespace latval {

// Per-player payoff vector indexed by the elements of P.
class Allocation {
 public:
  Allocation(const BooleanAlgebra& algebra, Vector values);

  BooleanAlgebra algebra() const { return BooleanAlgebra(rank_); }
  const Vector& values() const noexcept { return values_; }
  double at(Element e) const { return values_(e); }
  double total() const { return values_.sum(); }

 private:
  int rank_;
  Vector values_;
};

double efficiency_residual(const Game& v, const Allocation& phi);

// ---------------------------------------------------------------------------
// Random-order values
// ---------------------------------------------------------------------------

// S_f(i): every player ranked at or below i by f. Always a down-set with i
// maximal, and removing i keeps it a down-set.
DownSet predecessor_set(const LinearExtension& f, Element i);

// v(S_f(i)) - v(S_f(i) \ i); equals the sum of dividends of sub-coalitions
// of S_f(i) in which i is maximal.
double marginal_contribution(const Game& v, const LinearExtension& f,
                             Element i);
Vector marginal_vector(const Game& v, const LinearExtension& f);

// Probability weights over linear extensions. Extensions carrying zero
// weight may be omitted from the support.
class ExtensionDistribution {
 public:
  ExtensionDistribution(std::vector<LinearExtension> extensions,
                        Vector weights);

  static ExtensionDistribution uniform(const BooleanAlgebra& algebra,
                                       int max_rank = 3);
  static ExtensionDistribution point_mass(LinearExtension f);

  std::span<const LinearExtension> extensions() const noexcept {
    return extensions_;
  }
  const Vector& weights() const noexcept { return weights_; }

 private:
  std::vector<LinearExtension> extensions_;
  Vector weights_;
};

// phi^r(v): expectation of marginal vectors under r. Efficient, linear,
// positive on monotone games, zero for null players.
Allocation random_order_value(const Game& v, const ExtensionDistribution& r);

// ---------------------------------------------------------------------------
// Selectors
// ---------------------------------------------------------------------------

// A choice of one maximal player for every nonempty coalition.
class Selector {
 public:
  // choice[index] for index >= 1 must lie in the maximal set of the
  // down-set at that lattice index; choice[0] is ignored.
  Selector(std::shared_ptr<const DownSetLattice> lattice,
           std::vector<Element> choice);

  const DownSetLattice& lattice() const noexcept { return *lattice_; }
  std::shared_ptr<const DownSetLattice> lattice_ptr() const { return lattice_; }

  Element at(int ds_index) const;
  Element at(const DownSet& s) const { return at(lattice_->index_of(s)); }

  bool operator==(const Selector& other) const {
    return choice_ == other.choice_;
  }

 private:
  std::shared_ptr<const DownSetLattice> lattice_;
  std::vector<Element> choice_;
};

// All selectors of the lattice (product of antichain sizes); capped since
// the space grows doubly exponentially with the rank.
std::vector<Selector> enumerate_selectors(
    std::shared_ptr<const DownSetLattice> lattice, int max_rank = 3);

// delta^alpha(v): player i collects the dividends of the coalitions where
// the selector picks i. Efficient but not positive in general.
Allocation selector_value(const DividendTable& d, const Selector& alpha);
Allocation selector_value(const Game& v, const Selector& alpha);

// Witness of inconsistency: nested coalitions S (inner) and T (outer) with
// alpha(T) maximal in S yet alpha(S) != alpha(T).
struct ConsistencyWitness {
  int inner;
  int outer;
};

std::optional<ConsistencyWitness> inconsistency_witness(const Selector& alpha);
std::optional<ConsistencyWitness> inconsistency_witness_on(
    const Selector& alpha, Element t);
bool is_consistent(const Selector& alpha);
bool is_consistent_on(const Selector& alpha, Element t);

// alpha_f: pick the f-highest maximal player. Consistent, injective in f,
// and its selector value is the marginal vector of f.
Selector selector_from_extension(std::shared_ptr<const DownSetLattice> lattice,
                                 const LinearExtension& f);

// f_alpha: peel the selected player off the remaining coalition, top down.
// Inverse of selector_from_extension on consistent selectors; throws
// std::invalid_argument with a witness for inconsistent input.
LinearExtension extension_from_selector(const Selector& alpha);

// ---------------------------------------------------------------------------
// Sharing values
// ---------------------------------------------------------------------------

// Per-coalition probability weights on maximal players; the row of the
// empty coalition is empty and every other row sums to one.
class SharingSystem {
 public:
  using Row = std::vector<std::pair<Element, double>>;

  SharingSystem(std::shared_ptr<const DownSetLattice> lattice,
                std::vector<Row> rows);

  const DownSetLattice& lattice() const noexcept { return *lattice_; }
  std::shared_ptr<const DownSetLattice> lattice_ptr() const { return lattice_; }

  const Row& row(int ds_index) const { return rows_.at(ds_index); }
  double q(int ds_index, Element i) const;

 private:
  std::shared_ptr<const DownSetLattice> lattice_;
  std::vector<Row> rows_;
};

// pi^q(v): each dividend is split among the maximal players of its
// coalition according to q. Linear, efficient, null players get zero;
// positivity is not guaranteed.
Allocation sharing_value(const DividendTable& d, const SharingSystem& q);
Allocation sharing_value(const Game& v, const SharingSystem& q);

// Uniform split among maximal players (priority value). Fails Positivity.
SharingSystem priority_sharing_system(
    std::shared_ptr<const DownSetLattice> lattice);

// Split proportional to player rank (proportional value). Symmetric; the
// bottom-only coalition row puts weight 1 on the bottom player.
SharingSystem proportional_sharing_system(
    std::shared_ptr<const DownSetLattice> lattice);

// Sparse probability distribution over selectors.
class SelectorDistribution {
 public:
  using Entry = std::pair<Selector, double>;

  SelectorDistribution(std::shared_ptr<const DownSetLattice> lattice,
                       std::vector<Entry> entries);

  const DownSetLattice& lattice() const noexcept { return *lattice_; }
  std::shared_ptr<const DownSetLattice> lattice_ptr() const { return lattice_; }
  std::span<const Entry> entries() const noexcept { return entries_; }

 private:
  std::shared_ptr<const DownSetLattice> lattice_;
  std::vector<Entry> entries_;
};

// Average selector value sum_alpha p(alpha) delta^alpha(v).
Allocation average_selector_value(const DividendTable& d,
                                  const SelectorDistribution& p);

// q_p(S,i): total probability of selectors choosing i at S.
SharingSystem sharing_from_selector_distribution(const SelectorDistribution& p);

// p_q(alpha) = product over nonempty S of q(S, alpha(S)); enumerates the
// selector space, so capped by rank.
SelectorDistribution selector_distribution_from_sharing(const SharingSystem& q,
                                                        int max_rank = 3);

// ---------------------------------------------------------------------------
// Negative sharing-value witness construction
// ---------------------------------------------------------------------------

// A player t and the largest coalition T selected to t, suitable as inputs
// for prop4_witness. Empty when the selector offers no such site.
struct Prop4Site {
  Element t;
  DownSet T;
};
std::optional<Prop4Site> prop4_locate(const Selector& alpha);

// Builds a monotone game for a selector inconsistent on t with selection
// ceiling T: worth vanishes below each maximal inconsistency witness S_i,
// the t-marginals vanish outside {S_i}, and v(S_i) = level. The resulting
// selector value of t is -k * level, so any two-point distribution putting
// more than half its mass on alpha prices t negatively.
Game prop4_witness(const Selector& alpha, Element t, const DownSet& T,
                   double level = 1.0);

// ---------------------------------------------------------------------------
// Hierarchical value
// ---------------------------------------------------------------------------

// h_S(i): fraction of linear extensions ranking i above every player of S;
// positive exactly when i is maximal in S. Computed exactly from maximal
// chain counts of the down-set lattice.
double hierarchical_strength(const DownSetLattice& lattice, const DownSet& s,
                             Element i);

// Monte-Carlo estimate of the same ratio from uniform extension samples.
double hierarchical_strength_sampled(const ExtensionSampler& sampler,
                                     const DownSet& s, Element i,
                                     int samples, std::uint64_t seed);

// The sharing system of hierarchical strengths.
SharingSystem hierarchical_sharing_system(
    std::shared_ptr<const DownSetLattice> lattice);

// Three exact routes to the hierarchical value; they agree.
Allocation hierarchical_value_dividend(const Game& v, int max_rank = 3);
Allocation hierarchical_value_random_order(const Game& v, int max_rank = 3);
Allocation hierarchical_value_probabilistic(const Game& v, int max_rank = 3);

// Unbiased sampling estimate of the uniform random-order form, with a
// per-player standard error from the empirical variance.
struct SampledAllocation {
  Allocation value;
  Vector standard_error;
  std::uint64_t samples;
  std::uint64_t seed;
};
SampledAllocation hierarchical_value_sampled(const Game& v,
                                             std::uint64_t samples,
                                             std::uint64_t seed);

// ---------------------------------------------------------------------------
// Axiom checking and game generators
// ---------------------------------------------------------------------------

enum class Axiom {
  kEfficiency,
  kPositivity,
  kNullPlayer,
  kCarrier,
  kSymmetry,
  kLinearity,
  kHierarchicalStrength,
};

std::string axiom_name(Axiom axiom);

struct AxiomResult {
  Axiom axiom;
  bool passed;
  int trials;
  std::string witness;  // empty when passed
};

struct AxiomReport {
  std::string value_name;
  std::vector<AxiomResult> results;
  bool all_passed() const;
};

using ValueOperator = std::function<Allocation(const Game&)>;

// Randomized plus exhaustive-small-case testing of the seven axioms.
AxiomReport check_axioms(std::shared_ptr<const DownSetLattice> lattice,
                         const ValueOperator& value,
                         const std::string& value_name, int trials,
                         std::uint64_t seed, double tol = 1e-9);

// Worths drawn i.i.d. standard normal (empty coalition stays zero).
Game random_game(std::shared_ptr<const DownSetLattice> lattice,
                 std::mt19937_64& rng);

// Mixed-sign sparse dividends, zeta transform, then monotone repair by
// raising each coalition to its covered predecessors.
Game random_monotone_game(std::shared_ptr<const DownSetLattice> lattice,
                          std::mt19937_64& rng);

// 0/1 indicator of a random up-closed family: a vertex of the monotone
// order polytope, useful for positivity searches.
Game random_upset_game(std::shared_ptr<const DownSetLattice> lattice,
                       std::mt19937_64& rng);

// Copies v and forces i to be null by propagating worths upward.
Game force_null_player(const Game& v, Element i);

}  // namespace latval
