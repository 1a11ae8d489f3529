#pragma once

#include <bit>
#include <cstdint>
#include <functional>
#include <memory>
#include <optional>
#include <random>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "latval/errors.hpp"

namespace latval {

// A player is identified by its set of atoms, packed into the low bits.
// Order, join and meet reduce to subset tests and bit operations.
using Element = std::uint32_t;

// Bitset over all 2^n players of an algebra; bit e set means player e belongs.
using MemberMask = std::uint64_t;

// The boolean algebra (P, <=) of players with n atoms and 2^n elements.
// Stateless beyond its rank; all structure is bit arithmetic on Element.
class BooleanAlgebra {
 public:
  static constexpr int kMaxRank = 6;  // MemberMask holds at most 2^6 players

  explicit BooleanAlgebra(int rank);

  int rank() const noexcept { return rank_; }
  int size() const noexcept { return 1 << rank_; }

  Element bottom() const noexcept { return 0; }
  Element top() const noexcept { return static_cast<Element>(size() - 1); }
  Element atom(int k) const;

  bool contains(Element e) const noexcept {
    return e < static_cast<Element>(size());
  }

  static bool leq(Element i, Element j) noexcept { return (i & j) == i; }
  static Element join(Element i, Element j) noexcept { return i | j; }
  static Element meet(Element i, Element j) noexcept { return i & j; }
  static int element_rank(Element e) noexcept { return std::popcount(e); }

  // Bitset of every player below or equal to e.
  MemberMask down_mask(Element e) const;

  // Canonical textual key: sorted atom letters from 'a', "0" for the bottom.
  std::string element_key(Element e) const;
  Element element_from_key(std::string_view key) const;

  bool operator==(const BooleanAlgebra&) const = default;

 private:
  int rank_;
};

// A feasible coalition: a subset of P closed downward, keyed by the
// antichain of its maximal elements.
class DownSet {
 public:
  // Validates downward closure; throws std::invalid_argument otherwise.
  DownSet(const BooleanAlgebra& algebra, MemberMask members);

  static DownSet empty(const BooleanAlgebra& algebra);
  static DownSet whole(const BooleanAlgebra& algebra);

  BooleanAlgebra algebra() const { return BooleanAlgebra(rank_); }
  MemberMask members() const noexcept { return members_; }
  bool contains(Element e) const noexcept { return (members_ >> e) & 1u; }
  int size() const noexcept { return std::popcount(members_); }
  bool is_empty() const noexcept { return members_ == 0; }

  // The antichain S*, ascending by element id.
  std::span<const Element> maximal() const noexcept { return maximal_; }
  bool is_maximal(Element e) const;

  // Removing a maximal element keeps the set downward closed.
  DownSet without(Element maximal_element) const;

  bool is_subset_of(const DownSet& other) const;

  // Canonical key "<k1,k2,...>" over maximal-element keys in string order.
  std::string key() const;

  bool operator==(const DownSet& other) const {
    return rank_ == other.rank_ && members_ == other.members_;
  }

 private:
  DownSet(int rank, MemberMask members, std::vector<Element> maximal)
      : rank_(rank), members_(members), maximal_(std::move(maximal)) {}

  friend class DownSetLattice;
  friend DownSet down_closure(const BooleanAlgebra&, std::span<const Element>);

  static DownSet unchecked(const BooleanAlgebra& algebra, MemberMask members);

  int rank_;
  MemberMask members_;
  std::vector<Element> maximal_;
};

// Maximal elements of an arbitrary subset of P (as mask or list).
std::vector<Element> maximal_elements(const BooleanAlgebra& algebra,
                                      MemberMask subset);
std::vector<Element> maximal_elements(const BooleanAlgebra& algebra,
                                      std::span<const Element> subset);

// Downward closure <generators>; throws std::invalid_argument on foreign
// elements. Idempotent on down-sets.
DownSet down_closure(const BooleanAlgebra& algebra,
                     std::span<const Element> generators);
DownSet down_closure(const BooleanAlgebra& algebra,
                     std::initializer_list<Element> generators);

// The lattice D(P,<=) of all down-sets, enumerated once in the canonical
// order (member cardinality, then key string) and indexed 0..|D|-1 with the
// empty coalition at index 0. Immutable and shareable across threads.
class DownSetLattice {
 public:
  static constexpr int kDefaultMaxRank = 5;

  static std::shared_ptr<const DownSetLattice> make(
      const BooleanAlgebra& algebra, int max_rank = kDefaultMaxRank);

  const BooleanAlgebra& algebra() const noexcept { return algebra_; }
  int size() const noexcept { return static_cast<int>(downsets_.size()); }
  const DownSet& at(int index) const { return downsets_.at(index); }
  const std::string& key_of(int index) const { return keys_.at(index); }

  int index_of(const DownSet& s) const;
  int index_of_mask(MemberMask members) const;
  std::optional<int> find_key(std::string_view key) const;

  int whole_index() const noexcept { return size() - 1; }

 private:
  explicit DownSetLattice(const BooleanAlgebra& algebra);

  BooleanAlgebra algebra_;
  std::vector<DownSet> downsets_;
  std::vector<std::string> keys_;
  std::unordered_map<MemberMask, int> index_;
};

// Count |D(P,<=)| without materializing the lattice; allows rank 6.
std::uint64_t count_down_sets(const BooleanAlgebra& algebra, int max_rank = 6);

// An order-preserving bijective ranking f : P -> {1,...,2^n}.
class LinearExtension {
 public:
  // order[k] is the player ranked k+1; validates order preservation.
  LinearExtension(const BooleanAlgebra& algebra, std::vector<Element> order);

  BooleanAlgebra algebra() const { return BooleanAlgebra(rank_); }
  int rank_of(Element e) const { return rank_of_.at(e); }  // 1-based
  Element at_rank(int r) const { return order_.at(r - 1); }
  std::span<const Element> order() const noexcept { return order_; }

  bool operator==(const LinearExtension& other) const {
    return rank_ == other.rank_ && order_ == other.order_;
  }

 private:
  int rank_;
  std::vector<Element> order_;
  std::vector<int> rank_of_;
};

// Materialized enumeration in deterministic order; capped (48 extensions at
// rank 3 is the default ceiling, rank 4 already exceeds 1.6 million).
std::vector<LinearExtension> enumerate_linear_extensions(
    const BooleanAlgebra& algebra, int max_rank = 3);

// Streaming visit without materialization; the visitor returns false to
// stop early. Permitted through rank 4 by default.
void for_each_linear_extension(
    const BooleanAlgebra& algebra,
    const std::function<bool(const LinearExtension&)>& visit,
    int max_rank = 4);

// |L(P)| by dynamic programming over maximal chains of D(P,<=).
std::uint64_t count_linear_extensions(const DownSetLattice& lattice);
std::uint64_t count_linear_extensions(const BooleanAlgebra& algebra,
                                      int max_rank = 5);

// Number of linear extensions of the subposet induced on `subset`; exact
// backtracking with memoization, capped at |subset| <= 16.
std::uint64_t count_extensions_of_subposet(const BooleanAlgebra& algebra,
                                           std::span<const Element> subset,
                                           int max_size = 16);

// Exactly uniform sampling of linear extensions, guided by chain counts of
// the down-set lattice.
class ExtensionSampler {
 public:
  explicit ExtensionSampler(std::shared_ptr<const DownSetLattice> lattice);

  LinearExtension sample(std::mt19937_64& rng) const;

  const DownSetLattice& lattice() const { return *lattice_; }

 private:
  std::shared_ptr<const DownSetLattice> lattice_;
  std::vector<std::uint64_t> chains_above_;  // maximal chains from S to P
};

LinearExtension sample_linear_extension(const DownSetLattice& lattice,
                                        std::uint64_t seed);

// Greedy sampler: uniform choice among currently addable players. Not
// uniform over L(P); the weight (product of branching factors, returned as
// a logarithm) must be carried for self-normalized importance estimates.
struct WeightedExtension {
  LinearExtension extension;
  double log_weight;
};
WeightedExtension sample_linear_extension_greedy(const BooleanAlgebra& algebra,
                                                 std::mt19937_64& rng);

// An atom permutation lifted elementwise to P; preserves order, join, meet
// and rank.
class Automorphism {
 public:
  Automorphism(const BooleanAlgebra& algebra, std::vector<int> atom_map);

  static Automorphism identity(const BooleanAlgebra& algebra);

  BooleanAlgebra algebra() const { return BooleanAlgebra(rank_); }
  Element operator()(Element e) const;
  Automorphism inverse() const;
  std::span<const int> atom_map() const noexcept { return atom_map_; }

 private:
  int rank_;
  std::vector<int> atom_map_;
};

DownSet apply_automorphism(const Automorphism& sigma, const DownSet& s);

// All n! atom permutations of the algebra.
std::vector<Automorphism> enumerate_automorphisms(const BooleanAlgebra& algebra);

}  // namespace latval
