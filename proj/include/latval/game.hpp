#pragma once

#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "latval/lattice.hpp"
#include "latval/types.hpp"

namespace latval {

// A coalitional game v : D(P,<=) -> R with v(empty) = 0, stored as a dense
// worth vector over the canonical down-set enumeration.
class Game {
 public:
  Game(std::shared_ptr<const DownSetLattice> lattice, Vector worth);

  // Builds a game from antichain keys; every nonempty down-set must be
  // covered (no silent zero fill), the empty coalition is implicit.
  static Game from_map(std::shared_ptr<const DownSetLattice> lattice,
                       const std::map<std::string, double>& worth_by_key);

  const DownSetLattice& lattice() const noexcept { return *lattice_; }
  std::shared_ptr<const DownSetLattice> lattice_ptr() const { return lattice_; }

  const Vector& worth() const noexcept { return worth_; }
  double at(int index) const { return worth_(index); }
  double at(const DownSet& s) const { return worth_(lattice_->index_of(s)); }

  int size() const noexcept { return static_cast<int>(worth_.size()); }

 private:
  std::shared_ptr<const DownSetLattice> lattice_;
  Vector worth_;
};

// Harsanyi dividends of a game, indexed like the game itself. The zeta
// summation over sub-coalitions reconstructs the source game.
class DividendTable {
 public:
  DividendTable(std::shared_ptr<const DownSetLattice> lattice, Vector dividend);

  const DownSetLattice& lattice() const noexcept { return *lattice_; }
  std::shared_ptr<const DownSetLattice> lattice_ptr() const { return lattice_; }

  const Vector& dividend() const noexcept { return dividend_; }
  double at(int index) const { return dividend_(index); }
  double at(const DownSet& s) const { return dividend_(lattice_->index_of(s)); }

 private:
  std::shared_ptr<const DownSetLattice> lattice_;
  Vector dividend_;
};

// u_T(S) = 1 iff T is contained in S; basis element of the game space.
Game unanimity_game(std::shared_ptr<const DownSetLattice> lattice,
                    const DownSet& t);

// Mobius transform by the recursion vhat(S) = v(S) - sum of vhat over
// proper sub-coalitions, taken in the canonical cardinality order.
DividendTable harsanyi_transform(const Game& v);

// Inverse of the Mobius transform: v(S) = sum of dividends of subsets.
Game zeta_transform(const DividendTable& d);

// Witness pair of lattice indices for a failed structural predicate.
struct PairWitness {
  int first;
  int second;
};

std::optional<PairWitness> monotonicity_violation(const Game& v,
                                                  double tol = 0.0);
std::optional<int> negativity_violation(const Game& v, double tol = 0.0);
std::optional<PairWitness> supermodularity_violation(const Game& v,
                                                     double tol = 0.0);
std::optional<PairWitness> submodularity_violation(const Game& v,
                                                   double tol = 0.0);

bool is_monotone(const Game& v, double tol = 0.0);
bool is_nonnegative(const Game& v, double tol = 0.0);
bool is_supermodular(const Game& v, double tol = 0.0);
bool is_submodular(const Game& v, double tol = 0.0);

// i is null when joining it to any feasible coalition never changes worth.
bool is_null_player(const Game& v, Element i, double tol = 0.0);
std::vector<Element> null_players(const Game& v, double tol = 0.0);

// U is a carrier when v(S) = v(S n U) for every coalition S.
bool is_carrier(const Game& v, const DownSet& u, double tol = 0.0);

// For a null player i, every coalition with i maximal has zero dividend.
// Returns the offending coalition index, or nullopt when the property
// holds. Throws std::invalid_argument when i is not null.
std::optional<int> null_dividend_violation(const Game& v, Element i,
                                           double tol = 1e-12);
bool null_dividend_check(const Game& v, Element i, double tol = 1e-12);

// The game (sigma v)(S) = v(sigma^{-1}(S)).
Game automorphism_image(const Game& v, const Automorphism& sigma);

// One term of the alternating expansion of a dividend into marginal
// contributions of a fixed maximal player.
struct MarginalTerm {
  int coalition_index;
  double beta;
  double marginal;  // v(T) - v(T \ i)
};

// Expands vhat(S) as sum of beta_i(T) * (v(T) - v(T\i)) over sub-coalitions
// T of S in which i stays maximal; beta_i(S) = 1 and beta_i(T) = -1 one
// level down. Terms are ordered by descending cardinality from S.
std::vector<MarginalTerm> dividend_marginal_decomposition(const Game& v,
                                                          const DownSet& s,
                                                          Element i);

}  // namespace latval
