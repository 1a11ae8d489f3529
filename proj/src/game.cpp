#include "latval/game.hpp"

#include <algorithm>
#include <cmath>

namespace latval {

namespace {

MemberMask bit_of(Element e) { return MemberMask{1} << e; }

void require_same_lattice(const DownSetLattice& lattice, const DownSet& s) {
  if (s.algebra() != lattice.algebra()) {
    throw std::invalid_argument("down-set from a different algebra");
  }
}

}  // namespace

Game::Game(std::shared_ptr<const DownSetLattice> lattice, Vector worth)
    : lattice_(std::move(lattice)), worth_(std::move(worth)) {
  if (worth_.size() != lattice_->size()) {
    throw std::invalid_argument("worth vector length must equal the coalition count");
  }
  if (worth_(0) != 0.0) {
    throw std::invalid_argument("worth of the empty coalition must be 0");
  }
  if (!worth_.allFinite()) {
    throw std::invalid_argument("worth entries must be finite");
  }
}

Game Game::from_map(std::shared_ptr<const DownSetLattice> lattice,
                    const std::map<std::string, double>& worth_by_key) {
  Vector worth = Vector::Zero(lattice->size());
  std::vector<bool> seen(lattice->size(), false);
  seen[0] = true;
  for (const auto& [key, value] : worth_by_key) {
    auto index = lattice->find_key(key);
    if (!index) {
      throw validation_error("unknown coalition key '" + key + "'");
    }
    if (*index == 0) {
      throw validation_error("the empty coalition '<>' is implicit and fixed at 0");
    }
    seen[*index] = true;
    worth(*index) = value;
  }
  for (int i = 1; i < lattice->size(); ++i) {
    if (!seen[i]) {
      throw validation_error("missing worth for coalition '" +
                             lattice->key_of(i) + "'");
    }
  }
  return Game(std::move(lattice), std::move(worth));
}

DividendTable::DividendTable(std::shared_ptr<const DownSetLattice> lattice,
                             Vector dividend)
    : lattice_(std::move(lattice)), dividend_(std::move(dividend)) {
  if (dividend_.size() != lattice_->size()) {
    throw std::invalid_argument("dividend vector length must equal the coalition count");
  }
  if (dividend_(0) != 0.0) {
    throw std::invalid_argument("dividend of the empty coalition must be 0");
  }
}

Game unanimity_game(std::shared_ptr<const DownSetLattice> lattice,
                    const DownSet& t) {
  require_same_lattice(*lattice, t);
  if (t.is_empty()) {
    throw std::invalid_argument("unanimity game requires a nonempty coalition");
  }
  Vector worth = Vector::Zero(lattice->size());
  for (int i = 0; i < lattice->size(); ++i) {
    if (t.is_subset_of(lattice->at(i))) worth(i) = 1.0;
  }
  return Game(std::move(lattice), std::move(worth));
}

DividendTable harsanyi_transform(const Game& v) {
  const DownSetLattice& lat = v.lattice();
  const int m = lat.size();
  Vector div = Vector::Zero(m);
  for (int i = 1; i < m; ++i) {
    MemberMask si = lat.at(i).members();
    double acc = 0.0;
    for (int j = 1; j < i; ++j) {
      if ((lat.at(j).members() & ~si) == 0) acc += div(j);
    }
    div(i) = v.at(i) - acc;
  }
  return DividendTable(v.lattice_ptr(), std::move(div));
}

Game zeta_transform(const DividendTable& d) {
  const DownSetLattice& lat = d.lattice();
  const int m = lat.size();
  Vector worth = Vector::Zero(m);
  for (int i = 1; i < m; ++i) {
    MemberMask si = lat.at(i).members();
    double acc = 0.0;
    for (int j = 1; j <= i; ++j) {
      if ((lat.at(j).members() & ~si) == 0) acc += d.at(j);
    }
    worth(i) = acc;
  }
  return Game(d.lattice_ptr(), std::move(worth));
}

std::optional<PairWitness> monotonicity_violation(const Game& v, double tol) {
  const DownSetLattice& lat = v.lattice();
  for (int i = 0; i < lat.size(); ++i) {
    for (int j = 0; j < lat.size(); ++j) {
      if (i == j) continue;
      if ((lat.at(i).members() & ~lat.at(j).members()) != 0) continue;
      if (v.at(i) > v.at(j) + tol) return PairWitness{i, j};
    }
  }
  return std::nullopt;
}

std::optional<int> negativity_violation(const Game& v, double tol) {
  for (int i = 0; i < v.size(); ++i) {
    if (v.at(i) < -tol) return i;
  }
  return std::nullopt;
}

namespace {

std::optional<PairWitness> modularity_violation(const Game& v, double tol,
                                                bool super) {
  const DownSetLattice& lat = v.lattice();
  for (int i = 0; i < lat.size(); ++i) {
    for (int j = i + 1; j < lat.size(); ++j) {
      MemberMask mi = lat.at(i).members();
      MemberMask mj = lat.at(j).members();
      double lhs = v.at(i) + v.at(j);
      double rhs = v.at(lat.index_of_mask(mi | mj)) +
                   v.at(lat.index_of_mask(mi & mj));
      if (super ? (lhs > rhs + tol) : (lhs < rhs - tol)) {
        return PairWitness{i, j};
      }
    }
  }
  return std::nullopt;
}

}  // namespace

std::optional<PairWitness> supermodularity_violation(const Game& v, double tol) {
  return modularity_violation(v, tol, /*super=*/true);
}

std::optional<PairWitness> submodularity_violation(const Game& v, double tol) {
  return modularity_violation(v, tol, /*super=*/false);
}

bool is_monotone(const Game& v, double tol) {
  return !monotonicity_violation(v, tol).has_value();
}

bool is_nonnegative(const Game& v, double tol) {
  return !negativity_violation(v, tol).has_value();
}

bool is_supermodular(const Game& v, double tol) {
  return !supermodularity_violation(v, tol).has_value();
}

bool is_submodular(const Game& v, double tol) {
  return !submodularity_violation(v, tol).has_value();
}

bool is_null_player(const Game& v, Element i, double tol) {
  const DownSetLattice& lat = v.lattice();
  const BooleanAlgebra& alg = lat.algebra();
  if (!alg.contains(i)) {
    throw std::invalid_argument("element outside the algebra");
  }
  MemberMask need = alg.down_mask(i) & ~bit_of(i);
  for (int s = 0; s < lat.size(); ++s) {
    MemberMask ms = lat.at(s).members();
    if ((ms >> i) & 1u) continue;
    if ((need & ~ms) != 0) continue;  // S u i is not feasible
    int grown = lat.index_of_mask(ms | bit_of(i));
    if (std::abs(v.at(grown) - v.at(s)) > tol) return false;
  }
  return true;
}

std::vector<Element> null_players(const Game& v, double tol) {
  std::vector<Element> out;
  const BooleanAlgebra& alg = v.lattice().algebra();
  for (int e = 0; e < alg.size(); ++e) {
    if (is_null_player(v, static_cast<Element>(e), tol)) {
      out.push_back(static_cast<Element>(e));
    }
  }
  return out;
}

bool is_carrier(const Game& v, const DownSet& u, double tol) {
  const DownSetLattice& lat = v.lattice();
  require_same_lattice(lat, u);
  for (int s = 0; s < lat.size(); ++s) {
    int cut = lat.index_of_mask(lat.at(s).members() & u.members());
    if (std::abs(v.at(s) - v.at(cut)) > tol) return false;
  }
  return true;
}

std::optional<int> null_dividend_violation(const Game& v, Element i,
                                           double tol) {
  const DownSetLattice& lat = v.lattice();
  if (!is_null_player(v, i, tol)) {
    // Name a witness coalition whose worth changes when i joins.
    const BooleanAlgebra& alg = lat.algebra();
    MemberMask need = alg.down_mask(i) & ~bit_of(i);
    for (int s = 0; s < lat.size(); ++s) {
      MemberMask ms = lat.at(s).members();
      if (((ms >> i) & 1u) || (need & ~ms) != 0) continue;
      if (std::abs(v.at(lat.index_of_mask(ms | bit_of(i))) - v.at(s)) > tol) {
        throw std::invalid_argument("player is not null: joining coalition " +
                                    lat.key_of(s) + " changes the worth");
      }
    }
    throw std::invalid_argument("player is not null");
  }
  DividendTable d = harsanyi_transform(v);
  for (int s = 1; s < lat.size(); ++s) {
    if (!lat.at(s).is_maximal(i)) continue;
    if (std::abs(d.at(s)) > tol) return s;
  }
  return std::nullopt;
}

bool null_dividend_check(const Game& v, Element i, double tol) {
  return !null_dividend_violation(v, i, tol).has_value();
}

Game automorphism_image(const Game& v, const Automorphism& sigma) {
  const DownSetLattice& lat = v.lattice();
  if (sigma.algebra() != lat.algebra()) {
    throw std::invalid_argument("automorphism from a different algebra");
  }
  const Automorphism inv = sigma.inverse();
  Vector worth = Vector::Zero(lat.size());
  for (int s = 1; s < lat.size(); ++s) {
    worth(s) = v.at(lat.index_of(apply_automorphism(inv, lat.at(s))));
  }
  return Game(v.lattice_ptr(), std::move(worth));
}

std::vector<MarginalTerm> dividend_marginal_decomposition(const Game& v,
                                                          const DownSet& s,
                                                          Element i) {
  const DownSetLattice& lat = v.lattice();
  require_same_lattice(lat, s);
  if (!s.is_maximal(i)) {
    throw std::invalid_argument("element is not maximal in the coalition");
  }

  // Sub-coalitions of S in which i stays maximal, descending cardinality.
  std::vector<int> family;
  for (int t = 1; t < lat.size(); ++t) {
    const DownSet& ds = lat.at(t);
    if ((ds.members() & ~s.members()) != 0) continue;
    if (ds.is_maximal(i)) family.push_back(t);
  }
  std::sort(family.begin(), family.end(), std::greater<int>());

  const int self = lat.index_of(s);
  std::vector<double> beta(family.size());
  for (std::size_t a = 0; a < family.size(); ++a) {
    if (family[a] == self) {
      beta[a] = 1.0;
      continue;
    }
    double acc = 0.0;
    for (std::size_t b = 0; b < a; ++b) {
      MemberMask inner = lat.at(family[a]).members();
      MemberMask outer = lat.at(family[b]).members();
      if (inner != outer && (inner & ~outer) == 0) acc += beta[b];
    }
    beta[a] = -acc;
  }

  std::vector<MarginalTerm> terms;
  terms.reserve(family.size());
  for (std::size_t a = 0; a < family.size(); ++a) {
    const DownSet& t = lat.at(family[a]);
    double marginal = v.at(family[a]) - v.at(lat.index_of(t.without(i)));
    terms.push_back(MarginalTerm{family[a], beta[a], marginal});
  }
  return terms;
}

}  // namespace latval
