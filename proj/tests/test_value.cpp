#include <cmath>
#include <map>
#include <numeric>
#include <random>
#include <set>

#include "doctest.h"
#include "latval/value.hpp"
#include "oracles.hpp"

using namespace latval;

namespace {

std::shared_ptr<const DownSetLattice> lattice2() {
  static auto lattice = DownSetLattice::make(BooleanAlgebra(2));
  return lattice;
}

std::shared_ptr<const DownSetLattice> lattice3() {
  static auto lattice = DownSetLattice::make(BooleanAlgebra(3));
  return lattice;
}

const std::vector<LinearExtension>& extensions3() {
  static auto fs = enumerate_linear_extensions(BooleanAlgebra(3));
  return fs;
}

// The running example ranking: bottom,a,b,a+b,c,a+c,b+c,top.
LinearExtension figure_extension() {
  return LinearExtension(BooleanAlgebra(3),
                         std::vector<Element>{0, 1, 2, 3, 4, 5, 6, 7});
}

Selector selector_by_key(std::shared_ptr<const DownSetLattice> lattice,
                         const std::map<std::string, Element>& picks) {
  std::vector<Element> choice(lattice->size(), 0);
  for (int i = 1; i < lattice->size(); ++i) {
    auto it = picks.find(lattice->key_of(i));
    choice[i] = it != picks.end() ? it->second : lattice->at(i).maximal()[0];
  }
  return Selector(std::move(lattice), std::move(choice));
}

Game rank2_worked_example() {
  return Game::from_map(lattice2(), {{"<0>", 0.0},
                                     {"<a>", 1.0},
                                     {"<b>", 0.0},
                                     {"<a,b>", 2.0},
                                     {"<ab>", 3.0}});
}

}  // namespace

TEST_CASE("predecessor sets") {
  LinearExtension f = figure_extension();
  DownSet s = predecessor_set(f, 5);
  CHECK(s.members() == MemberMask{0b00111111});

  for (const LinearExtension& g : extensions3()) {
    CHECK(predecessor_set(g, 0).members() == MemberMask{1});
    CHECK(predecessor_set(g, 7).members() == MemberMask{0xFF});
    for (Element i = 0; i < 8; ++i) {
      DownSet pred = predecessor_set(g, i);
      CHECK(pred.is_maximal(i));
      CHECK_NOTHROW(pred.without(i));
    }
  }
}

TEST_CASE("marginal contributions and the dividend identity") {
  std::mt19937_64 rng(901);
  auto lat3 = lattice3();
  for (int trial = 0; trial < 60; ++trial) {
    Game v = random_game(lat3, rng);
    DividendTable d = harsanyi_transform(v);
    for (const LinearExtension& f :
         {extensions3()[trial % 48], extensions3()[(7 * trial) % 48]}) {
      double total = 0.0;
      for (Element i = 0; i < 8; ++i) {
        double direct = marginal_contribution(v, f, i);
        total += direct;

        // Independent route: dividends of sub-coalitions of the
        // predecessor set in which i stays maximal.
        DownSet pred = predecessor_set(f, i);
        double via_dividends = 0.0;
        for (int s = 1; s < lat3->size(); ++s) {
          if ((lat3->at(s).members() & ~pred.members()) != 0) continue;
          if (lat3->at(s).is_maximal(i)) via_dividends += d.at(s);
        }
        CHECK(direct == doctest::Approx(via_dividends).epsilon(1e-12));
      }
      CHECK(total ==
            doctest::Approx(v.at(lat3->whole_index())).epsilon(1e-12));
    }
  }

  // The bottom player adds nothing when the bottom coalition is worthless.
  Game worked = rank2_worked_example();
  for (const LinearExtension& f : enumerate_linear_extensions(BooleanAlgebra(2))) {
    CHECK(marginal_contribution(worked, f, 0) == 0.0);
  }
}

TEST_CASE("random-order values") {
  std::mt19937_64 rng(902);
  auto lat3 = lattice3();

  // Degenerate distribution reproduces the marginal vector.
  Game v = random_game(lat3, rng);
  const LinearExtension& f = extensions3()[17];
  Allocation point = random_order_value(v, ExtensionDistribution::point_mass(f));
  CHECK((point.values() - marginal_vector(v, f)).cwiseAbs().maxCoeff() == 0.0);

  // The uniform distribution gives the hierarchical value.
  ExtensionDistribution uniform = ExtensionDistribution::uniform(BooleanAlgebra(3));
  for (int trial = 0; trial < 25; ++trial) {
    Game w = random_game(lat3, rng);
    Allocation by_orders = random_order_value(w, uniform);
    Allocation by_dividends = hierarchical_value_dividend(w);
    CHECK((by_orders.values() - by_dividends.values()).cwiseAbs().maxCoeff() <=
          1e-9);
    CHECK(std::abs(efficiency_residual(w, by_orders)) <= 1e-9);
  }

  // Positivity on monotone games and zero pay for null players.
  for (int trial = 0; trial < 200; ++trial) {
    Game m = random_monotone_game(lat3, rng);
    CHECK(random_order_value(m, uniform).values().minCoeff() >= -1e-12);
    auto i = static_cast<Element>(rng() % 8);
    Game forced = force_null_player(random_game(lat3, rng), i);
    CHECK(std::abs(random_order_value(forced, uniform).at(i)) <= 1e-12);
  }

  // The rank-2 unanimity game splits evenly between the two atoms.
  Game uab = unanimity_game(
      lattice2(), down_closure(BooleanAlgebra(2), {Element{1}, Element{2}}));
  Allocation phi =
      random_order_value(uab, ExtensionDistribution::uniform(BooleanAlgebra(2)));
  CHECK(phi.at(0) == doctest::Approx(0.0));
  CHECK(phi.at(1) == doctest::Approx(0.5));
  CHECK(phi.at(2) == doctest::Approx(0.5));
  CHECK(phi.at(3) == doctest::Approx(0.0));

  // Weights must normalize.
  auto fs = enumerate_linear_extensions(BooleanAlgebra(2));
  CHECK_THROWS_AS(
      ExtensionDistribution(fs, Vector::Constant(fs.size(), 0.7)),
      std::invalid_argument);
}

TEST_CASE("selector values") {
  auto lat3 = lattice3();
  std::mt19937_64 rng(903);

  // The locally inconsistent example pays a exactly the two dividends of
  // the coalitions where a is chosen.
  Selector alpha = selector_by_key(lat3, {{"<a,b,c>", 1},
                                          {"<a,b>", 2},
                                          {"<a,c>", 4},
                                          {"<a,bc>", 6}});
  for (int trial = 0; trial < 50; ++trial) {
    Game v = random_game(lat3, rng);
    DividendTable d = harsanyi_transform(v);
    Allocation delta = selector_value(d, alpha);
    CHECK(delta.at(1) ==
          doctest::Approx(d.at(*lat3->find_key("<a,b,c>")) +
                          d.at(*lat3->find_key("<a>")))
              .epsilon(1e-12));
    CHECK(delta.total() ==
          doctest::Approx(v.at(lat3->whole_index())).epsilon(1e-12));
  }

  // Unanimity games pay only the selected player of their coalition.
  for (int t = 1; t < lat3->size(); ++t) {
    Game u = unanimity_game(lat3, lat3->at(t));
    Allocation delta = selector_value(u, alpha);
    for (Element i = 0; i < 8; ++i) {
      CHECK(delta.at(i) == doctest::Approx(i == alpha.at(t) ? 1.0 : 0.0));
    }
  }
}

TEST_CASE("selector consistency") {
  auto lat2 = lattice2();
  auto lat3 = lattice3();

  // Selectors from extensions are consistent.
  for (const LinearExtension& f : extensions3()) {
    CHECK(is_consistent(selector_from_extension(lat3, f)));
  }

  // The rank-2 selector space has exactly the two consistent selectors.
  auto rank2 = enumerate_selectors(lat2);
  CHECK(rank2.size() == 2);
  for (const Selector& s : rank2) CHECK(is_consistent(s));

  // Example selector: inconsistent exactly on a.
  Selector beta = selector_by_key(lat3, {{"<a,b,c>", 1},
                                         {"<a,c>", 1},
                                         {"<a,b>", 2},
                                         {"<b,c>", 4}});
  CHECK_FALSE(is_consistent(beta));
  CHECK_FALSE(is_consistent_on(beta, 1));
  auto witness = inconsistency_witness_on(beta, 1);
  REQUIRE(witness.has_value());
  CHECK(lat3->key_of(witness->outer) == "<a,b,c>");

  CHECK_THROWS_AS(enumerate_selectors(DownSetLattice::make(BooleanAlgebra(4))),
                  capacity_error);
}

TEST_CASE("extensions and consistent selectors are in bijection") {
  auto lat2 = lattice2();
  auto lat3 = lattice3();

  // The running example: at <ab,ac,bc> the highest-ranked co-atom wins.
  Selector from_figure = selector_from_extension(lat3, figure_extension());
  CHECK(from_figure.at(*lat3->find_key("<ab,ac,bc>")) == 6);

  // Principal coalitions leave no choice.
  for (const LinearExtension& f : extensions3()) {
    Selector alpha = selector_from_extension(lat3, f);
    for (Element e = 1; e < 8; ++e) {
      CHECK(alpha.at(*lat3->find_key(
                down_closure(BooleanAlgebra(3), {e}).key())) == e);
    }
  }

  // Rank 1: the unique consistent selector maps to the unique extension.
  auto lat1 = DownSetLattice::make(BooleanAlgebra(1));
  auto singles = enumerate_selectors(lat1);
  REQUIRE(singles.size() == 1);
  LinearExtension only = extension_from_selector(singles[0]);
  CHECK(only.rank_of(0) == 1);
  CHECK(only.rank_of(1) == 2);

  // F and A invert each other; consistent selectors number 2 and 48.
  int consistent2 = 0;
  for (const Selector& alpha : enumerate_selectors(lat2)) {
    if (!is_consistent(alpha)) continue;
    ++consistent2;
    CHECK(selector_from_extension(lat2, extension_from_selector(alpha)) ==
          alpha);
  }
  CHECK(consistent2 == 2);

  int consistent3 = 0;
  for (const Selector& alpha : enumerate_selectors(lat3)) {
    if (!is_consistent(alpha)) continue;
    ++consistent3;
    CHECK(selector_from_extension(lat3, extension_from_selector(alpha)) ==
          alpha);
  }
  CHECK(consistent3 == 48);

  std::set<std::vector<Element>> images;
  std::mt19937_64 rng(904);
  for (const LinearExtension& f : extensions3()) {
    Selector alpha = selector_from_extension(lat3, f);
    CHECK(extension_from_selector(alpha) == f);
    std::vector<Element> key;
    for (int i = 1; i < lat3->size(); ++i) key.push_back(alpha.at(i));
    images.insert(key);

    // Consistent selector values coincide with marginal vectors.
    Game v = random_game(lat3, rng);
    CHECK((selector_value(v, alpha).values() - marginal_vector(v, f))
              .cwiseAbs()
              .maxCoeff() <= 1e-12);
  }
  CHECK(images.size() == 48);  // the map f -> alpha_f is injective

  // Inconsistent selectors are rejected with a witness.
  Selector beta = selector_by_key(lat3, {{"<a,b,c>", 1},
                                         {"<a,c>", 1},
                                         {"<a,b>", 2},
                                         {"<b,c>", 4}});
  CHECK_THROWS_WITH_AS(extension_from_selector(beta),
                       doctest::Contains("inconsistent"),
                       std::invalid_argument);
}

TEST_CASE("Lemma on locally consistent selectors") {
  auto lat3 = lattice3();
  std::mt19937_64 rng(905);
  for (const LinearExtension& f : extensions3()) {
    Selector alpha = selector_from_extension(lat3, f);
    Game v = random_game(lat3, rng);
    Allocation delta = selector_value(v, alpha);
    for (Element t = 0; t < 8; ++t) {
      MemberMask joined = 0;
      for (int i = 1; i < lat3->size(); ++i) {
        if (alpha.at(i) == t) joined |= lat3->at(i).members();
      }
      if (joined == 0) {
        CHECK(delta.at(t) == 0.0);
        continue;
      }
      DownSet cover(BooleanAlgebra(3), joined);
      double expected =
          v.at(lat3->index_of(cover)) -
          v.at(lat3->index_of_mask(cover.members() & ~(MemberMask{1} << t)));
      CHECK(delta.at(t) == doctest::Approx(expected).epsilon(1e-10));
    }
  }
}

TEST_CASE("sharing systems and sharing values") {
  auto lat3 = lattice3();
  std::mt19937_64 rng(906);

  SharingSystem priority = priority_sharing_system(lat3);
  SharingSystem proportional = proportional_sharing_system(lat3);
  SharingSystem hierarchical = hierarchical_sharing_system(lat3);

  // Priority splits evenly; principal coalitions give everything away.
  CHECK(priority.q(*lat3->find_key("<a,b,c>"), 1) == doctest::Approx(1.0 / 3));
  CHECK(priority.q(*lat3->find_key("<ab>"), 3) == doctest::Approx(1.0));

  // Proportional splits by rank: <ab,c> weighs the join twice the atom.
  CHECK(proportional.q(*lat3->find_key("<ab,c>"), 4) == doctest::Approx(1.0 / 3));
  CHECK(proportional.q(*lat3->find_key("<ab,c>"), 3) == doctest::Approx(2.0 / 3));
  CHECK(proportional.q(*lat3->find_key("<0>"), 0) == doctest::Approx(1.0));

  // pi(u_T) reads off the sharing row of T.
  for (const SharingSystem* q : {&priority, &proportional, &hierarchical}) {
    for (int t = 1; t < lat3->size(); ++t) {
      Allocation phi = sharing_value(unanimity_game(lat3, lat3->at(t)), *q);
      for (Element i = 0; i < 8; ++i) {
        CHECK(phi.at(i) == doctest::Approx(q->q(t, i)).epsilon(1e-12));
      }
    }

    // Efficiency and the null player axiom on random games.
    for (int trial = 0; trial < 100; ++trial) {
      Game v = random_game(lat3, rng);
      CHECK(std::abs(efficiency_residual(v, sharing_value(v, *q))) <= 1e-9);
      auto i = static_cast<Element>(rng() % 8);
      Game forced = force_null_player(v, i);
      CHECK(std::abs(sharing_value(forced, *q).at(i)) <= 1e-12);
    }
  }

  // Proportional value is symmetric under every atom permutation.
  for (auto lattice : {lattice2(), lattice3()}) {
    SharingSystem q = proportional_sharing_system(lattice);
    for (int trial = 0; trial < 40; ++trial) {
      Game v = random_game(lattice, rng);
      Allocation phi = sharing_value(v, q);
      for (const Automorphism& sigma :
           enumerate_automorphisms(lattice->algebra())) {
        Allocation moved = sharing_value(automorphism_image(v, sigma), q);
        for (int e = 0; e < lattice->algebra().size(); ++e) {
          auto i = static_cast<Element>(e);
          CHECK(moved.at(sigma(i)) == doctest::Approx(phi.at(i)).epsilon(1e-10));
        }
      }
    }
  }

  // Rows must be supported on maximal players and normalized.
  std::vector<SharingSystem::Row> rows(lattice2()->size());
  for (int i = 1; i < lattice2()->size(); ++i) {
    for (Element e : lattice2()->at(i).maximal()) {
      rows[i].emplace_back(e, 1.0 / lattice2()->at(i).maximal().size());
    }
  }
  rows[*lattice2()->find_key("<a>")] = {{1, 0.5}};
  CHECK_THROWS_AS(SharingSystem(lattice2(), rows), std::invalid_argument);
}

TEST_CASE("selector distributions vs sharing systems") {
  auto lat2 = lattice2();
  auto lat3 = lattice3();
  std::mt19937_64 rng(907);

  // Point mass on a consistent selector: the sharing value is its
  // marginal vector.
  Selector alpha = selector_from_extension(lat3, extensions3()[31]);
  SelectorDistribution point(lat3, {{alpha, 1.0}});
  SharingSystem q_point = sharing_from_selector_distribution(point);
  for (int trial = 0; trial < 25; ++trial) {
    Game v = random_game(lat3, rng);
    Vector expected = marginal_vector(v, extensions3()[31]);
    CHECK((sharing_value(v, q_point).values() - expected).cwiseAbs().maxCoeff() <=
          1e-12);
  }

  // The uniform distribution over all 4608 selectors induces the priority
  // sharing system.
  auto all = enumerate_selectors(lat3);
  CHECK(all.size() == 4608);
  std::vector<SelectorDistribution::Entry> entries;
  for (const Selector& s : all) entries.emplace_back(s, 1.0 / all.size());
  SharingSystem q_uniform =
      sharing_from_selector_distribution(SelectorDistribution(lat3, entries));
  SharingSystem priority = priority_sharing_system(lat3);
  for (int i = 1; i < lat3->size(); ++i) {
    for (Element e : lat3->at(i).maximal()) {
      CHECK(q_uniform.q(i, e) == doctest::Approx(priority.q(i, e)).epsilon(1e-12));
    }
  }

  // p_q of a deterministic sharing system is a point mass.
  {
    std::vector<Element> choice(lat3->size(), 0);
    for (int i = 1; i < lat3->size(); ++i) choice[i] = lat3->at(i).maximal()[0];
    Selector fixed(lat3, choice);
    std::vector<SharingSystem::Row> rows(lat3->size());
    for (int i = 1; i < lat3->size(); ++i) rows[i] = {{fixed.at(i), 1.0}};
    SelectorDistribution p =
        selector_distribution_from_sharing(SharingSystem(lat3, rows));
    REQUIRE(p.entries().size() == 1);
    CHECK(p.entries()[0].first == fixed);
    CHECK(p.entries()[0].second == doctest::Approx(1.0));
  }

  // Priority at rank 2 corresponds to the uniform selector distribution.
  {
    SelectorDistribution p =
        selector_distribution_from_sharing(priority_sharing_system(lat2));
    REQUIRE(p.entries().size() == 2);
    CHECK(p.entries()[0].second == doctest::Approx(0.5));
    CHECK(p.entries()[1].second == doctest::Approx(0.5));
  }

  // Round trip q -> p_q -> q on random rank-2 sharing systems, plus the
  // average-selector identity in both directions at rank 3.
  std::uniform_real_distribution<double> unit(0.05, 1.0);
  for (int trial = 0; trial < 25; ++trial) {
    std::vector<SharingSystem::Row> rows(lat2->size());
    for (int i = 1; i < lat2->size(); ++i) {
      double total = 0.0;
      std::vector<double> weights;
      for (std::size_t k = 0; k < lat2->at(i).maximal().size(); ++k) {
        weights.push_back(unit(rng));
        total += weights.back();
      }
      for (std::size_t k = 0; k < weights.size(); ++k) {
        rows[i].emplace_back(lat2->at(i).maximal()[k], weights[k] / total);
      }
    }
    SharingSystem q(lat2, rows);
    SharingSystem back =
        sharing_from_selector_distribution(selector_distribution_from_sharing(q));
    for (int i = 1; i < lat2->size(); ++i) {
      for (Element e : lat2->at(i).maximal()) {
        CHECK(back.q(i, e) == doctest::Approx(q.q(i, e)).epsilon(1e-10));
      }
    }
  }

  for (const SharingSystem& q :
       {priority_sharing_system(lat3), proportional_sharing_system(lat3),
        hierarchical_sharing_system(lat3)}) {
    SelectorDistribution p = selector_distribution_from_sharing(q);
    for (int trial = 0; trial < 5; ++trial) {
      Game v = random_game(lat3, rng);
      DividendTable d = harsanyi_transform(v);
      Vector via_avg = average_selector_value(d, p).values();
      Vector via_q = sharing_value(d, q).values();
      CHECK((via_avg - via_q).cwiseAbs().maxCoeff() <= 1e-10);
    }
  }
}

TEST_CASE("consistent-supported distributions are random-order values") {
  auto lat3 = lattice3();
  std::mt19937_64 rng(908);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  for (int trial = 0; trial < 10; ++trial) {
    // Random sparse distribution over consistent selectors.
    std::vector<double> weights(48, 0.0);
    double total = 0.0;
    for (int k = 0; k < 48; ++k) {
      if (unit(rng) < 0.25) {
        weights[k] = unit(rng);
        total += weights[k];
      }
    }
    if (total == 0.0) {
      weights[0] = total = 1.0;
    }

    std::vector<SelectorDistribution::Entry> entries;
    std::vector<LinearExtension> support;
    std::vector<double> r;
    for (int k = 0; k < 48; ++k) {
      if (weights[k] == 0.0) continue;
      entries.emplace_back(selector_from_extension(lat3, extensions3()[k]),
                           weights[k] / total);
      support.push_back(extensions3()[k]);
      r.push_back(weights[k] / total);
    }
    SharingSystem q =
        sharing_from_selector_distribution(SelectorDistribution(lat3, entries));
    ExtensionDistribution dist(
        support, Eigen::Map<const Vector>(r.data(), static_cast<Eigen::Index>(r.size())));

    for (int g = 0; g < 10; ++g) {
      Game v = random_game(lat3, rng);
      CHECK((sharing_value(v, q).values() - random_order_value(v, dist).values())
                .cwiseAbs()
                .maxCoeff() <= 1e-10);
    }
  }
}

TEST_CASE("negative sharing value witnesses") {
  auto lat3 = lattice3();
  std::mt19937_64 rng(909);

  // A consistent selector offers no witness site.
  Selector consistent = selector_from_extension(lat3, extensions3()[0]);
  CHECK_FALSE(prop4_locate(consistent).has_value());
  CHECK_THROWS_AS(
      prop4_witness(consistent, 7, DownSet::whole(BooleanAlgebra(3))),
      std::invalid_argument);

  // The example selector: the only witness below <a,b,c> is <a,b>.
  Selector beta = selector_by_key(lat3, {{"<a,b,c>", 1},
                                         {"<a,c>", 1},
                                         {"<a,b>", 2},
                                         {"<b,c>", 4}});
  auto site = prop4_locate(beta);
  REQUIRE(site.has_value());
  CHECK(site->t == 1);
  CHECK(site->T.key() == "<a,b,c>");
  Game witness = prop4_witness(beta, site->t, site->T);
  CHECK(is_monotone(witness));
  CHECK(selector_value(witness, beta).at(1) ==
        doctest::Approx(-witness.at(*lat3->find_key("<a,b>"))).epsilon(1e-12));

  // Mixing 60% of the inconsistent selector with any consistent one
  // prices t negatively.
  SelectorDistribution mix(lat3, {{beta, 0.6}, {consistent, 0.4}});
  Allocation priced =
      sharing_value(witness, sharing_from_selector_distribution(mix));
  CHECK(priced.at(site->t) < 0.0);

  // Randomly sampled inconsistent selectors admit the same construction.
  auto all = enumerate_selectors(lat3);
  int built = 0;
  for (int trial = 0; trial < 300; ++trial) {
    const Selector& alpha = all[rng() % all.size()];
    if (is_consistent(alpha)) continue;
    auto where = prop4_locate(alpha);
    if (!where) continue;
    Game v = prop4_witness(alpha, where->t, where->T);
    CHECK(is_monotone(v));
    SelectorDistribution two(lat3, {{alpha, 0.6}, {consistent, 0.4}});
    CHECK(sharing_value(v, sharing_from_selector_distribution(two))
              .at(where->t) < 0.0);
    ++built;
  }
  CHECK(built > 100);
}

TEST_CASE("hierarchical strength") {
  auto lat2 = lattice2();
  auto lat3 = lattice3();
  BooleanAlgebra alg3(3);

  // The bottom-only coalition concentrates all strength on the bottom.
  CHECK(hierarchical_strength(*lat3, down_closure(alg3, {Element{0}}), 0) ==
        doctest::Approx(1.0));

  // Two atoms at rank 2 split evenly; three atoms at rank 3 get thirds.
  DownSet ab2 = down_closure(BooleanAlgebra(2), {Element{1}, Element{2}});
  CHECK(hierarchical_strength(*lat2, ab2, 1) == doctest::Approx(0.5));
  CHECK(hierarchical_strength(*lat2, ab2, 2) == doctest::Approx(0.5));
  DownSet abc = down_closure(alg3, {Element{1}, Element{2}, Element{4}});
  for (Element i : {Element{1}, Element{2}, Element{4}}) {
    CHECK(hierarchical_strength(*lat3, abc, i) == doctest::Approx(1.0 / 3));
  }

  // Exact strengths match counting over the materialized extensions, are
  // positive exactly on maximal players, and sum to one.
  for (int s = 1; s < lat3->size(); ++s) {
    const DownSet& coalition = lat3->at(s);
    double total = 0.0;
    for (Element i = 0; i < 8; ++i) {
      if (!coalition.contains(i)) {
        CHECK_THROWS_AS(hierarchical_strength(*lat3, coalition, i),
                        std::invalid_argument);
        continue;
      }
      double h = hierarchical_strength(*lat3, coalition, i);
      total += h;
      int wins = 0;
      for (const LinearExtension& f : extensions3()) {
        bool top = true;
        for (Element j = 0; j < 8; ++j) {
          if (j != i && coalition.contains(j) &&
              f.rank_of(j) > f.rank_of(i)) {
            top = false;
            break;
          }
        }
        wins += top;
      }
      CHECK(h == doctest::Approx(wins / 48.0).epsilon(1e-12));
      CHECK((h > 0.0) == coalition.is_maximal(i));
    }
    CHECK(total == doctest::Approx(1.0).epsilon(1e-12));
  }

  // The sampling estimator agrees to Monte-Carlo accuracy.
  ExtensionSampler sampler(lat3);
  DownSet cd = down_closure(alg3, {Element{4}, Element{3}});
  double exact = hierarchical_strength(*lat3, cd, 3);
  double sampled = hierarchical_strength_sampled(sampler, cd, 3, 20000, 42);
  CHECK(std::abs(sampled - exact) < 0.02);
}

TEST_CASE("hierarchical value") {
  auto lat2 = lattice2();
  auto lat3 = lattice3();
  std::mt19937_64 rng(910);

  // The worked rank-2 example, averaged by hand over both extensions.
  Game worked = rank2_worked_example();
  for (const Allocation& psi :
       {hierarchical_value_dividend(worked),
        hierarchical_value_random_order(worked),
        hierarchical_value_probabilistic(worked)}) {
    CHECK(psi.at(0) == doctest::Approx(0.0).epsilon(1e-12));
    CHECK(psi.at(1) == doctest::Approx(1.5).epsilon(1e-12));
    CHECK(psi.at(2) == doctest::Approx(0.5).epsilon(1e-12));
    CHECK(psi.at(3) == doctest::Approx(1.0).epsilon(1e-12));
  }

  // Unanimity games pay hierarchical strength on the maximal players.
  for (int t = 1; t < lat3->size(); ++t) {
    Game u = unanimity_game(lat3, lat3->at(t));
    Allocation psi = hierarchical_value_dividend(u);
    for (Element i = 0; i < 8; ++i) {
      double expected = lat3->at(t).is_maximal(i)
                            ? hierarchical_strength(*lat3, lat3->at(t), i)
                            : 0.0;
      CHECK(psi.at(i) == doctest::Approx(expected).epsilon(1e-12));
    }
  }

  // The probabilistic-form weight of (S, i) is the fraction of extensions
  // whose predecessor set of i is exactly S.
  for (int s = 1; s < lat3->size(); ++s) {
    const DownSet& coalition = lat3->at(s);
    for (Element i : coalition.maximal()) {
      int hits = 0;
      for (const LinearExtension& f : extensions3()) {
        if (predecessor_set(f, i).members() == coalition.members()) ++hits;
      }
      std::vector<Element> below;
      std::vector<Element> outside;
      for (Element e = 0; e < 8; ++e) {
        if (coalition.contains(e) && e != i) below.push_back(e);
        if (!coalition.contains(e)) outside.push_back(e);
      }
      double weight =
          static_cast<double>(
              count_extensions_of_subposet(BooleanAlgebra(3), below)) *
          static_cast<double>(
              count_extensions_of_subposet(BooleanAlgebra(3), outside)) / 48.0;
      CHECK(weight == doctest::Approx(hits / 48.0).epsilon(1e-12));
    }
  }

  // All three exact forms agree on random games at ranks 2 and 3.
  for (auto lattice : {lat2, lat3}) {
    for (int trial = 0; trial < 40; ++trial) {
      Game v = random_game(lattice, rng);
      Vector a = hierarchical_value_dividend(v).values();
      Vector b = hierarchical_value_random_order(v).values();
      Vector c = hierarchical_value_probabilistic(v).values();
      CHECK((a - b).cwiseAbs().maxCoeff() <= 1e-9);
      CHECK((a - c).cwiseAbs().maxCoeff() <= 1e-9);
    }
  }

  // Sampling reproduces the exact value within a few standard errors and
  // stays bit-stable under a fixed seed.
  Game v = random_game(lat3, rng);
  Vector exact = hierarchical_value_dividend(v).values();
  SampledAllocation run1 = hierarchical_value_sampled(v, 20000, 77);
  SampledAllocation run2 = hierarchical_value_sampled(v, 20000, 77);
  CHECK((run1.value.values() - run2.value.values()).cwiseAbs().maxCoeff() ==
        0.0);
  for (Element i = 0; i < 8; ++i) {
    double slack = 4.0 * run1.standard_error(i) + 1e-12;
    CHECK(std::abs(run1.value.at(i) - exact(i)) <= slack);
  }

  // Capacity error directs rank-4 games to the sampled method.
  auto lat4 = DownSetLattice::make(BooleanAlgebra(4));
  Game big(lat4, Vector::Zero(lat4->size()));
  CHECK_THROWS_WITH_AS(hierarchical_value_dividend(big),
                       doctest::Contains("sampled"), capacity_error);
  CHECK_NOTHROW(hierarchical_value_sampled(big, 10, 1));
}

TEST_CASE("axiom reports") {
  auto lat3 = lattice3();

  AxiomReport hierarchical = check_axioms(
      lat3, [](const Game& v) { return hierarchical_value_dividend(v); },
      "hierarchical", 40, 2026);
  CHECK(hierarchical.all_passed());

  SharingSystem priority = priority_sharing_system(lat3);
  AxiomReport priority_report = check_axioms(
      lat3, [&](const Game& v) { return sharing_value(v, priority); },
      "priority", 400, 2026);
  CHECK_FALSE(priority_report.all_passed());
  for (const AxiomResult& result : priority_report.results) {
    if (result.axiom == Axiom::kPositivity) {
      CHECK_FALSE(result.passed);
      CHECK_FALSE(result.witness.empty());
    }
    if (result.axiom == Axiom::kEfficiency || result.axiom == Axiom::kNullPlayer ||
        result.axiom == Axiom::kLinearity || result.axiom == Axiom::kCarrier ||
        result.axiom == Axiom::kSymmetry) {
      CHECK(result.passed);
    }
  }

  SharingSystem proportional = proportional_sharing_system(lat3);
  AxiomReport proportional_report = check_axioms(
      lat3, [&](const Game& v) { return sharing_value(v, proportional); },
      "proportional", 400, 2026);
  for (const AxiomResult& result : proportional_report.results) {
    if (result.axiom == Axiom::kSymmetry) CHECK(result.passed);
    if (result.axiom == Axiom::kPositivity) CHECK(result.passed);
    if (result.axiom == Axiom::kHierarchicalStrength) CHECK_FALSE(result.passed);
  }
}
