#pragma once

#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "latval/game.hpp"
#include "latval/lattice.hpp"
#include "latval/types.hpp"
#include "latval/value.hpp"

namespace latval {

// Joint distribution of (X_1,...,X_n, Y) over finite state spaces. The
// mass array is laid out row-major with x_1 slowest and y fastest.
class JointDistribution {
 public:
  JointDistribution(std::vector<int> input_sizes, int target_size, Array mass);

  // Accepts mass within `tol` of total 1 and rescales exactly to 1.
  static JointDistribution normalized(std::vector<int> input_sizes,
                                      int target_size, Array mass,
                                      double tol = 1e-9);

  int num_inputs() const noexcept { return static_cast<int>(input_sizes_.size()); }
  const std::vector<int>& input_sizes() const noexcept { return input_sizes_; }
  int target_size() const noexcept { return target_size_; }
  const Array& mass() const noexcept { return mass_; }
  Eigen::Index cells() const noexcept { return mass_.size(); }

  int cell_index(std::span<const int> inputs, int target) const;
  double at(std::span<const int> inputs, int target) const {
    return mass_(cell_index(inputs, target));
  }

  // Predictors are subsets of input variables: atoms of this algebra.
  BooleanAlgebra predictor_algebra() const {
    return BooleanAlgebra(num_inputs());
  }

 private:
  std::vector<int> input_sizes_;
  int target_size_;
  Array mass_;
};

// Shannon entropy in bits, with 0 log 0 = 0.
double entropy(const Array& mass);
double entropy(const JointDistribution& q);

// Kullback-Leibler divergence in bits; +infinity when the support of q1
// escapes the support of q2.
double kl_divergence(const JointDistribution& q1, const JointDistribution& q2);

// I(X;Y) by the direct sum over cells; equals the divergence from the
// product of marginals.
double mutual_information(const JointDistribution& p);

// Marginal over the variables of `predictor` (ascending index), optionally
// retaining the target axis.
struct Marginal {
  std::vector<int> dims;
  Array mass;
};
Marginal marginalize(const JointDistribution& p, Element predictor,
                     bool include_target);

// The independence baseline p_X * p_Y on the full cell space.
JointDistribution product_baseline(const JointDistribution& p);

// Drops input and target states carrying zero marginal mass. `kept` maps
// new state indices to original ones per axis (inputs first, then target).
struct PruneInfo {
  std::vector<std::vector<int>> kept;
  bool changed = false;
};
JointDistribution prune_zero_states(const JointDistribution& p,
                                    PruneInfo* info = nullptr);

struct IpfOptions {
  double tolerance = 1e-10;  // max L1 marginal residual
  int max_sweeps = 100000;
  bool use_closed_forms = true;
};

struct IpfDiagnostics {
  int sweeps = 0;
  double residual = 0.0;
  bool converged = true;
  bool closed_form = false;
};

// Maximum-entropy distribution matching p on the X-marginal and on every
// (X_A, Y)-marginal for A in `predictors`; iterative proportional fitting
// from the uniform start. Throws numerical_error on non-convergence.
JointDistribution max_entropy_fit(const JointDistribution& p,
                                  std::span<const Element> predictors,
                                  const IpfOptions& options = {},
                                  IpfDiagnostics* diagnostics = nullptr);

// The split distribution of a nonempty coalition of predictors: the
// constraint family reduces to the antichain of maximal predictors, and
// three coalitions have closed forms (the full powerset gives p itself,
// the singleton antichain gives the product of one-dimensional marginals,
// and the bottom-only coalition gives p_X * p_Y).
JointDistribution split_distribution(const JointDistribution& p,
                                     const DownSet& coalition,
                                     const IpfOptions& options = {},
                                     IpfDiagnostics* diagnostics = nullptr);

// The induced coalitional game: worth of a coalition is the divergence of
// its split distribution from the independence baseline, in bits.
struct InformationGame {
  Game game;
  std::vector<IpfDiagnostics> diagnostics;  // indexed like the lattice
  double monotonicity_slack = 0.0;          // largest observed violation
};

InformationGame information_game(const JointDistribution& p,
                                 const IpfOptions& options = {},
                                 int max_rank = 4);

enum class AttributionMethod {
  kHierarchicalExact,
  kHierarchicalSampled,
  kPriority,
  kProportional,
};

std::string attribution_method_name(AttributionMethod method);

struct AttributionOptions {
  AttributionMethod method = AttributionMethod::kHierarchicalExact;
  std::uint64_t samples = 0;  // required for the sampled method
  std::uint64_t seed = 0;
  IpfOptions ipf{};
  int max_exact_rank = 3;
  int max_rank = 4;
};

// Additive decomposition of I(X;Y) over predictors, in bits.
struct Decomposition {
  BooleanAlgebra algebra;
  Vector psi;                        // indexed by predictor element
  std::optional<Vector> psi_stderr;  // sampled method only
  double total_information;
  double residual;      // sum of psi minus I(X;Y)
  bool has_negative;    // some psi below -1e-9: breaks the contract
  std::string method;
  InformationGame game;
};

Decomposition attribute(const JointDistribution& p,
                        const AttributionOptions& options = {});

}  // namespace latval
