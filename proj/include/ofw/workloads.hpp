#pragma once

// Synthetic problems with known or reference optima: online LASSO (fixed or
// random design), exponential-family matrix completion and low-rank binary
// classification. Each workload bundles its constraint set, a seeded sample
// stream, a fresh gradient oracle and closures for the expected loss.

#include <cstdint>
#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "ofw/core.hpp"
#include "ofw/gradients.hpp"
#include "ofw/lmo.hpp"
#include "ofw/metrics.hpp"

namespace ofw {

/// splitmix64 step; used to give every random component its own stream.
std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t salt);

Eigen::MatrixXd gaussian_matrix(Index rows, Index cols, std::mt19937_64& rng);

/// Replays a fixed list of samples in order.
class VectorStream final : public SampleStream {
 public:
  explicit VectorStream(std::shared_ptr<const std::vector<Sample>> samples) : samples_(std::move(samples)) {}
  std::optional<Sample> next() override;

 private:
  std::shared_ptr<const std::vector<Sample>> samples_;
  std::size_t pos_ = 0;
};

/// f(theta) = 1/2 (x - c)^T Q (x - c) + offset over the flattened iterate x.
/// Lets reference_solve update gradients in O(dim) per iteration.
struct QuadraticForm {
  std::shared_ptr<const Eigen::MatrixXd> q;
  Eigen::VectorXd center;
  double offset = 0.0;
};

struct Workload {
  std::string name;
  ConstraintSet constraint;
  std::function<GradientOracle()> oracle_factory;
  std::function<std::unique_ptr<SampleStream>()> stream_factory;
  std::function<double(const Params&)> f;
  std::function<Gradient(const Params&)> grad_f;  // empty when no exact gradient exists
  std::optional<double> f_star;
  bool f_star_is_reference = false;
  std::optional<double> f_star_certificate;  // FW gap bound on the reference value
  std::optional<Params> theta_star;
  std::optional<QuadraticForm> quadratic;
  std::map<std::string, double> info;
  bool long_running = false;

  Shape shape() const { return shape_of(constraint); }
  EvalSpec eval_spec(Cadence cadence = Cadence::Geometric, int per_octave = 1) const;
};

// ---------------------------------------------------------------------------

struct LassoParams {
  Index n = 100;
  Index m = 40;
  double sparsity_frac = 0.1;
  double sigma_w = 10.0;
  double r_factor = 1.1;
  std::uint64_t seed = 1;
};

/// A fixed across rounds; Y_t = A theta_bar + w_t. Interior optimum when r_factor > 1.
Workload gen_fixed_design_lasso(const LassoParams& p);

/// A_t drawn fresh every round with N(0,1) entries, so E[A^T A] = m I and
/// f(theta) = m/2 ||theta - theta_bar||^2 + m sigma_w^2 / 2.
Workload gen_random_design_lasso(const LassoParams& p);

struct McParams {
  Index m1 = 20;
  Index m2 = 50;
  Index rank = 3;
  double noise_var = 3.0;
  double r_factor = 1.1;
  Link link = Link::Gaussian;
  std::uint64_t seed = 1;
};

/// theta_bar = U V^T with Gaussian factors; cells sampled uniformly.
/// Gaussian: y = theta_bar_kl + N(0, noise_var). Logistic: y ~ Bernoulli(g'(theta_bar_kl)).
/// Poisson: y ~ Poisson(g'(theta_bar_kl)).
Workload gen_mc(const McParams& p);

enum class ClassConstraint { L1, Trace };

struct ClassificationParams {
  Index m1 = 30;
  Index m2 = 30;
  Index rank = 10;
  std::int64_t n_train = 10000;
  double flip_frac = 0.0;
  LossKind loss = LossKind::Sigmoid;
  ClassConstraint constraint = ClassConstraint::Trace;
  double radius = 1.0;
  std::uint64_t seed = 1;
};

/// Gaussian feature matrices x (flattened for the l1 ball), clean labels
/// sign(<theta_bar, x>), a Bernoulli(flip_frac) subset negated. The stream ends
/// after n_train samples; f is the average loss over the training set.
Workload gen_classification(const ClassificationParams& p);

/// The materialized training set of a classification workload.
std::shared_ptr<const std::vector<Sample>> classification_samples(const ClassificationParams& p);

/// Replaces the constraint radius. theta_star and f_star are dropped when
/// theta_star falls outside the new ball.
void set_radius(Workload& w, double radius);

// ---------------------------------------------------------------------------

struct ReferenceResult {
  double f_star = 0.0;       // min f over the iterates
  double certificate = 0.0;  // min FW gap seen; bounds f_star - min_C f
  Params theta;              // iterate attaining f_star
  std::int64_t iterations = 0;
};

/// Exact-gradient Frank-Wolfe with gamma_k = 2 / (k + 1).
ReferenceResult reference_solve(const Workload& w, std::int64_t budget = 1000000);

/// Fills f_star (flagged as a reference) from reference_solve.
void attach_reference(Workload& w, std::int64_t budget = 1000000);

}  // namespace ofw
