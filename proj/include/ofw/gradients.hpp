#pragma once

// Gradient oracles: the aggregated surrogate grad F_t(theta) = t^-1 sum_s grad f_s(theta).
//
// LassoStats and McStats keep sufficient statistics so a gradient costs the
// same at every round; ReplayStats stores the whole sample history and
// re-evaluates every loss at the queried point.

#include <cstdint>
#include <memory>
#include <optional>
#include <unordered_map>
#include <variant>
#include <vector>

#include "ofw/core.hpp"

namespace ofw {

using SparseVector = Eigen::SparseVector<double>;

/// Y = A theta + w. `gram` optionally caches A^T A for designs shared across rounds.
struct LassoSample {
  std::shared_ptr<const Eigen::MatrixXd> a;
  Eigen::VectorXd y;
  std::shared_ptr<const Eigen::MatrixXd> gram;
};

/// One matrix-completion observation (k, l, y), 0-based.
struct McSample {
  Index k = 0;
  Index l = 0;
  double y = 0.0;
};

/// Feature vector with a +-1 label.
struct LabeledVector {
  std::variant<Eigen::VectorXd, SparseVector> x;
  int y = 1;

  Index dim() const;
};

using Sample = std::variant<LassoSample, McSample, LabeledVector>;

/// Single-consumer sample source. nullopt signals exhaustion.
class SampleStream {
 public:
  virtual ~SampleStream() = default;
  virtual std::optional<Sample> next() = 0;
};

// ---------------------------------------------------------------------------

enum class Link { Gaussian, Logistic, Poisson };

/// Exponent arguments of the Poisson mean are clamped to +-kPoissonClamp.
inline constexpr double kPoissonClamp = 50.0;

/// Log-partition g(x).
double log_partition(Link link, double x);
/// Mean function g'(x). Sets *saturated when the Poisson clamp engaged.
double link_mean(Link link, double x, bool* saturated = nullptr);

const char* to_string(Link link);

// ---------------------------------------------------------------------------

/// Running means of A^T A and A^T Y.
class LassoStats {
 public:
  explicit LassoStats(Index n);

  void update(const LassoSample& s);
  /// s_aa * theta - s_ay
  Eigen::VectorXd gradient(const Eigen::VectorXd& theta) const;

  Index dim() const { return s_ay_.size(); }
  std::int64_t count() const { return t_; }
  const Eigen::MatrixXd& s_aa() const { return s_aa_; }
  const Eigen::VectorXd& s_ay() const { return s_ay_; }

 private:
  Eigen::MatrixXd s_aa_;
  Eigen::VectorXd s_ay_;
  std::int64_t t_ = 0;
  Eigen::MatrixXd scratch_;
};

/// Per-cell observation counts and response sums. s1 = sums / t and
/// s2 = counts / t are the running means of Y e_k e_l^T and e_k e_l^T.
class McStats {
 public:
  McStats(Index m1, Index m2, Link link);

  void update(const McSample& s);
  /// Sparse matrix with g'(theta_kl) s2_kl - s1_kl on support(s2).
  SparseMatrix gradient(const Eigen::MatrixXd& theta, bool* saturated = nullptr) const;

  SparseMatrix s1() const;
  SparseMatrix s2() const;
  Index rows() const { return m1_; }
  Index cols() const { return m2_; }
  Link link() const { return link_; }
  std::int64_t count() const { return t_; }
  std::size_t support_size() const { return cells_.size(); }

 private:
  struct Cell {
    Index k;
    Index l;
    double sum_y;
    std::int64_t hits;
  };

  Index m1_;
  Index m2_;
  Link link_;
  std::int64_t t_ = 0;
  std::vector<Cell> cells_;
  std::unordered_map<std::int64_t, std::size_t> where_;
};

enum class LossKind { Sigmoid, Logistic };

inline constexpr double kSigmoidSteepness = 10.0;

const char* to_string(LossKind kind);

/// Sigmoid loss (1 + exp(k y u))^-1 or logistic loss log(1 + exp(-y u)) at u = <theta, x>.
double classification_loss(LossKind kind, int y, double u, double steepness = kSigmoidSteepness);
/// d loss / d u
double classification_loss_derivative(LossKind kind, int y, double u, double steepness = kSigmoidSteepness);

/// Keeps every sample; gradients cost O(t n).
class ReplayStats {
 public:
  ReplayStats(Index n, LossKind kind, double steepness = kSigmoidSteepness);

  void update(const LabeledVector& s);
  Eigen::VectorXd gradient(const Eigen::VectorXd& theta) const;
  /// F_t(theta), the averaged loss.
  double loss(const Eigen::VectorXd& theta) const;

  Index dim() const { return n_; }
  LossKind kind() const { return kind_; }
  double steepness() const { return steepness_; }
  std::int64_t count() const { return static_cast<std::int64_t>(dense_labels_.size() + sparse_.size()); }

 private:
  Index n_;
  LossKind kind_;
  double steepness_;
  // Dense samples are packed row after row for a single fused pass.
  std::vector<double> dense_rows_;
  std::vector<int> dense_labels_;
  std::vector<LabeledVector> sparse_;
};

// ---------------------------------------------------------------------------

struct OracleGradient {
  Gradient gradient;
  bool saturated = false;
};

/// Uniform front over the three aggregators.
class GradientOracle {
 public:
  using Stats = std::variant<LassoStats, McStats, ReplayStats>;

  /// `shape` is the iterate shape; a replay oracle over m1 x m2 matrices sees
  /// flattened (column-major) features.
  GradientOracle(Stats stats, Shape shape);

  static GradientOracle lasso(Index n);
  static GradientOracle matrix_completion(Index m1, Index m2, Link link);
  static GradientOracle replay(Shape shape, LossKind kind, double steepness = kSigmoidSteepness);

  void observe(const Sample& s);
  OracleGradient gradient(const Params& theta) const;

  std::int64_t count() const;
  const Shape& shape() const { return shape_; }
  const Stats& stats() const { return stats_; }

 private:
  Stats stats_;
  Shape shape_;
};

}  // namespace ofw
