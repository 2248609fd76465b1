#pragma once

// Domain types shared by every module: iterates, gradients, atoms, the
// active-set decomposition used by away steps, and step-size schedules.

#include <compare>
#include <cstdint>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <variant>

#include <Eigen/Dense>
#include <Eigen/Sparse>

#include "ofw/errors.hpp"

namespace ofw {

using Index = Eigen::Index;
using SparseMatrix = Eigen::SparseMatrix<double>;

/// Weights at or below this value are purged from an active set.
inline constexpr double kWeightPurge = 1e-12;
/// Slack allowed when comparing a step against the drop boundary gamma_max.
inline constexpr double kDropTolerance = 1e-12;

struct Shape {
  enum class Kind { Vector, Matrix };

  Kind kind = Kind::Vector;
  Index rows = 0;
  Index cols = 1;

  static Shape vector(Index n);
  static Shape matrix(Index m1, Index m2);

  bool is_matrix() const { return kind == Kind::Matrix; }
  Index size() const { return rows * cols; }
  std::string str() const;

  friend bool operator==(const Shape&, const Shape&) = default;
};

/// The iterate. Vectors are stored as n x 1 matrices so that every
/// inner product is a Frobenius product over `values()`.
class Params {
 public:
  Params() = default;
  explicit Params(Shape shape);
  Params(Shape shape, Eigen::MatrixXd values);

  static Params zeros(Shape shape) { return Params(shape); }

  const Shape& shape() const { return shape_; }
  const Eigen::MatrixXd& values() const { return values_; }
  Eigen::MatrixXd& values() { return values_; }

  bool all_finite() const { return values_.allFinite(); }
  double dot(const Params& other) const;

 private:
  Shape shape_;
  Eigen::MatrixXd values_;
};

/// Surrogate gradient, dense or sparse (matrix completion keeps it sparse).
class Gradient {
 public:
  Gradient() = default;
  Gradient(Shape shape, Eigen::MatrixXd dense);
  Gradient(Shape shape, SparseMatrix sparse);

  const Shape& shape() const { return shape_; }
  bool is_sparse() const { return std::holds_alternative<SparseMatrix>(data_); }
  const Eigen::MatrixXd& dense() const;
  const SparseMatrix& sparse() const;
  Eigen::MatrixXd to_dense() const;

  double dot(const Params& theta) const;
  double max_abs() const;
  bool all_finite() const;

 private:
  Shape shape_;
  std::variant<Eigen::MatrixXd, SparseMatrix> data_;
};

// ---------------------------------------------------------------------------
// Atoms

/// sign * radius * e_index
struct SignedBasis {
  Index index = 0;
  int sign = 1;
  double radius = 1.0;
};

/// Columns of `table` are the vertices of an explicit polytope.
struct Vertex {
  Index id = 0;
  std::shared_ptr<const Eigen::MatrixXd> table;
};

/// (negated ? -1 : 1) * radius * u v^T with unit u, v.
struct RankOne {
  Eigen::VectorXd u;
  Eigen::VectorXd v;
  double radius = 1.0;
  bool negated = false;
};

using Atom = std::variant<SignedBasis, Vertex, RankOne>;

/// Identity of an atom inside an active set. SignedBasis atoms are keyed by
/// (index, sign), vertices by id; rank-one atoms get a fresh serial on insertion.
struct AtomKey {
  enum class Kind { SignedBasis = 0, Vertex = 1, RankOne = 2 };

  Kind kind = Kind::SignedBasis;
  std::int64_t id = 0;
  int sign = 0;

  friend auto operator<=>(const AtomKey&, const AtomKey&) = default;
  std::string str() const;
};

/// Canonical key, or nullopt for rank-one atoms (never deduplicated).
std::optional<AtomKey> canonical_key(const Atom& atom);

/// Throws ShapeError unless `atom` is a point of a set living in `shape`.
void check_compatible(const Atom& atom, const Shape& shape);

/// out += scale * point(atom), without materializing the atom.
void add_scaled(Eigen::MatrixXd& out, const Atom& atom, double scale);

Params atom_point(const Atom& atom, const Shape& shape);

/// <point(atom), g>; rank-one atoms contract as u^T G v.
double dot(const Atom& atom, const Gradient& g);

// ---------------------------------------------------------------------------
// Active set

/// Convex-combination decomposition of the O-AW iterate.
class ActiveSet {
 public:
  struct Entry {
    Atom atom;
    double weight = 0.0;
  };
  using Map = std::map<AtomKey, Entry>;

  bool empty() const { return entries_.empty(); }
  std::size_t size() const { return entries_.size(); }
  const Map& entries() const { return entries_; }
  bool contains(const AtomKey& key) const { return entries_.count(key) != 0; }
  double weight(const AtomKey& key) const;
  double weight_sum() const;

  /// Largest away step keeping every weight nonnegative: alpha / (1 - alpha).
  double gamma_max(const AtomKey& away) const;

  /// Scales weights by (1 - gamma) and adds gamma to `atom`. Returns the key
  /// under which the atom is stored.
  AtomKey apply_fw_step(const Atom& atom, double gamma);

  /// Scales weights by (1 + gamma) and removes gamma from `away`. A step of
  /// gamma_max drops the atom.
  void apply_away_step(const AtomKey& away, double gamma);

  /// Sum of weight * atom; the zero element of `shape` when empty.
  Params point(const Shape& shape) const;

 private:
  void purge();

  Map entries_;
  std::int64_t next_serial_ = 0;
};

// ---------------------------------------------------------------------------
// Step schedules

/// gamma_n = K / (K + n - 1)
struct Harmonic {
  int k = 2;
};

/// gamma_n = n^-alpha
struct Power {
  double alpha = 0.75;
};

using StepSchedule = std::variant<Harmonic, Power>;

void validate(const StepSchedule& schedule);
double step_size(const StepSchedule& schedule, std::int64_t n);
std::string describe(const StepSchedule& schedule);

}  // namespace ofw
