#pragma once

// Linear minimization oracles: argmin over the constraint set of <a, g>.

#include <cstdint>
#include <memory>
#include <string>
#include <variant>
#include <vector>

#include "ofw/core.hpp"

namespace ofw {

struct PowerIterConfig {
  double tol = 1e-8;  // relative residual, scaled by max(1, ||M||_F)
  int max_iter = 1000;
  std::uint64_t seed = 0x5eed;
};

/// {theta in R^n : ||theta||_1 <= radius}
struct L1Ball {
  double radius = 1.0;
  Index n = 1;
};

/// Convex hull of the columns of `vertices`.
struct VertexPolytope {
  std::shared_ptr<const Eigen::MatrixXd> vertices;

  static VertexPolytope from_vertices(const std::vector<Eigen::VectorXd>& list);
  /// The probability simplex in R^n (vertices e_0 .. e_{n-1}).
  static VertexPolytope simplex(Index n);
  Index dim() const { return vertices ? vertices->rows() : 0; }
  Index count() const { return vertices ? vertices->cols() : 0; }
};

/// {theta in R^{m1 x m2} : ||theta||_{sigma,1} <= radius}
struct TraceNormBall {
  double radius = 1.0;
  Index m1 = 1;
  Index m2 = 1;
  PowerIterConfig power;
};

using ConstraintSet = std::variant<L1Ball, VertexPolytope, TraceNormBall>;

void validate(const ConstraintSet& c);
Shape shape_of(const ConstraintSet& c);
/// True for sets with finitely many atoms (where O-AW applies).
bool is_atomic(const ConstraintSet& c);
std::string describe(const ConstraintSet& c);

struct SingularPair {
  Eigen::VectorXd u;
  double sigma = 0.0;
  Eigen::VectorXd v;
  bool converged = true;
  int iterations = 0;
  double residual = 0.0;  // ||M^T u - sigma v||; ||M v - sigma u|| vanishes by construction
};

/// Top singular triple by power iteration on M^T M from a seeded random
/// unit start. Stops once the residual drops below tol * max(1, ||M||_F).
SingularPair top_singular_pair(const Eigen::MatrixXd& m, const PowerIterConfig& cfg);
SingularPair top_singular_pair(const SparseMatrix& m, const PowerIterConfig& cfg);

/// -r * sign(g_i) * e_i for the smallest i maximizing |g_i|; sign(0) := +1.
SignedBasis lmo_l1(const Eigen::Ref<const Eigen::VectorXd>& g, double r);

/// Vertex minimizing <v, g>, lowest id on ties.
Vertex lmo_vertices(const Eigen::Ref<const Eigen::VectorXd>& g, const VertexPolytope& polytope);

struct TraceLmo {
  RankOne atom;
  bool converged = true;
};

/// -R u1 v1^T from the top singular pair of G.
TraceLmo lmo_trace(const Gradient& g, double radius, const PowerIterConfig& cfg);

struct LmoOutput {
  Atom atom;
  bool converged = true;
};

LmoOutput lmo(const ConstraintSet& c, const Gradient& g);

}  // namespace ofw
