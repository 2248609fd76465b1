#include "ofw/lmo.hpp"

#include <cmath>
#include <limits>
#include <random>
#include <sstream>

#include "ofw/overloaded.hpp"

namespace ofw {

VertexPolytope VertexPolytope::from_vertices(const std::vector<Eigen::VectorXd>& list) {
  if (list.empty()) throw ArgumentError("vertex polytope needs at least one vertex");
  const Index dim = list.front().size();
  if (dim < 1) throw ArgumentError("vertices must have dimension >= 1");
  Eigen::MatrixXd table(dim, static_cast<Index>(list.size()));
  for (std::size_t i = 0; i < list.size(); ++i) {
    if (list[i].size() != dim) throw ShapeError("vertices must share one dimension");
    table.col(static_cast<Index>(i)) = list[i];
  }
  if (!table.allFinite()) throw ArgumentError("vertices must be finite");
  return VertexPolytope{std::make_shared<const Eigen::MatrixXd>(std::move(table))};
}

VertexPolytope VertexPolytope::simplex(Index n) {
  if (n < 1) throw ArgumentError("simplex needs n >= 1");
  return VertexPolytope{std::make_shared<const Eigen::MatrixXd>(Eigen::MatrixXd::Identity(n, n))};
}

void validate(const ConstraintSet& c) {
  std::visit(Overloaded{
                 [](const L1Ball& b) {
                   if (!(b.radius > 0.0) || !std::isfinite(b.radius)) throw ArgumentError("l1 radius must be positive");
                   if (b.n < 1) throw ArgumentError("l1 ball needs n >= 1");
                 },
                 [](const VertexPolytope& p) {
                   if (!p.vertices || p.vertices->cols() < 1) throw ArgumentError("vertex polytope needs a vertex");
                 },
                 [](const TraceNormBall& b) {
                   if (!(b.radius > 0.0) || !std::isfinite(b.radius)) throw ArgumentError("trace-norm radius must be positive");
                   if (b.m1 < 1 || b.m2 < 1) throw ArgumentError("trace-norm ball needs m1, m2 >= 1");
                   if (!(b.power.tol > 0.0) || b.power.max_iter < 1) throw ArgumentError("invalid power iteration config");
                 },
             },
             c);
}

Shape shape_of(const ConstraintSet& c) {
  return std::visit(Overloaded{
                        [](const L1Ball& b) { return Shape::vector(b.n); },
                        [](const VertexPolytope& p) { return Shape::vector(p.dim()); },
                        [](const TraceNormBall& b) { return Shape::matrix(b.m1, b.m2); },
                    },
                    c);
}

bool is_atomic(const ConstraintSet& c) { return !std::holds_alternative<TraceNormBall>(c); }

std::string describe(const ConstraintSet& c) {
  std::ostringstream os;
  std::visit(Overloaded{
                 [&](const L1Ball& b) { os << "l1-ball(r=" << b.radius << ", n=" << b.n << ")"; },
                 [&](const VertexPolytope& p) { os << "polytope(" << p.count() << " vertices in R^" << p.dim() << ")"; },
                 [&](const TraceNormBall& b) {
                   os << "trace-ball(R=" << b.radius << ", " << b.m1 << "x" << b.m2 << ")";
                 },
             },
             c);
  return os.str();
}

// ---------------------------------------------------------------------------

namespace {

template <class Mat>
SingularPair power_iteration(const Mat& m, const PowerIterConfig& cfg) {
  const Index m1 = m.rows();
  const Index m2 = m.cols();
  if (m1 < 1 || m2 < 1) throw ArgumentError("top_singular_pair needs a non-empty matrix");
  if (!(cfg.tol > 0.0) || cfg.max_iter < 1) throw ArgumentError("invalid power iteration config");

  const double fro = m.norm();
  if (!std::isfinite(fro)) throw ArgumentError("top_singular_pair needs a finite matrix");

  SingularPair out;
  out.u = Eigen::VectorXd::Unit(m1, 0);
  out.v = Eigen::VectorXd::Unit(m2, 0);
  if (fro == 0.0) return out;

  std::mt19937_64 rng(cfg.seed);
  std::normal_distribution<double> normal;
  Eigen::VectorXd v(m2);
  for (Index j = 0; j < m2; ++j) v(j) = normal(rng);
  v.normalize();

  const double threshold = cfg.tol * std::max(1.0, fro);
  double best = std::numeric_limits<double>::infinity();
  Eigen::VectorXd u(m1), w(m2);

  for (int it = 1; it <= cfg.max_iter; ++it) {
    u.noalias() = m * v;
    double s = u.norm();
    if (s == 0.0) {
      // Start landed in the null space; restart from the heaviest row.
      Eigen::VectorXd row_norms(m1);
      for (Index i = 0; i < m1; ++i) row_norms(i) = Eigen::VectorXd(m.row(i).transpose()).norm();
      Index i_max = 0;
      row_norms.maxCoeff(&i_max);
      v = Eigen::VectorXd(m.row(i_max).transpose()).normalized();
      u.noalias() = m * v;
      s = u.norm();
    }
    u /= s;
    w.noalias() = m.transpose() * u;
    const double residual = (w - s * v).norm();
    if (residual < best) {
      best = residual;
      out.u = u;
      out.v = v;
      out.sigma = s;
      out.residual = residual;
    }
    out.iterations = it;
    if (residual <= threshold) {
      out.converged = true;
      return out;
    }
    v = w / w.norm();
  }
  out.converged = false;
  return out;
}

}  // namespace

SingularPair top_singular_pair(const Eigen::MatrixXd& m, const PowerIterConfig& cfg) { return power_iteration(m, cfg); }

SingularPair top_singular_pair(const SparseMatrix& m, const PowerIterConfig& cfg) { return power_iteration(m, cfg); }

SignedBasis lmo_l1(const Eigen::Ref<const Eigen::VectorXd>& g, double r) {
  if (g.size() == 0) throw ArgumentError("lmo_l1 needs a non-empty gradient");
  if (!(r > 0.0)) throw ArgumentError("lmo_l1 needs a positive radius");
  Index best = 0;
  double best_abs = std::abs(g(0));
  for (Index j = 1; j < g.size(); ++j) {
    const double a = std::abs(g(j));
    if (a > best_abs) {
      best_abs = a;
      best = j;
    }
  }
  const int sign_g = g(best) < 0.0 ? -1 : 1;
  return SignedBasis{best, -sign_g, r};
}

Vertex lmo_vertices(const Eigen::Ref<const Eigen::VectorXd>& g, const VertexPolytope& polytope) {
  if (!polytope.vertices || polytope.count() == 0) throw ArgumentError("lmo_vertices needs at least one vertex");
  if (polytope.dim() != g.size()) throw ShapeError("lmo_vertices: gradient/vertex dimension mismatch");
  const Eigen::VectorXd scores = polytope.vertices->transpose() * g;
  Index best = 0;
  for (Index i = 1; i < scores.size(); ++i) {
    if (scores(i) < scores(best)) best = i;
  }
  return Vertex{best, polytope.vertices};
}

TraceLmo lmo_trace(const Gradient& g, double radius, const PowerIterConfig& cfg) {
  if (!g.shape().is_matrix()) throw ShapeError("lmo_trace needs a matrix gradient");
  if (!(radius > 0.0)) throw ArgumentError("lmo_trace needs a positive radius");
  SingularPair p = g.is_sparse() ? top_singular_pair(g.sparse(), cfg) : top_singular_pair(g.dense(), cfg);
  return TraceLmo{RankOne{std::move(p.u), std::move(p.v), radius, true}, p.converged};
}

LmoOutput lmo(const ConstraintSet& c, const Gradient& g) {
  if (!(shape_of(c) == g.shape())) {
    throw ShapeError("lmo: gradient " + g.shape().str() + " vs constraint " + shape_of(c).str());
  }
  return std::visit(Overloaded{
                        [&](const L1Ball& b) {
                          if (!g.is_sparse()) return LmoOutput{lmo_l1(g.dense().col(0), b.radius), true};
                          const Eigen::MatrixXd dense = g.to_dense();
                          return LmoOutput{lmo_l1(dense.col(0), b.radius), true};
                        },
                        [&](const VertexPolytope& p) {
                          const Eigen::MatrixXd dense = g.to_dense();
                          return LmoOutput{lmo_vertices(dense.col(0), p), true};
                        },
                        [&](const TraceNormBall& b) {
                          TraceLmo t = lmo_trace(g, b.radius, b.power);
                          return LmoOutput{std::move(t.atom), t.converged};
                        },
                    },
                    c);
}

}  // namespace ofw
