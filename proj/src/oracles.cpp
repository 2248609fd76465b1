#include "ofw/oracles.hpp"

#include <cmath>
#include <limits>

#include <Eigen/SVD>

namespace ofw::oracles {

SignedBasis brute_l1(const Eigen::VectorXd& g, double r) {
  if (g.size() == 0) throw ArgumentError("empty gradient");
  SignedBasis best{0, -1, r};
  double best_val = std::numeric_limits<double>::infinity();
  for (Index i = 0; i < g.size(); ++i) {
    for (int sign : {-1, 1}) {
      const double val = sign * r * g(i);
      if (val < best_val) {
        best_val = val;
        best = SignedBasis{i, sign, r};
      }
    }
  }
  return best;
}

Index brute_vertices(const Eigen::VectorXd& g, const Eigen::MatrixXd& vertices) {
  Index best = 0;
  double best_val = std::numeric_limits<double>::infinity();
  for (Index j = 0; j < vertices.cols(); ++j) {
    double val = 0.0;
    for (Index i = 0; i < g.size(); ++i) val += vertices(i, j) * g(i);
    if (val < best_val) {
      best_val = val;
      best = j;
    }
  }
  return best;
}

double dense_top_sigma(const Eigen::MatrixXd& m) {
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(m);
  return svd.singularValues().size() ? svd.singularValues()(0) : 0.0;
}

double dense_trace_lmo_value(const Eigen::MatrixXd& g, double radius) { return -radius * dense_top_sigma(g); }

Eigen::VectorXd naive_lasso_grad(const std::vector<LassoSample>& samples, const Eigen::VectorXd& theta) {
  Eigen::VectorXd sum = Eigen::VectorXd::Zero(theta.size());
  for (const auto& s : samples) {
    const Eigen::VectorXd resid = *s.a * theta - s.y;
    sum += s.a->transpose() * resid;
  }
  return sum / static_cast<double>(samples.size());
}

Eigen::MatrixXd naive_mc_grad(const std::vector<McSample>& samples, Link link, const Eigen::MatrixXd& theta) {
  Eigen::MatrixXd sum = Eigen::MatrixXd::Zero(theta.rows(), theta.cols());
  for (const auto& s : samples) {
    const double x = theta(s.k, s.l);
    double mean = x;
    if (link == Link::Logistic) mean = 1.0 / (1.0 + std::exp(-x));
    if (link == Link::Poisson) mean = std::exp(x);
    sum(s.k, s.l) += mean - s.y;
  }
  return sum / static_cast<double>(samples.size());
}

namespace {

Eigen::VectorXd dense_x(const LabeledVector& s) {
  if (const auto* d = std::get_if<Eigen::VectorXd>(&s.x)) return *d;
  return Eigen::VectorXd(std::get<SparseVector>(s.x));
}

}  // namespace

Eigen::VectorXd naive_replay_grad(const std::vector<LabeledVector>& samples, LossKind kind, const Eigen::VectorXd& theta,
                                  double steepness) {
  Eigen::VectorXd sum = Eigen::VectorXd::Zero(theta.size());
  for (const auto& s : samples) {
    const Eigen::VectorXd x = dense_x(s);
    const double u = theta.dot(x);
    const double y = s.y;
    double d = 0.0;
    if (kind == LossKind::Sigmoid) {
      const double f = 1.0 / (1.0 + std::exp(steepness * y * u));
      d = -steepness * y * f * (1.0 - f);
    } else {
      d = -y / (1.0 + std::exp(y * u));
    }
    sum += d * x;
  }
  return sum / static_cast<double>(samples.size());
}

double naive_replay_loss(const std::vector<LabeledVector>& samples, LossKind kind, const Eigen::VectorXd& theta,
                         double steepness) {
  double sum = 0.0;
  for (const auto& s : samples) {
    const double u = theta.dot(dense_x(s));
    if (kind == LossKind::Sigmoid) {
      sum += 1.0 / (1.0 + std::exp(steepness * s.y * u));
    } else {
      sum += std::log(1.0 + std::exp(-s.y * u));
    }
  }
  return sum / static_cast<double>(samples.size());
}

double directional_fd(const std::function<double(const Eigen::VectorXd&)>& f, const Eigen::VectorXd& x,
                      const Eigen::VectorXd& d, double h) {
  return (f(x + h * d) - f(x - h * d)) / (2.0 * h);
}

std::vector<Eigen::VectorXd> reference_ofw_quadratic(const Eigen::MatrixXd& q, const Eigen::VectorXd& c,
                                                     const Eigen::MatrixXd& vertices, int k, int steps) {
  std::vector<Eigen::VectorXd> path;
  Eigen::VectorXd x = Eigen::VectorXd::Zero(c.size());
  path.push_back(x);
  for (int t = 1; t <= steps; ++t) {
    const Eigen::VectorXd g = q * x - c;
    const Index j = brute_vertices(g, vertices);
    const double gamma = static_cast<double>(k) / static_cast<double>(k + t - 1);
    x = x + gamma * (vertices.col(j) - x);
    path.push_back(x);
  }
  return path;
}

Eigen::MatrixXd random_feasible(const ConstraintSet& c, std::mt19937_64& rng) {
  std::uniform_int_distribution<int> how_many(1, 4);
  std::exponential_distribution<double> expo(1.0);
  std::normal_distribution<double> normal;
  const int k = how_many(rng);
  std::vector<double> w(static_cast<std::size_t>(k));
  double total = 0.0;
  for (double& x : w) total += (x = expo(rng));
  for (double& x : w) x /= total;

  if (const auto* b = std::get_if<L1Ball>(&c)) {
    std::uniform_int_distribution<Index> idx(0, b->n - 1);
    Eigen::MatrixXd out = Eigen::MatrixXd::Zero(b->n, 1);
    for (double x : w) out(idx(rng), 0) += x * b->radius * (normal(rng) < 0 ? -1.0 : 1.0);
    return out;
  }
  if (const auto* p = std::get_if<VertexPolytope>(&c)) {
    std::uniform_int_distribution<Index> idx(0, p->count() - 1);
    Eigen::MatrixXd out = Eigen::MatrixXd::Zero(p->dim(), 1);
    for (double x : w) out.col(0) += x * p->vertices->col(idx(rng));
    return out;
  }
  const auto& t = std::get<TraceNormBall>(c);
  Eigen::MatrixXd out = Eigen::MatrixXd::Zero(t.m1, t.m2);
  for (double x : w) {
    Eigen::VectorXd u(t.m1), v(t.m2);
    for (Index i = 0; i < t.m1; ++i) u(i) = normal(rng);
    for (Index i = 0; i < t.m2; ++i) v(i) = normal(rng);
    out += x * t.radius * u.normalized() * v.normalized().transpose();
  }
  return out;
}

}  // namespace ofw::oracles
