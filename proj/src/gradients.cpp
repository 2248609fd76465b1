#include "ofw/gradients.hpp"

#include <algorithm>
#include <cmath>

#include "ofw/overloaded.hpp"

namespace ofw {

namespace {

double stable_sigmoid(double z) {
  if (z >= 0.0) return 1.0 / (1.0 + std::exp(-z));
  const double e = std::exp(z);
  return e / (1.0 + e);
}

// log(1 + e^z)
double softplus(double z) { return std::max(z, 0.0) + std::log1p(std::exp(-std::abs(z))); }

}  // namespace

Index LabeledVector::dim() const {
  return std::visit([](const auto& v) { return static_cast<Index>(v.size()); }, x);
}

double log_partition(Link link, double x) {
  switch (link) {
    case Link::Gaussian: return 0.5 * x * x;
    case Link::Logistic: return softplus(x);
    case Link::Poisson: return std::exp(std::clamp(x, -kPoissonClamp, kPoissonClamp));
  }
  return 0.0;
}

double link_mean(Link link, double x, bool* saturated) {
  switch (link) {
    case Link::Gaussian: return x;
    case Link::Logistic: return stable_sigmoid(x);
    case Link::Poisson: {
      if (std::abs(x) > kPoissonClamp && saturated) *saturated = true;
      return std::exp(std::clamp(x, -kPoissonClamp, kPoissonClamp));
    }
  }
  return 0.0;
}

const char* to_string(Link link) {
  switch (link) {
    case Link::Gaussian: return "gaussian";
    case Link::Logistic: return "logistic";
    case Link::Poisson: return "poisson";
  }
  return "?";
}

const char* to_string(LossKind kind) { return kind == LossKind::Sigmoid ? "sigmoid" : "logistic"; }

// ---------------------------------------------------------------------------

LassoStats::LassoStats(Index n)
    : s_aa_(Eigen::MatrixXd::Zero(n, n)), s_ay_(Eigen::VectorXd::Zero(n)) {
  if (n < 1) throw ArgumentError("lasso stats need n >= 1");
}

void LassoStats::update(const LassoSample& s) {
  if (!s.a) throw ArgumentError("lasso sample without design");
  const Index n = dim();
  if (s.a->cols() != n || s.a->rows() != s.y.size()) throw ShapeError("lasso sample dimension mismatch");
  const Eigen::MatrixXd* gram = s.gram.get();
  if (gram) {
    if (gram->rows() != n || gram->cols() != n) throw ShapeError("cached gram dimension mismatch");
  } else {
    scratch_.setZero(n, n);
    scratch_.selfadjointView<Eigen::Lower>().rankUpdate(s.a->transpose());
    scratch_ = scratch_.selfadjointView<Eigen::Lower>();
    gram = &scratch_;
  }
  ++t_;
  const double w = 1.0 / static_cast<double>(t_);
  s_aa_ = (1.0 - w) * s_aa_ + w * (*gram);
  s_ay_ = (1.0 - w) * s_ay_ + w * (s.a->transpose() * s.y);
}

Eigen::VectorXd LassoStats::gradient(const Eigen::VectorXd& theta) const {
  if (t_ == 0) throw NoDataError("lasso gradient requested before any sample");
  if (theta.size() != dim()) throw ShapeError("lasso gradient: theta dimension mismatch");
  Eigen::VectorXd g = s_aa_ * theta;
  g -= s_ay_;
  return g;
}

// ---------------------------------------------------------------------------

McStats::McStats(Index m1, Index m2, Link link) : m1_(m1), m2_(m2), link_(link) {
  if (m1 < 1 || m2 < 1) throw ArgumentError("mc stats need m1, m2 >= 1");
}

void McStats::update(const McSample& s) {
  if (s.k < 0 || s.k >= m1_ || s.l < 0 || s.l >= m2_) throw ArgumentError("mc sample index out of range");
  if (!std::isfinite(s.y)) throw ArgumentError("mc sample value must be finite");
  const std::int64_t key = static_cast<std::int64_t>(s.k) * m2_ + s.l;
  auto [it, inserted] = where_.try_emplace(key, cells_.size());
  if (inserted) cells_.push_back(Cell{s.k, s.l, 0.0, 0});
  Cell& c = cells_[it->second];
  c.sum_y += s.y;
  ++c.hits;
  ++t_;
}

SparseMatrix McStats::gradient(const Eigen::MatrixXd& theta, bool* saturated) const {
  if (t_ == 0) throw NoDataError("mc gradient requested before any sample");
  if (theta.rows() != m1_ || theta.cols() != m2_) throw ShapeError("mc gradient: theta shape mismatch");
  const double inv_t = 1.0 / static_cast<double>(t_);
  std::vector<Eigen::Triplet<double>> triplets;
  triplets.reserve(cells_.size());
  for (const Cell& c : cells_) {
    const double mean = link_mean(link_, theta(c.k, c.l), saturated);
    triplets.emplace_back(c.k, c.l, mean * (static_cast<double>(c.hits) * inv_t) - c.sum_y * inv_t);
  }
  SparseMatrix g(m1_, m2_);
  g.setFromTriplets(triplets.begin(), triplets.end());
  return g;
}

SparseMatrix McStats::s1() const {
  std::vector<Eigen::Triplet<double>> triplets;
  const double inv_t = t_ ? 1.0 / static_cast<double>(t_) : 0.0;
  for (const Cell& c : cells_) triplets.emplace_back(c.k, c.l, c.sum_y * inv_t);
  SparseMatrix m(m1_, m2_);
  m.setFromTriplets(triplets.begin(), triplets.end());
  return m;
}

SparseMatrix McStats::s2() const {
  std::vector<Eigen::Triplet<double>> triplets;
  const double inv_t = t_ ? 1.0 / static_cast<double>(t_) : 0.0;
  for (const Cell& c : cells_) triplets.emplace_back(c.k, c.l, static_cast<double>(c.hits) * inv_t);
  SparseMatrix m(m1_, m2_);
  m.setFromTriplets(triplets.begin(), triplets.end());
  return m;
}

// ---------------------------------------------------------------------------

double classification_loss(LossKind kind, int y, double u, double steepness) {
  if (kind == LossKind::Sigmoid) return stable_sigmoid(-steepness * y * u);
  return softplus(-y * u);
}

double classification_loss_derivative(LossKind kind, int y, double u, double steepness) {
  if (kind == LossKind::Sigmoid) {
    const double f = stable_sigmoid(-steepness * y * u);
    return -steepness * y * f * (1.0 - f);
  }
  return -y * stable_sigmoid(-y * u);
}

ReplayStats::ReplayStats(Index n, LossKind kind, double steepness) : n_(n), kind_(kind), steepness_(steepness) {
  if (n < 1) throw ArgumentError("replay stats need n >= 1");
  if (!(steepness > 0.0)) throw ArgumentError("sigmoid steepness must be positive");
}

void ReplayStats::update(const LabeledVector& s) {
  if (s.dim() != n_) throw ShapeError("labeled vector dimension mismatch");
  if (s.y != 1 && s.y != -1) throw ArgumentError("labels must be +-1");
  if (const auto* dense = std::get_if<Eigen::VectorXd>(&s.x)) {
    if (!dense->allFinite()) throw ArgumentError("features must be finite");
    dense_rows_.insert(dense_rows_.end(), dense->data(), dense->data() + n_);
    dense_labels_.push_back(s.y);
  } else {
    sparse_.push_back(s);
  }
}

Eigen::VectorXd ReplayStats::gradient(const Eigen::VectorXd& theta) const {
  if (count() == 0) throw NoDataError("replay gradient requested before any sample");
  if (theta.size() != n_) throw ShapeError("replay gradient: theta dimension mismatch");
  Eigen::VectorXd g = Eigen::VectorXd::Zero(n_);
  for (std::size_t i = 0; i < dense_labels_.size(); ++i) {
    Eigen::Map<const Eigen::VectorXd> x(dense_rows_.data() + i * static_cast<std::size_t>(n_), n_);
    const double d = classification_loss_derivative(kind_, dense_labels_[i], x.dot(theta), steepness_);
    g.noalias() += d * x;
  }
  for (const LabeledVector& s : sparse_) {
    const auto& x = std::get<SparseVector>(s.x);
    double u = 0.0;
    for (SparseVector::InnerIterator it(x); it; ++it) u += it.value() * theta(it.index());
    const double d = classification_loss_derivative(kind_, s.y, u, steepness_);
    for (SparseVector::InnerIterator it(x); it; ++it) g(it.index()) += d * it.value();
  }
  return g / static_cast<double>(count());
}

double ReplayStats::loss(const Eigen::VectorXd& theta) const {
  if (count() == 0) throw NoDataError("replay loss requested before any sample");
  if (theta.size() != n_) throw ShapeError("replay loss: theta dimension mismatch");
  double acc = 0.0;
  for (std::size_t i = 0; i < dense_labels_.size(); ++i) {
    Eigen::Map<const Eigen::VectorXd> x(dense_rows_.data() + i * static_cast<std::size_t>(n_), n_);
    acc += classification_loss(kind_, dense_labels_[i], x.dot(theta), steepness_);
  }
  for (const LabeledVector& s : sparse_) {
    const auto& x = std::get<SparseVector>(s.x);
    double u = 0.0;
    for (SparseVector::InnerIterator it(x); it; ++it) u += it.value() * theta(it.index());
    acc += classification_loss(kind_, s.y, u, steepness_);
  }
  return acc / static_cast<double>(count());
}

// ---------------------------------------------------------------------------

GradientOracle::GradientOracle(Stats stats, Shape shape) : stats_(std::move(stats)), shape_(shape) {
  std::visit(Overloaded{
                 [&](const LassoStats& s) {
                   if (!(shape_ == Shape::vector(s.dim()))) throw ShapeError("lasso oracle needs " + shape_.str());
                 },
                 [&](const McStats& s) {
                   if (!(shape_ == Shape::matrix(s.rows(), s.cols()))) throw ShapeError("mc oracle shape mismatch");
                 },
                 [&](const ReplayStats& s) {
                   if (shape_.size() != s.dim()) throw ShapeError("replay oracle shape mismatch");
                 },
             },
             stats_);
}

GradientOracle GradientOracle::lasso(Index n) { return GradientOracle(LassoStats(n), Shape::vector(n)); }

GradientOracle GradientOracle::matrix_completion(Index m1, Index m2, Link link) {
  return GradientOracle(McStats(m1, m2, link), Shape::matrix(m1, m2));
}

GradientOracle GradientOracle::replay(Shape shape, LossKind kind, double steepness) {
  return GradientOracle(ReplayStats(shape.size(), kind, steepness), shape);
}

void GradientOracle::observe(const Sample& s) {
  std::visit(Overloaded{
                 [&](LassoStats& st, const LassoSample& x) { st.update(x); },
                 [&](McStats& st, const McSample& x) { st.update(x); },
                 [&](ReplayStats& st, const LabeledVector& x) { st.update(x); },
                 [&](auto&, const auto&) { throw ArgumentError("sample kind does not match the gradient oracle"); },
             },
             stats_, s);
}

OracleGradient GradientOracle::gradient(const Params& theta) const {
  if (!(theta.shape() == shape_)) throw ShapeError("oracle gradient: theta " + theta.shape().str());
  return std::visit(Overloaded{
                        [&](const LassoStats& st) {
                          return OracleGradient{Gradient(shape_, Eigen::MatrixXd(st.gradient(theta.values().col(0)))),
                                                false};
                        },
                        [&](const McStats& st) {
                          bool saturated = false;
                          SparseMatrix g = st.gradient(theta.values(), &saturated);
                          return OracleGradient{Gradient(shape_, std::move(g)), saturated};
                        },
                        [&](const ReplayStats& st) {
                          const Eigen::Map<const Eigen::VectorXd> flat(theta.values().data(), shape_.size());
                          Eigen::VectorXd g = st.gradient(flat);
                          Eigen::MatrixXd shaped = Eigen::Map<Eigen::MatrixXd>(g.data(), shape_.rows, shape_.cols);
                          return OracleGradient{Gradient(shape_, std::move(shaped)), false};
                        },
                    },
                    stats_);
}

std::int64_t GradientOracle::count() const {
  return std::visit([](const auto& s) { return s.count(); }, stats_);
}

}  // namespace ofw
