#include "ofw/core.hpp"

#include <cmath>
#include <sstream>

#include "ofw/overloaded.hpp"

namespace ofw {

namespace {

double rank_one_scale(const RankOne& a) { return a.negated ? -a.radius : a.radius; }

}  // namespace

Shape Shape::vector(Index n) {
  if (n < 1) throw ArgumentError("vector shape needs n >= 1");
  return Shape{Kind::Vector, n, 1};
}

Shape Shape::matrix(Index m1, Index m2) {
  if (m1 < 1 || m2 < 1) throw ArgumentError("matrix shape needs m1, m2 >= 1");
  return Shape{Kind::Matrix, m1, m2};
}

std::string Shape::str() const {
  std::ostringstream os;
  if (is_matrix()) {
    os << "Matrix(" << rows << "x" << cols << ")";
  } else {
    os << "Vector(" << rows << ")";
  }
  return os.str();
}

Params::Params(Shape shape) : shape_(shape), values_(Eigen::MatrixXd::Zero(shape.rows, shape.cols)) {}

Params::Params(Shape shape, Eigen::MatrixXd values) : shape_(shape), values_(std::move(values)) {
  if (values_.rows() != shape_.rows || values_.cols() != shape_.cols) {
    throw ShapeError("params values do not match " + shape_.str());
  }
  if (!values_.allFinite()) throw ArgumentError("params must be finite");
}

double Params::dot(const Params& other) const {
  if (!(shape_ == other.shape_)) throw ShapeError("dot: " + shape_.str() + " vs " + other.shape_.str());
  return (values_.array() * other.values_.array()).sum();
}

// ---------------------------------------------------------------------------

Gradient::Gradient(Shape shape, Eigen::MatrixXd dense) : shape_(shape), data_(std::move(dense)) {
  const auto& d = std::get<Eigen::MatrixXd>(data_);
  if (d.rows() != shape_.rows || d.cols() != shape_.cols) {
    throw ShapeError("gradient values do not match " + shape_.str());
  }
}

Gradient::Gradient(Shape shape, SparseMatrix sparse) : shape_(shape), data_(std::move(sparse)) {
  const auto& s = std::get<SparseMatrix>(data_);
  if (s.rows() != shape_.rows || s.cols() != shape_.cols) {
    throw ShapeError("gradient values do not match " + shape_.str());
  }
}

const Eigen::MatrixXd& Gradient::dense() const {
  if (is_sparse()) throw ShapeError("gradient is sparse");
  return std::get<Eigen::MatrixXd>(data_);
}

const SparseMatrix& Gradient::sparse() const {
  if (!is_sparse()) throw ShapeError("gradient is dense");
  return std::get<SparseMatrix>(data_);
}

Eigen::MatrixXd Gradient::to_dense() const {
  if (is_sparse()) return Eigen::MatrixXd(sparse());
  return dense();
}

double Gradient::dot(const Params& theta) const {
  if (!(shape_ == theta.shape())) throw ShapeError("gradient/params shape mismatch");
  if (!is_sparse()) return (dense().array() * theta.values().array()).sum();
  double acc = 0.0;
  const auto& s = sparse();
  for (Index k = 0; k < s.outerSize(); ++k) {
    for (SparseMatrix::InnerIterator it(s, k); it; ++it) acc += it.value() * theta.values()(it.row(), it.col());
  }
  return acc;
}

double Gradient::max_abs() const {
  if (!is_sparse()) return dense().size() == 0 ? 0.0 : dense().cwiseAbs().maxCoeff();
  double m = 0.0;
  const auto& s = sparse();
  for (Index k = 0; k < s.outerSize(); ++k) {
    for (SparseMatrix::InnerIterator it(s, k); it; ++it) m = std::max(m, std::abs(it.value()));
  }
  return m;
}

bool Gradient::all_finite() const {
  if (!is_sparse()) return dense().allFinite();
  const auto& s = sparse();
  for (Index k = 0; k < s.outerSize(); ++k) {
    for (SparseMatrix::InnerIterator it(s, k); it; ++it) {
      if (!std::isfinite(it.value())) return false;
    }
  }
  return true;
}

// ---------------------------------------------------------------------------

std::string AtomKey::str() const {
  std::ostringstream os;
  switch (kind) {
    case Kind::SignedBasis: os << (sign > 0 ? "+e" : "-e") << id; break;
    case Kind::Vertex: os << "v" << id; break;
    case Kind::RankOne: os << "r" << id; break;
  }
  return os.str();
}

std::optional<AtomKey> canonical_key(const Atom& atom) {
  return std::visit(Overloaded{
                        [](const SignedBasis& a) -> std::optional<AtomKey> {
                          return AtomKey{AtomKey::Kind::SignedBasis, a.index, a.sign};
                        },
                        [](const Vertex& a) -> std::optional<AtomKey> {
                          return AtomKey{AtomKey::Kind::Vertex, a.id, 0};
                        },
                        [](const RankOne&) -> std::optional<AtomKey> { return std::nullopt; },
                    },
                    atom);
}

void check_compatible(const Atom& atom, const Shape& shape) {
  std::visit(Overloaded{
                 [&](const SignedBasis& a) {
                   if (shape.is_matrix()) throw ShapeError("signed-basis atom on " + shape.str());
                   if (a.index < 0 || a.index >= shape.rows) throw ShapeError("signed-basis index out of range");
                   if (a.sign != 1 && a.sign != -1) throw ShapeError("signed-basis sign must be +-1");
                 },
                 [&](const Vertex& a) {
                   if (shape.is_matrix() || !a.table) throw ShapeError("vertex atom on " + shape.str());
                   if (a.table->rows() != shape.rows) throw ShapeError("vertex dimension mismatch");
                   if (a.id < 0 || a.id >= a.table->cols()) throw ShapeError("vertex id out of range");
                 },
                 [&](const RankOne& a) {
                   if (!shape.is_matrix()) throw ShapeError("rank-one atom on " + shape.str());
                   if (a.u.size() != shape.rows || a.v.size() != shape.cols) {
                     throw ShapeError("rank-one factors do not match " + shape.str());
                   }
                 },
             },
             atom);
}

void add_scaled(Eigen::MatrixXd& out, const Atom& atom, double scale) {
  std::visit(Overloaded{
                 [&](const SignedBasis& a) { out(a.index, 0) += scale * a.sign * a.radius; },
                 [&](const Vertex& a) { out.col(0) += scale * a.table->col(a.id); },
                 [&](const RankOne& a) { out.noalias() += (scale * rank_one_scale(a)) * a.u * a.v.transpose(); },
             },
             atom);
}

Params atom_point(const Atom& atom, const Shape& shape) {
  check_compatible(atom, shape);
  Params p(shape);
  add_scaled(p.values(), atom, 1.0);
  return p;
}

double dot(const Atom& atom, const Gradient& g) {
  check_compatible(atom, g.shape());
  return std::visit(
      Overloaded{
          [&](const SignedBasis& a) {
            const double gi = g.is_sparse() ? g.sparse().coeff(a.index, 0) : g.dense()(a.index, 0);
            return a.sign * a.radius * gi;
          },
          [&](const Vertex& a) {
            if (!g.is_sparse()) return a.table->col(a.id).dot(g.dense().col(0));
            double acc = 0.0;
            for (SparseMatrix::InnerIterator it(g.sparse(), 0); it; ++it) acc += it.value() * (*a.table)(it.row(), a.id);
            return acc;
          },
          [&](const RankOne& a) {
            double acc = 0.0;
            if (g.is_sparse()) {
              const auto& s = g.sparse();
              for (Index k = 0; k < s.outerSize(); ++k) {
                for (SparseMatrix::InnerIterator it(s, k); it; ++it) acc += a.u(it.row()) * it.value() * a.v(it.col());
              }
            } else {
              acc = a.u.dot(g.dense() * a.v);
            }
            return rank_one_scale(a) * acc;
          },
      },
      atom);
}

// ---------------------------------------------------------------------------

double ActiveSet::weight(const AtomKey& key) const {
  auto it = entries_.find(key);
  if (it == entries_.end()) throw ArgumentError("atom " + key.str() + " is not active");
  return it->second.weight;
}

double ActiveSet::weight_sum() const {
  double s = 0.0;
  for (const auto& [key, e] : entries_) s += e.weight;
  return s;
}

double ActiveSet::gamma_max(const AtomKey& away) const {
  const double alpha = weight(away);
  if (entries_.size() == 1 || alpha >= 1.0) {
    throw InvariantError("gamma_max undefined for atom " + away.str() + " with weight 1");
  }
  return alpha / (1.0 - alpha);
}

AtomKey ActiveSet::apply_fw_step(const Atom& atom, double gamma) {
  if (!(gamma > 0.0 && gamma <= 1.0)) throw ArgumentError("FW step size must lie in (0, 1]");
  AtomKey key;
  if (auto k = canonical_key(atom)) {
    key = *k;
  } else {
    key = AtomKey{AtomKey::Kind::RankOne, next_serial_++, 0};
  }
  if (gamma == 1.0) {
    entries_.clear();
    entries_.emplace(key, Entry{atom, 1.0});
    return key;
  }
  for (auto& [k, e] : entries_) e.weight *= (1.0 - gamma);
  auto [it, inserted] = entries_.try_emplace(key, Entry{atom, 0.0});
  it->second.weight += gamma;
  purge();
  return key;
}

void ActiveSet::apply_away_step(const AtomKey& away, double gamma) {
  const double gmax = gamma_max(away);
  if (!(gamma > 0.0)) throw ArgumentError("away step size must be positive");
  if (gamma > gmax + kDropTolerance) {
    throw InvariantError("away step " + std::to_string(gamma) + " exceeds gamma_max " + std::to_string(gmax));
  }
  for (auto& [k, e] : entries_) e.weight *= (1.0 + gamma);
  auto it = entries_.find(away);
  if (std::abs(gamma - gmax) <= kDropTolerance) {
    entries_.erase(it);
  } else {
    it->second.weight -= gamma;
  }
  purge();
}

Params ActiveSet::point(const Shape& shape) const {
  Params p(shape);
  for (const auto& [key, e] : entries_) {
    check_compatible(e.atom, shape);
    add_scaled(p.values(), e.atom, e.weight);
  }
  return p;
}

void ActiveSet::purge() {
  std::erase_if(entries_, [](const auto& kv) { return kv.second.weight <= kWeightPurge; });
  // Fold purged mass and rounding drift back in; long drop sequences otherwise
  // let the sum wander by ~1e-7.
  const double sum = weight_sum();
  if (sum > 0.0)
    for (auto& [k, e] : entries_) e.weight /= sum;
}

// ---------------------------------------------------------------------------

void validate(const StepSchedule& schedule) {
  std::visit(Overloaded{
                 [](const Harmonic& h) {
                   if (h.k < 1) throw ArgumentError("harmonic schedule needs K >= 1");
                 },
                 [](const Power& p) {
                   if (!(p.alpha >= 0.5 && p.alpha < 1.0)) throw ArgumentError("power schedule needs alpha in [0.5, 1)");
                 },
             },
             schedule);
}

double step_size(const StepSchedule& schedule, std::int64_t n) {
  if (n < 1) throw ArgumentError("step index must be >= 1");
  validate(schedule);
  return std::visit(Overloaded{
                        [n](const Harmonic& h) {
                          return static_cast<double>(h.k) / static_cast<double>(h.k + n - 1);
                        },
                        [n](const Power& p) { return std::pow(static_cast<double>(n), -p.alpha); },
                    },
                    schedule);
}

std::string describe(const StepSchedule& schedule) {
  std::ostringstream os;
  std::visit(Overloaded{
                 [&](const Harmonic& h) { os << "harmonic(K=" << h.k << ")"; },
                 [&](const Power& p) { os << "power(alpha=" << p.alpha << ")"; },
             },
             schedule);
  return os.str();
}

}  // namespace ofw
