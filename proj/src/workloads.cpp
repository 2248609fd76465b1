#include "ofw/workloads.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include <Eigen/SVD>

namespace ofw {

std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t salt) {
  std::uint64_t z = seed + 0x9e3779b97f4a7c15ULL * (salt + 1);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

Eigen::MatrixXd gaussian_matrix(Index rows, Index cols, std::mt19937_64& rng) {
  std::normal_distribution<double> normal;
  Eigen::MatrixXd m(rows, cols);
  for (Index j = 0; j < cols; ++j)
    for (Index i = 0; i < rows; ++i) m(i, j) = normal(rng);
  return m;
}

std::optional<Sample> VectorStream::next() {
  if (!samples_ || pos_ >= samples_->size()) return std::nullopt;
  return (*samples_)[pos_++];
}

EvalSpec Workload::eval_spec(Cadence cadence, int per_octave) const {
  EvalSpec spec;
  spec.f = f;
  spec.grad_f = grad_f;
  spec.f_star = f_star;
  spec.cadence = cadence;
  spec.per_octave = per_octave;
  if (const auto* tb = std::get_if<TraceNormBall>(&constraint)) spec.power = tb->power;
  return spec;
}

// ---------------------------------------------------------------------------
// LASSO

namespace {

class LassoStream final : public SampleStream {
 public:
  // Fixed design when `a` is set; otherwise a fresh m x n design per round.
  LassoStream(std::shared_ptr<const Eigen::MatrixXd> a, std::shared_ptr<const Eigen::MatrixXd> gram,
              Eigen::VectorXd theta_bar, Index m, double sigma, std::uint64_t seed)
      : a_(std::move(a)), gram_(std::move(gram)), theta_bar_(std::move(theta_bar)), m_(m), sigma_(sigma), rng_(seed) {
    if (a_) clean_ = *a_ * theta_bar_;
  }

  std::optional<Sample> next() override {
    std::normal_distribution<double> normal;
    LassoSample s;
    if (a_) {
      s.a = a_;
      s.gram = gram_;
      s.y = clean_;
    } else {
      auto a = std::make_shared<Eigen::MatrixXd>(gaussian_matrix(m_, theta_bar_.size(), rng_));
      s.y = *a * theta_bar_;
      s.a = std::move(a);
    }
    if (sigma_ > 0.0)
      for (Index i = 0; i < s.y.size(); ++i) s.y(i) += sigma_ * normal(rng_);
    return Sample{std::move(s)};
  }

 private:
  std::shared_ptr<const Eigen::MatrixXd> a_;
  std::shared_ptr<const Eigen::MatrixXd> gram_;
  Eigen::VectorXd theta_bar_;
  Eigen::VectorXd clean_;
  Index m_;
  double sigma_;
  std::mt19937_64 rng_;
};

void check_lasso(const LassoParams& p) {
  if (p.n < 1 || p.m < 1) throw ArgumentError("lasso needs n, m >= 1");
  if (!(p.sparsity_frac > 0.0 && p.sparsity_frac <= 1.0)) throw ArgumentError("sparsity_frac must be in (0, 1]");
  if (!(p.sigma_w >= 0.0) || !std::isfinite(p.sigma_w)) throw ArgumentError("sigma_w must be >= 0");
  if (!(p.r_factor > 0.0) || !std::isfinite(p.r_factor)) throw ArgumentError("r_factor must be positive");
}

Eigen::VectorXd sparse_theta_bar(const LassoParams& p) {
  std::mt19937_64 rng(derive_seed(p.seed, 1));
  const auto k = static_cast<Index>(std::ceil(p.sparsity_frac * static_cast<double>(p.n) - 1e-9));
  std::vector<Index> idx(static_cast<std::size_t>(p.n));
  std::iota(idx.begin(), idx.end(), Index{0});
  std::shuffle(idx.begin(), idx.end(), rng);
  std::normal_distribution<double> normal;
  Eigen::VectorXd theta = Eigen::VectorXd::Zero(p.n);
  for (Index i = 0; i < std::max<Index>(k, 1); ++i) theta(idx[static_cast<std::size_t>(i)]) = normal(rng);
  return theta;
}

Workload lasso_common(const LassoParams& p, const Eigen::VectorXd& theta_bar) {
  Workload w;
  const double l1 = theta_bar.lpNorm<1>();
  if (!(l1 > 0.0)) throw ArgumentError("degenerate theta_bar");
  const Index n = p.n;
  w.constraint = L1Ball{p.r_factor * l1, n};
  w.oracle_factory = [n] { return GradientOracle::lasso(n); };
  w.info["r"] = p.r_factor * l1;
  w.info["theta_bar_l1"] = l1;
  w.info["nonzeros"] = static_cast<double>((theta_bar.array() != 0.0).count());
  return w;
}

}  // namespace

Workload gen_fixed_design_lasso(const LassoParams& p) {
  check_lasso(p);
  const Eigen::VectorXd theta_bar = sparse_theta_bar(p);
  std::mt19937_64 rng(derive_seed(p.seed, 2));
  auto a = std::make_shared<const Eigen::MatrixXd>(gaussian_matrix(p.m, p.n, rng));
  auto gram = std::make_shared<const Eigen::MatrixXd>(a->transpose() * *a);

  Workload w = lasso_common(p, theta_bar);
  w.name = "lasso-fixed";
  const double noise = 0.5 * static_cast<double>(p.m) * p.sigma_w * p.sigma_w;
  const Index m = p.m;
  const double sigma = p.sigma_w;
  const std::uint64_t stream_seed = derive_seed(p.seed, 3);
  w.stream_factory = [=] { return std::make_unique<LassoStream>(a, gram, theta_bar, m, sigma, stream_seed); };
  w.f = [=](const Params& theta) { return 0.5 * (*a * (theta.values().col(0) - theta_bar)).squaredNorm() + noise; };
  w.grad_f = [=](const Params& theta) {
    return Gradient(Shape::vector(theta_bar.size()), Eigen::MatrixXd(*gram * (theta.values().col(0) - theta_bar)));
  };
  w.quadratic = QuadraticForm{gram, theta_bar, noise};
  if (p.r_factor > 1.0) {
    w.theta_star = Params(Shape::vector(p.n), theta_bar);
    w.f_star = noise;
  }
  return w;
}

Workload gen_random_design_lasso(const LassoParams& p) {
  check_lasso(p);
  const Eigen::VectorXd theta_bar = sparse_theta_bar(p);
  Workload w = lasso_common(p, theta_bar);
  w.name = "lasso-random";
  const double md = static_cast<double>(p.m);
  const double noise = 0.5 * md * p.sigma_w * p.sigma_w;
  const Index m = p.m;
  const double sigma = p.sigma_w;
  const std::uint64_t stream_seed = derive_seed(p.seed, 3);
  w.stream_factory = [=] { return std::make_unique<LassoStream>(nullptr, nullptr, theta_bar, m, sigma, stream_seed); };
  w.f = [=](const Params& theta) { return 0.5 * md * (theta.values().col(0) - theta_bar).squaredNorm() + noise; };
  w.grad_f = [=](const Params& theta) {
    return Gradient(Shape::vector(theta_bar.size()), Eigen::MatrixXd(md * (theta.values().col(0) - theta_bar)));
  };
  auto q = std::make_shared<const Eigen::MatrixXd>(md * Eigen::MatrixXd::Identity(p.n, p.n));
  w.quadratic = QuadraticForm{q, theta_bar, noise};
  if (p.r_factor > 1.0) {
    w.theta_star = Params(Shape::vector(p.n), theta_bar);
    w.f_star = noise;
  }
  return w;
}

// ---------------------------------------------------------------------------
// Matrix completion

namespace {

class McStream final : public SampleStream {
 public:
  McStream(std::shared_ptr<const Eigen::MatrixXd> theta_bar, Link link, double noise_var, std::uint64_t seed)
      : theta_bar_(std::move(theta_bar)), link_(link), noise_sd_(std::sqrt(noise_var)), rng_(seed) {}

  std::optional<Sample> next() override {
    std::uniform_int_distribution<Index> row(0, theta_bar_->rows() - 1);
    std::uniform_int_distribution<Index> col(0, theta_bar_->cols() - 1);
    McSample s;
    s.k = row(rng_);
    s.l = col(rng_);
    const double x = (*theta_bar_)(s.k, s.l);
    switch (link_) {
      case Link::Gaussian: s.y = x + noise_sd_ * std::normal_distribution<double>()(rng_); break;
      case Link::Logistic: s.y = std::bernoulli_distribution(link_mean(link_, x))(rng_) ? 1.0 : 0.0; break;
      case Link::Poisson:
        s.y = static_cast<double>(std::poisson_distribution<std::int64_t>(link_mean(link_, x))(rng_));
        break;
    }
    return Sample{s};
  }

 private:
  std::shared_ptr<const Eigen::MatrixXd> theta_bar_;
  Link link_;
  double noise_sd_;
  std::mt19937_64 rng_;
};

}  // namespace

Workload gen_mc(const McParams& p) {
  if (p.m1 < 1 || p.m2 < 1) throw ArgumentError("matrix completion needs m1, m2 >= 1");
  if (p.rank < 1 || p.rank > std::min(p.m1, p.m2)) throw ArgumentError("rank must be in [1, min(m1, m2)]");
  if (!(p.noise_var >= 0.0) || !std::isfinite(p.noise_var)) throw ArgumentError("noise_var must be >= 0");
  if (!(p.r_factor > 0.0) || !std::isfinite(p.r_factor)) throw ArgumentError("R_factor must be positive");

  std::mt19937_64 rng(derive_seed(p.seed, 1));
  const Eigen::MatrixXd u = gaussian_matrix(p.m1, p.rank, rng);
  const Eigen::MatrixXd v = gaussian_matrix(p.m2, p.rank, rng);
  auto theta_bar = std::make_shared<const Eigen::MatrixXd>(u * v.transpose());
  const double nuclear = Eigen::BDCSVD<Eigen::MatrixXd>(*theta_bar).singularValues().sum();

  Workload w;
  w.name = "mc";
  const Index m1 = p.m1, m2 = p.m2;
  const Link link = p.link;
  w.constraint = TraceNormBall{p.r_factor * nuclear, m1, m2, {}};
  w.oracle_factory = [=] { return GradientOracle::matrix_completion(m1, m2, link); };
  const std::uint64_t stream_seed = derive_seed(p.seed, 2);
  const double noise_var = p.noise_var;
  w.stream_factory = [=] { return std::make_unique<McStream>(theta_bar, link, noise_var, stream_seed); };

  const double cells = static_cast<double>(m1) * static_cast<double>(m2);
  // Mean parameters g'(theta_bar) and the expected loss E[g(theta_kl) - y theta_kl].
  auto mean_bar = std::make_shared<const Eigen::MatrixXd>(theta_bar->unaryExpr([link](double x) { return link_mean(link, x); }));
  if (link == Link::Gaussian) {
    w.f = [=](const Params& th) { return (th.values() - *theta_bar).squaredNorm() / (2.0 * cells) + 0.5 * noise_var; };
  } else {
    w.f = [=](const Params& th) {
      const Eigen::MatrixXd& x = th.values();
      double s = 0.0;
      for (Index j = 0; j < m2; ++j)
        for (Index i = 0; i < m1; ++i) s += log_partition(link, x(i, j)) - (*mean_bar)(i, j) * x(i, j);
      return s / cells;
    };
  }
  w.grad_f = [=](const Params& th) {
    Eigen::MatrixXd g = th.values().unaryExpr([link](double x) { return link_mean(link, x); }) - *mean_bar;
    return Gradient(Shape::matrix(m1, m2), Eigen::MatrixXd(g / cells));
  };
  if (p.r_factor > 1.0) {
    w.theta_star = Params(Shape::matrix(m1, m2), *theta_bar);
    w.f_star = w.f(*w.theta_star);
  }
  w.info["R"] = p.r_factor * nuclear;
  w.info["nuclear_norm"] = nuclear;
  w.long_running = cells > 1e5;
  return w;
}

// ---------------------------------------------------------------------------
// Classification

namespace {

Eigen::MatrixXd classifier(const ClassificationParams& p) {
  std::mt19937_64 rng(derive_seed(p.seed, 1));
  const Eigen::MatrixXd u = gaussian_matrix(p.m1, p.rank, rng);
  const Eigen::MatrixXd v = gaussian_matrix(p.m2, p.rank, rng);
  return u * v.transpose();
}

}  // namespace

std::shared_ptr<const std::vector<Sample>> classification_samples(const ClassificationParams& p) {
  const Eigen::MatrixXd theta_bar = classifier(p);
  const Eigen::Map<const Eigen::VectorXd> flat_bar(theta_bar.data(), theta_bar.size());

  std::mt19937_64 feat(derive_seed(p.seed, 2));
  std::mt19937_64 flips(derive_seed(p.seed, 3));
  std::normal_distribution<double> normal;
  std::bernoulli_distribution flip(p.flip_frac);
  auto out = std::make_shared<std::vector<Sample>>();
  out->reserve(static_cast<std::size_t>(p.n_train));
  for (std::int64_t i = 0; i < p.n_train; ++i) {
    Eigen::VectorXd x(p.m1 * p.m2);
    for (Index j = 0; j < x.size(); ++j) x(j) = normal(feat);
    int y = flat_bar.dot(x) >= 0.0 ? 1 : -1;
    if (flip(flips)) y = -y;
    out->push_back(LabeledVector{std::move(x), y});
  }
  return out;
}

Workload gen_classification(const ClassificationParams& p) {
  if (p.m1 < 1 || p.m2 < 1) throw ArgumentError("classification needs m1, m2 >= 1");
  if (p.rank < 1 || p.rank > std::min(p.m1, p.m2)) throw ArgumentError("rank must be in [1, min(m1, m2)]");
  if (p.n_train < 1) throw ArgumentError("n_train must be >= 1");
  if (!(p.flip_frac >= 0.0 && p.flip_frac < 1.0)) throw ArgumentError("flip_frac must be in [0, 1)");
  if (!(p.radius > 0.0) || !std::isfinite(p.radius)) throw ArgumentError("radius must be positive");

  auto samples = classification_samples(p);
  const Index dim = p.m1 * p.m2;
  const Shape shape = p.constraint == ClassConstraint::L1 ? Shape::vector(dim) : Shape::matrix(p.m1, p.m2);

  Workload w;
  w.name = "classification";
  if (p.constraint == ClassConstraint::L1) {
    w.constraint = L1Ball{p.radius, dim};
  } else {
    w.constraint = TraceNormBall{p.radius, p.m1, p.m2, {}};
  }
  const LossKind loss = p.loss;
  w.oracle_factory = [=] { return GradientOracle::replay(shape, loss); };
  w.stream_factory = [=] { return std::make_unique<VectorStream>(samples); };

  // The training objective: average loss over the full training set.
  auto full = std::make_shared<ReplayStats>(dim, loss);
  std::int64_t flipped = 0;
  for (const auto& s : *samples) full->update(std::get<LabeledVector>(s));
  const Eigen::MatrixXd theta_bar = classifier(p);
  const Eigen::Map<const Eigen::VectorXd> flat_bar(theta_bar.data(), theta_bar.size());
  for (const auto& s : *samples) {
    const auto& lv = std::get<LabeledVector>(s);
    const int clean = flat_bar.dot(std::get<Eigen::VectorXd>(lv.x)) >= 0.0 ? 1 : -1;
    if (clean != lv.y) ++flipped;
  }

  auto flat = [](const Params& th) {
    return Eigen::VectorXd(Eigen::Map<const Eigen::VectorXd>(th.values().data(), th.values().size()));
  };
  w.f = [=](const Params& th) { return full->loss(flat(th)); };
  w.grad_f = [=](const Params& th) {
    Eigen::VectorXd g = full->gradient(flat(th));
    Eigen::MatrixXd m = Eigen::Map<Eigen::MatrixXd>(g.data(), shape.rows, shape.cols);
    return Gradient(shape, std::move(m));
  };
  w.info["flipped"] = static_cast<double>(flipped);
  w.info["n_train"] = static_cast<double>(p.n_train);
  return w;
}

void set_radius(Workload& w, double radius) {
  if (!(radius > 0.0) || !std::isfinite(radius)) throw ArgumentError("radius must be positive");
  double norm = 0.0;
  if (auto* b = std::get_if<L1Ball>(&w.constraint)) {
    b->radius = radius;
    if (w.theta_star) norm = w.theta_star->values().cwiseAbs().sum();
  } else if (auto* t = std::get_if<TraceNormBall>(&w.constraint)) {
    t->radius = radius;
    if (w.theta_star) norm = Eigen::BDCSVD<Eigen::MatrixXd>(w.theta_star->values()).singularValues().sum();
  } else {
    throw UnsupportedError("vertex polytopes have no radius");
  }
  w.info.erase("r");
  w.info.erase("R");
  w.info["radius"] = radius;
  if (w.theta_star && norm > radius) {
    w.theta_star.reset();
    w.f_star.reset();
  }
}

// ---------------------------------------------------------------------------
// Reference optimum

namespace {

ReferenceResult reference_quadratic_l1(const QuadraticForm& qf, double radius, std::int64_t budget) {
  const Eigen::MatrixXd& q = *qf.q;
  const Index n = q.rows();
  const Eigen::VectorXd qc = q * qf.center;
  Eigen::VectorXd x = Eigen::VectorXd::Zero(n);
  Eigen::VectorXd qx = Eigen::VectorXd::Zero(n);

  ReferenceResult out;
  out.f_star = std::numeric_limits<double>::infinity();
  out.certificate = std::numeric_limits<double>::infinity();
  Eigen::VectorXd best = x;
  for (std::int64_t k = 1; k <= budget; ++k) {
    if (k % 4096 == 0) qx.noalias() = q * x;  // bound drift of the incremental product
    const Eigen::VectorXd g = qx - qc;
    const double f = 0.5 * (x - qf.center).dot(g) + qf.offset;
    if (f < out.f_star) {
      out.f_star = f;
      best = x;
    }
    const SignedBasis a = lmo_l1(g, radius);
    const double ga = a.sign * a.radius * g(a.index);
    out.certificate = std::min(out.certificate, g.dot(x) - ga);
    const double gamma = 2.0 / static_cast<double>(k + 1);
    x *= 1.0 - gamma;
    x(a.index) += gamma * a.sign * a.radius;
    qx *= 1.0 - gamma;
    qx += (gamma * a.sign * a.radius) * q.col(a.index);
    out.iterations = k;
  }
  qx.noalias() = q * x;
  const double f_last = 0.5 * (x - qf.center).dot(qx - qc) + qf.offset;
  if (f_last < out.f_star) {
    out.f_star = f_last;
    best = x;
  }
  out.theta = Params(Shape::vector(n), best);
  return out;
}

}  // namespace

ReferenceResult reference_solve(const Workload& w, std::int64_t budget) {
  if (!w.f || !w.grad_f) throw ArgumentError("reference_solve needs an exact objective and gradient");
  if (budget < 1) throw ArgumentError("reference_solve budget must be >= 1");
  if (w.quadratic && std::holds_alternative<L1Ball>(w.constraint)) {
    return reference_quadratic_l1(*w.quadratic, std::get<L1Ball>(w.constraint).radius, budget);
  }

  const Shape shape = w.shape();
  Params theta = Params::zeros(shape);
  ReferenceResult out;
  out.f_star = std::numeric_limits<double>::infinity();
  out.certificate = std::numeric_limits<double>::infinity();
  for (std::int64_t k = 1; k <= budget; ++k) {
    const double f = w.f(theta);
    if (f < out.f_star) {
      out.f_star = f;
      out.theta = theta;
    }
    const Gradient g = w.grad_f(theta);
    const LmoOutput a = lmo(w.constraint, g);
    out.certificate = std::min(out.certificate, g.dot(theta) - dot(a.atom, g));
    const double gamma = 2.0 / static_cast<double>(k + 1);
    theta.values() *= 1.0 - gamma;
    add_scaled(theta.values(), a.atom, gamma);
    out.iterations = k;
  }
  const double f_last = w.f(theta);
  if (f_last < out.f_star) {
    out.f_star = f_last;
    out.theta = theta;
  }
  return out;
}

void attach_reference(Workload& w, std::int64_t budget) {
  const ReferenceResult r = reference_solve(w, budget);
  w.f_star = r.f_star;
  w.f_star_is_reference = true;
  w.f_star_certificate = r.certificate;
}

}  // namespace ofw
