#pragma once

// Slow, deliberately naive reference computations. Tests and the verify
// suites compare the library against these; none of them reuse library code
// paths beyond the plain data types.

#include <cstdint>
#include <functional>
#include <random>
#include <vector>

#include "ofw/core.hpp"
#include "ofw/gradients.hpp"
#include "ofw/lmo.hpp"

namespace ofw::oracles {

/// Scans all 2n signed basis atoms, i ascending and sign -1 before +1,
/// keeping the first strict minimum of <a, g>.
SignedBasis brute_l1(const Eigen::VectorXd& g, double r);

/// Index of the first column of `vertices` minimizing <v, g>.
Index brute_vertices(const Eigen::VectorXd& g, const Eigen::MatrixXd& vertices);

/// Top singular value from a dense Jacobi SVD.
double dense_top_sigma(const Eigen::MatrixXd& m);

/// min over rank-one atoms -R u v^T of <atom, G>, i.e. -R sigma_1(G), from a dense SVD.
double dense_trace_lmo_value(const Eigen::MatrixXd& g, double radius);

/// t^-1 sum_s A_s^T (A_s theta - Y_s).
Eigen::VectorXd naive_lasso_grad(const std::vector<LassoSample>& samples, const Eigen::VectorXd& theta);

/// t^-1 sum_s (g'(theta_ks ls) - y_s) e_ks e_ls^T, dense.
Eigen::MatrixXd naive_mc_grad(const std::vector<McSample>& samples, Link link, const Eigen::MatrixXd& theta);

/// t^-1 sum_s grad f_s(theta) written out with plain exp, for moderate |<theta, x>|.
Eigen::VectorXd naive_replay_grad(const std::vector<LabeledVector>& samples, LossKind kind, const Eigen::VectorXd& theta,
                                  double steepness = kSigmoidSteepness);
double naive_replay_loss(const std::vector<LabeledVector>& samples, LossKind kind, const Eigen::VectorXd& theta,
                         double steepness = kSigmoidSteepness);

/// Central difference (f(x + h d) - f(x - h d)) / 2h.
double directional_fd(const std::function<double(const Eigen::VectorXd&)>& f, const Eigen::VectorXd& x,
                      const Eigen::VectorXd& d, double h = 1e-6);

/// Straight-line O-FW with gamma_t = k / (k + t - 1) on f(x) = 1/2 x^T Q x - c^T x
/// over conv(columns of `vertices`). Returns theta_1 .. theta_{steps+1}.
std::vector<Eigen::VectorXd> reference_ofw_quadratic(const Eigen::MatrixXd& q, const Eigen::VectorXd& c,
                                                     const Eigen::MatrixXd& vertices, int k, int steps);

/// Random convex combination of a few random atoms of `c`.
Eigen::MatrixXd random_feasible(const ConstraintSet& c, std::mt19937_64& rng);

}  // namespace ofw::oracles
