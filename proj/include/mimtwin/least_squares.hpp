#pragma once

#include <Eigen/Dense>

#include <functional>
#include <vector>

namespace mimtwin::fit {

// Model evaluation: fills residuals (model - data) and, when jacobian is not
// null, d(model)/d(params). Returns false if params are outside the model's
// domain; the step is then rejected.
using ResidualFunction =
    std::function<bool(const Eigen::VectorXd& params, Eigen::VectorXd& residuals, Eigen::MatrixXd* jacobian)>;

// Per-residual weights evaluated at the current iterate and held fixed while a
// step is tried (iteratively reweighted least squares).
using WeightFunction = std::function<Eigen::VectorXd(const Eigen::VectorXd& params)>;

struct SolverOptions {
    int max_iterations = 200;
    double step_tolerance = 1e-10; // on |dp_i| / (|p_i| + scale_i)
    Eigen::VectorXd scale;         // optional, defaults to zero
};

struct SolverResult {
    Eigen::VectorXd params;
    Eigen::MatrixXd covariance; // s^2 (J^T W J)^-1 with s^2 the reduced chi^2
    double weighted_rss = 0.0;
    int iterations = 0;
    bool converged = false;
};

// Levenberg-Marquardt damped Gauss-Newton.
SolverResult solve(const ResidualFunction& residual, const Eigen::VectorXd& initial, Eigen::Index n_residuals,
                   const SolverOptions& options = {}, const WeightFunction& weights = {});

// Forward-difference Jacobian wrapper for models without analytic derivatives.
ResidualFunction with_numeric_jacobian(std::function<bool(const Eigen::VectorXd&, Eigen::VectorXd&)> model,
                                       Eigen::VectorXd step);

} // namespace mimtwin::fit
