#include "mimtwin/least_squares.hpp"

#include "mimtwin/errors.hpp"

#include <cmath>
#include <limits>

namespace mimtwin::fit {

namespace {

double weighted_cost(const Eigen::VectorXd& r, const Eigen::VectorXd& w)
{
    return w.size() == 0 ? r.squaredNorm() : (w.array() * r.array().square()).sum();
}

} // namespace

SolverResult solve(const ResidualFunction& residual, const Eigen::VectorXd& initial, Eigen::Index n_residuals,
                   const SolverOptions& options, const WeightFunction& weights)
{
    const Eigen::Index n_params = initial.size();
    if (n_residuals <= n_params)
        throw InputError("least squares: need more residuals than parameters");
    const Eigen::VectorXd scale =
        options.scale.size() == n_params ? options.scale : Eigen::VectorXd::Zero(n_params);

    SolverResult result;
    result.params = initial;
    Eigen::VectorXd r(n_residuals);
    Eigen::MatrixXd jac(n_residuals, n_params);
    if (!residual(result.params, r, &jac) || !r.allFinite())
        throw InputError("least squares: model cannot be evaluated at the initial guess");

    Eigen::VectorXd w = weights ? weights(result.params) : Eigen::VectorXd();
    double cost = weighted_cost(r, w);
    double lambda = 1e-3;
    Eigen::VectorXd trial_r(n_residuals);

    for (int it = 0; it < options.max_iterations; ++it) {
        result.iterations = it + 1;
        Eigen::MatrixXd jtw = w.size() == 0 ? Eigen::MatrixXd(jac.transpose())
                                            : Eigen::MatrixXd(jac.transpose() * w.asDiagonal());
        const Eigen::MatrixXd normal = jtw * jac;
        const Eigen::VectorXd gradient = jtw * r;

        bool accepted = false;
        Eigen::VectorXd step;
        while (lambda < 1e16) {
            Eigen::MatrixXd damped = normal;
            for (Eigen::Index i = 0; i < n_params; ++i)
                damped(i, i) += lambda * std::max(normal(i, i), 1e-300);
            step = damped.ldlt().solve(-gradient);
            const Eigen::VectorXd trial = result.params + step;
            if (step.allFinite() && residual(trial, trial_r, nullptr) && trial_r.allFinite()) {
                const double trial_cost = weighted_cost(trial_r, w);
                if (trial_cost <= cost) {
                    result.params = trial;
                    accepted = true;
                    lambda = std::max(lambda * 0.3, 1e-12);
                    break;
                }
            }
            lambda *= 10.0;
        }
        if (!accepted) {
            // No descent direction left: the current point is a minimum to
            // machine precision under the current weights.
            result.converged = true;
            break;
        }

        residual(result.params, r, &jac);
        if (weights)
            w = weights(result.params);
        cost = weighted_cost(r, w);

        double rel = 0.0;
        for (Eigen::Index i = 0; i < n_params; ++i)
            rel = std::max(rel, std::abs(step(i)) / (std::abs(result.params(i)) + scale(i)));
        if (rel < options.step_tolerance) {
            result.converged = true;
            break;
        }
    }

    residual(result.params, r, &jac);
    if (weights)
        w = weights(result.params);
    result.weighted_rss = weighted_cost(r, w);
    const Eigen::MatrixXd jtw = w.size() == 0 ? Eigen::MatrixXd(jac.transpose())
                                              : Eigen::MatrixXd(jac.transpose() * w.asDiagonal());
    const Eigen::MatrixXd normal = jtw * jac;
    const double dof = static_cast<double>(n_residuals - n_params);
    // Jacobi scaling keeps parameters of very different magnitude invertible.
    const Eigen::VectorXd diag = normal.diagonal();
    const bool positive = (diag.array() > 0.0).all() && diag.allFinite();
    const Eigen::VectorXd inv_sqrt = positive ? Eigen::VectorXd(diag.cwiseSqrt().cwiseInverse()) : diag;
    const Eigen::FullPivLU<Eigen::MatrixXd> lu(inv_sqrt.asDiagonal() * normal * inv_sqrt.asDiagonal());
    if (positive && lu.isInvertible())
        result.covariance = inv_sqrt.asDiagonal() * lu.inverse() * inv_sqrt.asDiagonal() * (result.weighted_rss / dof);
    else
        result.covariance = Eigen::MatrixXd::Constant(n_params, n_params, std::numeric_limits<double>::infinity());
    return result;
}

ResidualFunction with_numeric_jacobian(std::function<bool(const Eigen::VectorXd&, Eigen::VectorXd&)> model,
                                       Eigen::VectorXd step)
{
    return [model = std::move(model), step = std::move(step)](const Eigen::VectorXd& p, Eigen::VectorXd& r,
                                                               Eigen::MatrixXd* jac) {
        if (!model(p, r))
            return false;
        if (jac == nullptr)
            return true;
        Eigen::VectorXd shifted = p;
        Eigen::VectorXd r_shift(r.size());
        for (Eigen::Index i = 0; i < p.size(); ++i) {
            const double h = step(i) != 0.0 ? step(i) : 1e-7 * std::max(std::abs(p(i)), 1e-300);
            shifted(i) = p(i) + h;
            if (!model(shifted, r_shift)) {
                shifted(i) = p(i) - h;
                if (!model(shifted, r_shift))
                    return false;
                jac->col(i) = (r - r_shift) / h;
            } else {
                jac->col(i) = (r_shift - r) / h;
            }
            shifted(i) = p(i);
        }
        return true;
    };
}

} // namespace mimtwin::fit
