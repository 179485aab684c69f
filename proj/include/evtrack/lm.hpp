#pragma once

#include <Eigen/Cholesky>
#include <Eigen/Core>

#include <cmath>
#include <functional>
#include <vector>

namespace evtrack {

// Dense Levenberg-Marquardt with a central-difference numeric Jacobian.
// Damping starts at 1e-3, multiplied by 10 on a rejected step and divided by
// 10 on an accepted one; stops when the relative cost change drops below
// relative_tol or after max_iterations.
struct LmOptions {
    double initial_lambda = 1e-3;
    int max_iterations = 100;
    double relative_tol = 1e-10;
    double jacobian_step = 1e-6;
};

struct LmResult {
    Eigen::VectorXd params;
    double initial_cost = 0.0;
    double final_cost = 0.0;
    int iterations = 0;
    bool converged = false;
    std::vector<double> cost_trace;  // cost after each accepted step
};

inline LmResult levenberg_marquardt(const std::function<Eigen::VectorXd(const Eigen::VectorXd&)>& residual,
                                    const Eigen::VectorXd& x0, const LmOptions& opt = {}) {
    const auto cost_of = [](const Eigen::VectorXd& r) { return r.squaredNorm(); };

    LmResult res;
    res.params = x0;
    Eigen::VectorXd r = residual(x0);
    double cost = cost_of(r);
    res.initial_cost = cost;
    res.cost_trace.push_back(cost);

    const int n = int(x0.size());
    double lambda = opt.initial_lambda;

    for (int it = 0; it < opt.max_iterations; ++it) {
        res.iterations = it + 1;

        Eigen::MatrixXd jac(r.size(), n);
        for (int c = 0; c < n; ++c) {
            const double h = opt.jacobian_step * std::max(1.0, std::abs(res.params[c]));
            Eigen::VectorXd xp = res.params, xm = res.params;
            xp[c] += h;
            xm[c] -= h;
            jac.col(c) = (residual(xp) - residual(xm)) / (2.0 * h);
        }
        const Eigen::MatrixXd jtj = jac.transpose() * jac;
        const Eigen::VectorXd g = jac.transpose() * r;

        bool accepted = false;
        while (lambda < 1e14) {
            Eigen::MatrixXd damped = jtj;
            damped.diagonal() += lambda * jtj.diagonal().cwiseMax(1e-12);
            const Eigen::VectorXd step = damped.ldlt().solve(-g);
            const Eigen::VectorXd candidate = res.params + step;
            const Eigen::VectorXd rc = residual(candidate);
            const double cc = cost_of(rc);
            if (std::isfinite(cc) && cc < cost) {
                const double rel = (cost - cc) / std::max(cost, 1e-300);
                res.params = candidate;
                r = rc;
                cost = cc;
                res.cost_trace.push_back(cost);
                lambda = std::max(lambda / 10.0, 1e-12);
                accepted = true;
                if (rel < opt.relative_tol) {
                    res.converged = true;
                    res.final_cost = cost;
                    return res;
                }
                break;
            }
            lambda *= 10.0;
        }
        if (!accepted) {
            res.converged = true;  // no descent direction left: at a minimum
            break;
        }
    }
    res.final_cost = cost;
    return res;
}

}  // namespace evtrack
