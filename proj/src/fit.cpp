#include <algorithm>
#include <cmath>
#include <limits>
#include <string>
#include <vector>

#include "qzeno/error.hpp"
#include "qzeno/zeno.hpp"

namespace qzeno {
namespace {

constexpr unsigned kMaxIterations = 200;

struct Eval {
    double chi2 = 0.0;
    double grad = 0.0;     // sum w J r
    double hessian = 0.0;  // sum w J^2
};

// r = p - model, J = d model / dT = 2 t^2 / (N T^3) (1 - x)^(N-1), x = t^2/(N T)^2.
Eval evaluate(std::span<const SurvivalPoint> pts, std::span<const double> w, unsigned n, double T) {
    Eval e;
    for (std::size_t i = 0; i < pts.size(); ++i) {
        const double t = pts[i].t_us;
        const double x = (t / (n * T)) * (t / (n * T));
        const double model = std::pow(1.0 - x, static_cast<double>(n));
        const double jac = 2.0 * t * t / (n * T * T * T) * std::pow(1.0 - x, static_cast<double>(n) - 1.0);
        const double r = pts[i].p - model;
        e.chi2 += w[i] * r * r;
        e.grad += w[i] * jac * r;
        e.hessian += w[i] * jac * jac;
    }
    return e;
}

}  // namespace

ZenoFit fit_zeno_time(std::span<const SurvivalPoint> points, unsigned n) {
    if (n == 0) throw InvalidArgument("fit_zeno_time: N must be >= 1");
    if (points.size() < 3) throw InvalidArgument("fit_zeno_time: at least three points are required");

    double t_max = 0.0;
    double min_positive_se = std::numeric_limits<double>::infinity();
    for (const SurvivalPoint& pt : points) {
        if (!std::isfinite(pt.t_us) || pt.t_us < 0.0) throw InvalidArgument("fit_zeno_time: times must be finite and >= 0");
        if (!std::isfinite(pt.p)) throw InvalidArgument("fit_zeno_time: non-finite survival value");
        if (!std::isfinite(pt.std_error) || pt.std_error < 0.0) {
            throw InvalidArgument("fit_zeno_time: degenerate weights (negative or non-finite stderr)");
        }
        if (pt.std_error > 0.0) min_positive_se = std::min(min_positive_se, pt.std_error);
        t_max = std::max(t_max, pt.t_us);
    }
    const bool weighted = std::isfinite(min_positive_se);
    std::vector<double> w(points.size(), 1.0);
    if (weighted) {
        for (std::size_t i = 0; i < points.size(); ++i) {
            const double se = std::max(points[i].std_error, min_positive_se);
            w[i] = 1.0 / (se * se);
        }
    }

    // Two-point quadratic estimate at the earliest decayed point:
    // 1 - p ~ t^2 / (N T^2).
    const SurvivalPoint* first = nullptr;
    for (const SurvivalPoint& pt : points) {
        if (pt.t_us > 0.0 && pt.p < 1.0 && (!first || pt.t_us < first->t_us)) first = &pt;
    }
    if (!first) throw DomainError("fit_zeno_time: no point shows decay");
    const double T_floor = t_max / n;  // model undefined at or below
    double T = first->t_us / std::sqrt(n * (1.0 - first->p));
    if (!(T > T_floor * (1.0 + 1e-9))) T = 2.0 * T_floor;

    double damping = 1e-3;
    Eval cur = evaluate(points, w, n, T);
    ZenoFit fit;
    bool converged = false;
    for (unsigned it = 1; it <= kMaxIterations; ++it) {
        fit.iterations = it;
        if (!(cur.hessian > 0.0)) throw ConvergenceError("fit_zeno_time: vanishing Jacobian");
        const double step = cur.grad / (cur.hessian * (1.0 + damping));
        const double T_new = T + step;
        if (!(T_new > T_floor)) {
            damping *= 10.0;
            continue;
        }
        const Eval next = evaluate(points, w, n, T_new);
        if (next.chi2 <= cur.chi2) {
            T = T_new;
            cur = next;
            damping = std::max(damping / 10.0, 1e-12);
            converged = std::abs(step) <= 1e-12 * T;
        } else {
            damping *= 10.0;
            // No downhill step even for a vanishing increment: at the minimum.
            converged = std::abs(step) <= 1e-12 * T;
        }
        if (converged) break;
    }
    if (!converged) {
        throw ConvergenceError("fit_zeno_time: no convergence after " + std::to_string(kMaxIterations) +
                               " iterations");
    }

    fit.T_us = T;
    fit.residual_norm = std::sqrt(cur.chi2);
    double variance = 1.0 / cur.hessian;
    if (!weighted && points.size() > 1) variance *= cur.chi2 / static_cast<double>(points.size() - 1);
    fit.sigma_us = std::sqrt(variance);
    return fit;
}

}  // namespace qzeno
