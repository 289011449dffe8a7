#include "hifloc/optimizers.hpp"

#include "hifloc/error.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

namespace hifloc::optim {

namespace {

double dot(std::span<const double> a, std::span<const double> b)
{
    return std::inner_product(a.begin(), a.end(), b.begin(), 0.0);
}

double norm(std::span<const double> a) { return std::sqrt(dot(a, a)); }

// w_out = w + alpha * d
void axpy(std::span<const double> w, double alpha, std::span<const double> d, std::span<double> out)
{
    for (std::size_t i = 0; i < w.size(); ++i)
        out[i] = w[i] + alpha * d[i];
}

void require_finite(double loss, const char* where)
{
    if (!std::isfinite(loss))
        throw Error(Errc::NonFiniteLoss, std::string("loss diverged in ") + where);
}

// Shared epoch bookkeeping: trace, observer, and termination tests.
class EpochLoop {
public:
    EpochLoop(const StopCriteria& stop, const EpochObserver& observer) : stop_(stop), observer_(observer) {}

    // Checked before every epoch.
    bool done(double loss, double grad_norm)
    {
        if (loss <= stop_.goal)
            return finish(StopReason::Goal);
        if (grad_norm < stop_.gradient_floor)
            return finish(StopReason::GradientFloor);
        if (trace.epochs >= stop_.max_epochs)
            return finish(StopReason::MaxEpochs);
        return false;
    }

    // Returns true when the observer asks to stop.
    bool record(double loss, std::span<const double> w, bool moved)
    {
        ++trace.epochs;
        trace.losses.push_back(loss);
        trace.moved.push_back(moved);
        if (observer_ && observer_(trace.epochs, loss, w, moved))
            return finish(StopReason::Validation);
        return false;
    }

    Trace trace;

private:
    bool finish(StopReason reason)
    {
        trace.reason = reason;
        return true;
    }

    StopCriteria stop_;
    const EpochObserver& observer_;
};

void check_dimension(const Objective& objective, const std::vector<double>& w)
{
    if (w.size() != objective.dimension())
        throw Error(Errc::DimensionMismatch, "parameter vector does not match objective dimension");
}

} // namespace

std::string_view stop_reason_name(StopReason reason)
{
    switch (reason) {
    case StopReason::Goal: return "goal";
    case StopReason::MaxEpochs: return "max_epochs";
    case StopReason::Validation: return "validation";
    case StopReason::GradientFloor: return "gradient_floor";
    }
    return "max_epochs";
}

Trace minimize_gdx(Objective& objective, std::vector<double>& w, const StopCriteria& stop,
                   const GdxOptions& options, const EpochObserver& observer)
{
    check_dimension(objective, w);
    const auto n = w.size();
    std::vector<double> g(n), g_trial(n), w_trial(n), step(n), step_prev(n, 0.0);
    double loss = objective.value_and_gradient(w, g);
    require_finite(loss, "GDX");
    double lr = options.learning_rate;
    const double mu = options.momentum;

    EpochLoop loop(stop, observer);
    while (!loop.done(loss, norm(g))) {
        for (std::size_t i = 0; i < n; ++i) {
            step[i] = mu * step_prev[i] - (1.0 - mu) * lr * g[i];
            w_trial[i] = w[i] + step[i];
        }
        const double trial = objective.value_and_gradient(w_trial, g_trial);
        require_finite(trial, "GDX");

        bool moved = false;
        if (trial > options.max_loss_increase * loss) {
            lr *= options.lr_decrease;
            std::fill(step_prev.begin(), step_prev.end(), 0.0);
        } else {
            if (trial < loss)
                lr *= options.lr_increase;
            w.swap(w_trial);
            g.swap(g_trial);
            step_prev.swap(step);
            loss = trial;
            moved = true;
        }
        loop.trace.learning_rates.push_back(lr);
        if (loop.record(loss, w, moved))
            break;
    }
    return loop.trace;
}

Trace minimize_scg(Objective& objective, std::vector<double>& w, const StopCriteria& stop,
                   const ScgOptions& options, const EpochObserver& observer)
{
    check_dimension(objective, w);
    const auto n = w.size();
    std::vector<double> g(n), r(n), p(n), s(n), g_probe(n), w_probe(n), r_new(n);

    double loss = objective.value_and_gradient(w, g);
    require_finite(loss, "SCG");
    for (std::size_t i = 0; i < n; ++i)
        r[i] = p[i] = -g[i];

    double lambda = options.lambda;
    double lambda_bar = 0.0;
    double delta = 0.0;
    bool success = true;
    long iteration = 0;

    EpochLoop loop(stop, observer);
    while (!loop.done(loss, norm(r))) {
        ++iteration;
        if (dot(p, r) <= 0.0) {
            p = r;
            success = true;
        }
        const double p2 = dot(p, p);
        if (success) {
            // Second-order information from a finite difference of gradients.
            const double sigma_k = options.sigma / std::sqrt(p2);
            axpy(w, sigma_k, p, w_probe);
            objective.value_and_gradient(w_probe, g_probe);
            for (std::size_t i = 0; i < n; ++i)
                s[i] = (g_probe[i] - g[i]) / sigma_k;
            delta = dot(p, s);
        }

        delta += (lambda - lambda_bar) * p2;
        if (delta <= 0.0) {
            // Force the scaled Hessian to be positive definite.
            lambda_bar = 2.0 * (lambda - delta / p2);
            delta = -delta + lambda * p2;
            lambda = lambda_bar;
        }

        const double mu = dot(p, r);
        const double alpha = mu / delta;
        axpy(w, alpha, p, w_probe);
        const double trial = objective.value(w_probe);
        double comparison = 2.0 * delta * (loss - trial) / (mu * mu);
        if (!std::isfinite(comparison))
            comparison = -1.0;

        bool moved = false;
        if (comparison >= 0.0) {
            w.swap(w_probe);
            loss = objective.value_and_gradient(w, g);
            require_finite(loss, "SCG");
            for (std::size_t i = 0; i < n; ++i)
                r_new[i] = -g[i];
            lambda_bar = 0.0;
            success = true;
            moved = true;
            if (iteration % static_cast<long>(n) == 0) {
                p = r_new;
            } else {
                const double beta = (dot(r_new, r_new) - dot(r_new, r)) / mu;
                for (std::size_t i = 0; i < n; ++i)
                    p[i] = r_new[i] + beta * p[i];
            }
            r.swap(r_new);
            if (comparison >= 0.75)
                lambda *= 0.25;
        } else {
            lambda_bar = lambda;
            success = false;
        }
        if (comparison < 0.25)
            lambda += delta * (1.0 - comparison) / p2;

        if (loop.record(loss, w, moved))
            break;
    }
    return loop.trace;
}

bool powell_beale_restart(std::span<const double> g_prev, std::span<const double> g, double threshold)
{
    return std::abs(dot(g_prev, g)) >= threshold * dot(g, g);
}

std::vector<double> cgb_direction(std::span<const double> g_prev, std::span<const double> g,
                                  std::span<const double> d_prev, double threshold)
{
    std::vector<double> d(g.size());
    if (powell_beale_restart(g_prev, g, threshold)) {
        for (std::size_t i = 0; i < g.size(); ++i)
            d[i] = -g[i];
        return d;
    }
    const double beta = (dot(g, g) - dot(g, g_prev)) / dot(g_prev, g_prev);
    for (std::size_t i = 0; i < g.size(); ++i)
        d[i] = -g[i] + beta * d_prev[i];
    return d;
}

LineSearchResult wolfe_line_search(Objective& objective, std::span<const double> w, double value,
                                   std::span<const double> g, std::span<const double> d, double alpha0,
                                   const CgbOptions& options, std::span<double> grad)
{
    const auto n = w.size();
    const double dphi0 = dot(g, d);
    std::vector<double> w_trial(n);
    LineSearchResult result;

    struct Probe {
        double alpha;
        double phi;
        double dphi;
    };
    auto evaluate = [&](double alpha) {
        axpy(w, alpha, d, w_trial);
        ++result.evaluations;
        const double phi = objective.value_and_gradient(w_trial, grad);
        return Probe{alpha, phi, std::isfinite(phi) ? dot(grad, d) : 0.0};
    };
    // Once phi(alpha) and phi(0) agree to rounding the Armijo test is noise;
    // fall back on its derivative form (approximate Wolfe, Hager-Zhang).
    const double noise = 1e-12 * std::abs(value);
    auto sufficient = [&](const Probe& p) {
        if (!std::isfinite(p.phi))
            return false;
        return p.phi <= value + options.c1 * p.alpha * dphi0 ||
               (p.phi <= value + noise && p.dphi <= (2.0 * options.c1 - 1.0) * dphi0);
    };
    auto curvature = [&](const Probe& p) { return std::abs(p.dphi) <= -options.c2 * dphi0; };
    auto accept = [&](const Probe& p) {
        result.ok = true;
        result.alpha = p.alpha;
        result.value = p.phi;
        return result;
    };
    // A step accepted without bracketing gets one secant correction from the
    // slopes at 0 and alpha, kept only if it is acceptable and lower.
    auto refine = [&](const Probe& p) {
        const double a = p.alpha * dphi0 / (dphi0 - p.dphi);
        if (!(std::isfinite(a) && a > 0.0 && std::abs(a - p.alpha) > 1e-3 * p.alpha) ||
            result.evaluations >= options.max_line_search_evaluations)
            return accept(p);
        const std::vector<double> kept(grad.begin(), grad.end());
        const auto q = evaluate(a);
        if (sufficient(q) && curvature(q) && q.phi <= p.phi)
            return accept(q);
        std::copy(kept.begin(), kept.end(), grad.begin());
        return accept(p);
    };

    auto zoom = [&](Probe lo, Probe hi) -> LineSearchResult {
        while (result.evaluations < options.max_line_search_evaluations) {
            const double h = hi.alpha - lo.alpha;
            double alpha = lo.alpha + 0.5 * h;
            if (std::isfinite(hi.phi)) {
                // Minimizer of the quadratic through phi(lo), phi'(lo), phi(hi).
                const double curv = (hi.phi - lo.phi - lo.dphi * h) / (h * h);
                if (curv > 0.0) {
                    const double q = lo.alpha - lo.dphi / (2.0 * curv);
                    const double a = std::min(lo.alpha, hi.alpha);
                    const double b = std::max(lo.alpha, hi.alpha);
                    const double margin = 1e-3 * (b - a);
                    if (q > a && q < b)
                        alpha = std::clamp(q, a + margin, b - margin);
                }
            }
            const auto probe = evaluate(alpha);
            if (!sufficient(probe) || probe.phi >= lo.phi) {
                hi = probe;
            } else {
                if (curvature(probe))
                    return accept(probe);
                if (probe.dphi * (hi.alpha - lo.alpha) >= 0.0)
                    hi = lo;
                lo = probe;
            }
        }
        return result;
    };

    if (!(dphi0 < 0.0))
        return result;

    Probe prev{0.0, value, dphi0};
    double alpha = alpha0;
    while (result.evaluations < options.max_line_search_evaluations) {
        const auto probe = evaluate(alpha);
        if (!sufficient(probe) || (result.evaluations > 1 && probe.phi >= prev.phi))
            return zoom(prev, probe);
        if (curvature(probe))
            return refine(probe);
        if (probe.dphi >= 0.0)
            return zoom(probe, prev);
        prev = probe;
        alpha *= 2.0;
    }
    return result;
}

Trace minimize_cgb(Objective& objective, std::vector<double>& w, const StopCriteria& stop,
                   const CgbOptions& options, const EpochObserver& observer)
{
    check_dimension(objective, w);
    const auto n = w.size();
    std::vector<double> g(n), g_new(n), d(n);
    double loss = objective.value_and_gradient(w, g);
    require_finite(loss, "CGB");
    for (std::size_t i = 0; i < n; ++i)
        d[i] = -g[i];

    double prev_slope = 0.0;
    double prev_alpha = 0.0;

    EpochLoop loop(stop, observer);
    while (!loop.done(loss, norm(g))) {
        bool restarted = false;
        if (dot(g, d) >= 0.0) {
            for (std::size_t i = 0; i < n; ++i)
                d[i] = -g[i];
            restarted = true;
        }

        LineSearchResult step;
        for (int attempt = 0; attempt < 2; ++attempt) {
            const double slope = dot(g, d);
            double alpha0 = 1.0 / norm(d);
            if (loop.trace.epochs > 0) {
                // Assume the first-order change matches the previous iteration.
                const double guess = prev_alpha * prev_slope / slope;
                if (std::isfinite(guess) && guess > 0.0)
                    alpha0 = guess;
            }
            step = wolfe_line_search(objective, w, loss, g, d, alpha0, options, g_new);
            if (step.ok)
                break;
            if (attempt == 1 || restarted)
                throw Error(Errc::LineSearchFailure,
                            "no acceptable step within " + std::to_string(options.max_line_search_evaluations) +
                                " evaluations");
            for (std::size_t i = 0; i < n; ++i)
                d[i] = -g[i];
            restarted = true;
        }

        prev_slope = dot(g, d);
        prev_alpha = step.alpha;
        for (std::size_t i = 0; i < n; ++i)
            w[i] += step.alpha * d[i];
        loss = step.value;
        require_finite(loss, "CGB");

        const bool reset = powell_beale_restart(g, g_new, options.restart_threshold);
        d = cgb_direction(g, g_new, d, options.restart_threshold);
        g.swap(g_new);
        loop.trace.restarted.push_back(reset);
        if (loop.record(loss, w, true))
            break;
    }
    return loop.trace;
}

} // namespace hifloc::optim
