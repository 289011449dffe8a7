#pragma once

#include <cstddef>
#include <functional>
#include <span>
#include <string_view>
#include <vector>

namespace hifloc::optim {

/// Differentiable scalar objective over a flat parameter vector.
class Objective {
public:
    virtual ~Objective() = default;

    virtual std::size_t dimension() const = 0;
    virtual double value(std::span<const double> w) = 0;
    /// Writes the gradient into `grad` and returns the value.
    virtual double value_and_gradient(std::span<const double> w, std::span<double> grad) = 0;
};

enum class StopReason { Goal, MaxEpochs, Validation, GradientFloor };

std::string_view stop_reason_name(StopReason reason);

struct StopCriteria {
    int max_epochs = 1000;
    double goal = 0.0;
    double gradient_floor = 1e-10;
};

/// Called after every epoch. `moved` is false when the epoch left the
/// parameters untouched (rejected GDX step, unsuccessful SCG step).
/// Returning true stops training with StopReason::Validation.
using EpochObserver = std::function<bool(int epoch, double loss, std::span<const double> w, bool moved)>;

struct Trace {
    std::vector<double> losses;          // loss after each epoch
    std::vector<double> learning_rates;  // GDX only: rate in force after each epoch
    std::vector<bool> moved;
    std::vector<bool> restarted;         // CGB only: direction reset to steepest descent
    StopReason reason = StopReason::MaxEpochs;
    int epochs = 0;
};

struct GdxOptions {
    double learning_rate = 0.05;
    double momentum = 0.9;
    double lr_increase = 1.05;
    double lr_decrease = 0.7;
    double max_loss_increase = 1.04;
};

struct ScgOptions {
    double sigma = 5e-5;
    double lambda = 5e-7;
};

struct CgbOptions {
    double c1 = 1e-4;
    double c2 = 0.1;
    double restart_threshold = 0.2;
    int max_line_search_evaluations = 20;
};

/// Gradient descent with momentum and an adaptive learning rate. A step that
/// raises the loss by more than `max_loss_increase` is undone, the rate shrinks
/// and the momentum memory is cleared; a step that lowers it grows the rate.
Trace minimize_gdx(Objective& objective, std::vector<double>& w, const StopCriteria& stop,
                   const GdxOptions& options, const EpochObserver& observer = {});

/// Moller's scaled conjugate gradient.
Trace minimize_scg(Objective& objective, std::vector<double>& w, const StopCriteria& stop,
                   const ScgOptions& options, const EpochObserver& observer = {});

/// Polak-Ribiere conjugate gradient with Powell-Beale restarts and a strong
/// Wolfe line search.
Trace minimize_cgb(Objective& objective, std::vector<double>& w, const StopCriteria& stop,
                   const CgbOptions& options, const EpochObserver& observer = {});

/// Powell-Beale test: successive gradients have lost orthogonality.
bool powell_beale_restart(std::span<const double> g_prev, std::span<const double> g, double threshold);

/// Next CGB search direction: steepest descent on restart, Polak-Ribiere
/// update otherwise.
std::vector<double> cgb_direction(std::span<const double> g_prev, std::span<const double> g,
                                  std::span<const double> d_prev, double threshold);

struct LineSearchResult {
    bool ok = false;
    double alpha = 0.0;
    double value = 0.0;
    int evaluations = 0;
};

/// Bracketing search with safeguarded quadratic interpolation for a step
/// satisfying the strong Wolfe conditions. On success `grad` holds the
/// gradient at w + alpha d.
LineSearchResult wolfe_line_search(Objective& objective, std::span<const double> w, double value,
                                   std::span<const double> g, std::span<const double> d, double alpha0,
                                   const CgbOptions& options, std::span<double> grad);

} // namespace hifloc::optim
