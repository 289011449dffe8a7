#pragma once

#include "hifloc/neuralnet.hpp"
#include "hifloc/relay.hpp"

#include <filesystem>
#include <string>
#include <vector>

namespace hifloc::harness {

/// R-X diagram: one mho circle, the axes, the locus as a single polyline and
/// a marker on the final point. Output is a pure function of the inputs.
std::string rx_svg(const relay::ImpedanceLocus& locus, const relay::MhoZone& zone);
void render_rx_svg(const relay::ImpedanceLocus& locus, const relay::MhoZone& zone,
                   const std::filesystem::path& out);

struct LineFit {
    double slope = 0.0;
    double intercept = 0.0;
};

/// Ordinary least squares y = slope x + intercept. Constant y gives slope 0;
/// constant x gives slope 0 through the mean of y.
LineFit least_squares_fit(const std::vector<double>& x, const std::vector<double>& y);

struct FitPanel {
    std::string title;
    std::vector<double> targets;
    std::vector<double> predictions;
};

/// Predicted vs target scatter, one panel per entry, each with the identity
/// line and its least-squares fit.
std::string fit_svg(const nn::TrainingReport& report, const std::vector<FitPanel>& panels);
void render_fit_svg(const nn::TrainingReport& report, const std::vector<FitPanel>& panels,
                    const std::filesystem::path& out);

} // namespace hifloc::harness
