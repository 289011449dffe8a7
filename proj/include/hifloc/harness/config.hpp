#pragma once

#include "hifloc/features.hpp"
#include "hifloc/neuralnet.hpp"
#include "hifloc/relay.hpp"

#include <json.hpp>

#include <array>
#include <filesystem>
#include <string>
#include <vector>

namespace hifloc::harness {

/// One file describes a whole experiment: network, relay, scenario grid,
/// features, splits, and training settings. JSON keys carry their units.
struct ExperimentConfig {
    std::string name = "default";
    features::PipelineConfig pipeline;
    double reach_fraction = 0.8;
    int dwell = 3;
    double inception_s = 0.04;
    std::vector<double> distances_km = features::paper_distances();
    std::vector<double> resistances_ohm = features::paper_resistances();
    std::vector<std::size_t> hidden_layers{10};
    nn::Activation activation = nn::Activation::Tanh;
    std::array<nn::TrainConfig, 3> training;  // indexed by nn::Optimizer
    std::filesystem::path output_dir = "out";

    relay::MhoZone zone() const;
    std::vector<netmodel::FaultScenario> scenarios() const;
    std::vector<std::size_t> layer_sizes(std::size_t inputs) const;
    const nn::TrainConfig& train_config(nn::Optimizer optimizer) const;
    void validate() const;
};

ExperimentConfig default_config();

ExperimentConfig config_from_json(const nlohmann::json& doc);
nlohmann::json config_to_json(const ExperimentConfig& config);

/// Throws Errc::Usage on malformed or inconsistent content, IoFailure when
/// the file cannot be read.
ExperimentConfig load_config(const std::filesystem::path& path);

} // namespace hifloc::harness
