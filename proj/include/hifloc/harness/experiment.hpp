#pragma once

#include "hifloc/features.hpp"
#include "hifloc/harness/config.hpp"
#include "hifloc/neuralnet.hpp"

#include <json.hpp>

#include <optional>
#include <string>
#include <vector>

namespace hifloc::harness {

/// A trained network together with the scaling it was trained under.
struct Locator {
    nn::Optimizer optimizer = nn::Optimizer::Gdx;
    std::uint64_t seed = 1;
    nn::MlpModel model;
    features::NormalizationParams normalizer;

    double predict_km(const features::FeatureVector& raw) const;
};

nlohmann::json locator_to_json(const Locator& locator);
Locator locator_from_json(const nlohmann::json& doc);

/// Target bounds used when fitting the normalizer: the whole line.
features::ValueRange target_bounds(const ExperimentConfig& config);

/// Normalized rows of one split (all rows when `split` is empty).
nn::Batch make_batch(const features::Dataset& dataset, const features::NormalizationParams& normalizer,
                     std::optional<features::Split> split);

std::vector<features::DatasetRow> select_rows(const features::Dataset& dataset,
                                              std::optional<features::Split> split);

struct TrainingRun {
    Locator locator;
    nn::TrainingReport report;
};

TrainingRun train_locator(const ExperimentConfig& config, const features::Dataset& dataset,
                          const features::NormalizationParams& normalizer, nn::Optimizer optimizer,
                          std::uint64_t seed);

struct ResultsColumn {
    std::string name;
    std::vector<double> predicted_km;
    double mse_km2 = 0.0;
    double mse_normalized = 0.0;
};

/// Real distance per row (ascending) with one prediction column per locator.
struct ResultsTable {
    std::vector<double> real_km;
    std::vector<ResultsColumn> columns;

    std::size_t size() const { return real_km.size(); }
};

double mean_squared_error(const std::vector<double>& predicted, const std::vector<double>& actual);

ResultsTable evaluate_locator(const nn::MlpModel& model, const features::NormalizationParams& normalizer,
                              const std::vector<features::DatasetRow>& rows,
                              const std::string& column_name = "predicted_km");

/// Columns side by side; every table must list the same real distances.
ResultsTable merge_results(const std::vector<ResultsTable>& tables);

/// Header `real_km,<column>...`, then `mse_km2,...` and `mse_normalized,...`
/// footer rows.
std::string results_to_csv(const ResultsTable& table);

/// Aligned columns, km to 4 decimals, MSE footer in scientific notation.
std::string results_to_text(const ResultsTable& table);

/// Re-simulates the configured distances at one fault resistance.
std::vector<features::DatasetRow> resimulate_rows(const ExperimentConfig& config, double rf_ohm);

} // namespace hifloc::harness
