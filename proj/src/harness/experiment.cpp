#include "hifloc/harness/experiment.hpp"

#include "hifloc/error.hpp"
#include "hifloc/text.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <numeric>

namespace hifloc::harness {

using nlohmann::json;

double Locator::predict_km(const features::FeatureVector& raw) const
{
    const auto x = features::apply_normalizer(raw, normalizer, features::Direction::Forward);
    if (x.values.size() != model.input_size())
        throw Error(Errc::DimensionMismatch, fmt::format("model expects {} features, got {}",
                                                         model.input_size(), x.values.size()));
    return normalizer.denormalize_target(nn::mlp_forward(model, x.values).front());
}

json locator_to_json(const Locator& locator)
{
    return {{"optimizer", nn::optimizer_name(locator.optimizer)},
            {"seed", locator.seed},
            {"model", nn::model_to_json(locator.model)},
            {"normalizer", features::normalizer_to_json(locator.normalizer)}};
}

Locator locator_from_json(const json& doc)
{
    try {
        Locator locator;
        locator.optimizer = nn::parse_optimizer(doc.at("optimizer").get<std::string>());
        locator.seed = doc.at("seed").get<std::uint64_t>();
        locator.model = nn::model_from_json(doc.at("model"));
        locator.normalizer = features::normalizer_from_json(doc.at("normalizer"));
        if (locator.normalizer.features.size() != locator.model.input_size())
            throw Error(Errc::DimensionMismatch, "normalizer and model disagree on the feature count");
        return locator;
    } catch (const json::exception& e) {
        throw Error(Errc::IoFailure, std::string("malformed model file: ") + e.what());
    }
}

features::ValueRange target_bounds(const ExperimentConfig& config)
{
    return {0.0, config.pipeline.network.line.length_km};
}

std::vector<features::DatasetRow> select_rows(const features::Dataset& dataset,
                                              std::optional<features::Split> split)
{
    std::vector<features::DatasetRow> rows;
    for (const auto& row : dataset.rows)
        if (!split || row.split == *split)
            rows.push_back(row);
    return rows;
}

nn::Batch make_batch(const features::Dataset& dataset, const features::NormalizationParams& normalizer,
                     std::optional<features::Split> split)
{
    nn::Batch batch;
    for (const auto& row : dataset.rows) {
        if (split && row.split != *split)
            continue;
        batch.inputs.push_back(
            features::apply_normalizer(row.features, normalizer, features::Direction::Forward).values);
        batch.targets.push_back({normalizer.normalize_target(row.target_km)});
    }
    return batch;
}

TrainingRun train_locator(const ExperimentConfig& config, const features::Dataset& dataset,
                          const features::NormalizationParams& normalizer, nn::Optimizer optimizer,
                          std::uint64_t seed)
{
    auto tc = config.train_config(optimizer);
    tc.optimizer = optimizer;
    tc.seed = seed;

    const auto train_rows = make_batch(dataset, normalizer, features::Split::Train);
    const auto validation_rows = make_batch(dataset, normalizer, features::Split::Validation);
    if (train_rows.empty())
        throw Error(Errc::EmptyDataset, "dataset has no training rows");

    const auto model = nn::init_mlp(config.layer_sizes(dataset.feature_count()), config.activation, seed);
    TrainingRun run;
    run.report = nn::train(model, train_rows, validation_rows, tc);
    run.locator = Locator{optimizer, seed, run.report.model, normalizer};
    return run;
}

double mean_squared_error(const std::vector<double>& predicted, const std::vector<double>& actual)
{
    if (predicted.size() != actual.size())
        throw Error(Errc::DimensionMismatch, "prediction and truth lengths differ");
    if (predicted.empty())
        return 0.0;
    double sum = 0.0;
    for (std::size_t i = 0; i < predicted.size(); ++i) {
        const double e = predicted[i] - actual[i];
        sum += e * e;
    }
    return sum / static_cast<double>(predicted.size());
}

ResultsTable evaluate_locator(const nn::MlpModel& model, const features::NormalizationParams& normalizer,
                              const std::vector<features::DatasetRow>& rows, const std::string& column_name)
{
    std::vector<std::size_t> order(rows.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t a, std::size_t b) { return rows[a].target_km < rows[b].target_km; });

    ResultsTable table;
    ResultsColumn column;
    column.name = column_name;
    std::vector<double> out_norm, real_norm;
    for (const std::size_t i : order) {
        const auto& row = rows[i];
        const auto x = features::apply_normalizer(row.features, normalizer, features::Direction::Forward);
        if (x.values.size() != model.input_size())
            throw Error(Errc::DimensionMismatch, fmt::format("model expects {} features, row has {}",
                                                             model.input_size(), x.values.size()));
        const double y = nn::mlp_forward(model, x.values).front();
        table.real_km.push_back(row.target_km);
        column.predicted_km.push_back(normalizer.denormalize_target(y));
        out_norm.push_back(y);
        real_norm.push_back(normalizer.normalize_target(row.target_km));
    }
    column.mse_km2 = mean_squared_error(column.predicted_km, table.real_km);
    column.mse_normalized = mean_squared_error(out_norm, real_norm);
    table.columns.push_back(std::move(column));
    return table;
}

ResultsTable merge_results(const std::vector<ResultsTable>& tables)
{
    if (tables.empty())
        return {};
    ResultsTable merged;
    merged.real_km = tables.front().real_km;
    for (const auto& t : tables) {
        if (t.real_km != merged.real_km)
            throw Error(Errc::DimensionMismatch, "tables list different distances");
        merged.columns.insert(merged.columns.end(), t.columns.begin(), t.columns.end());
    }
    return merged;
}

std::string results_to_csv(const ResultsTable& table)
{
    std::string out = "real_km";
    for (const auto& c : table.columns)
        out += "," + c.name;
    out += '\n';
    for (std::size_t i = 0; i < table.size(); ++i) {
        out += text::format_double(table.real_km[i]);
        for (const auto& c : table.columns)
            out += "," + text::format_double(c.predicted_km[i]);
        out += '\n';
    }
    out += "mse_km2";
    for (const auto& c : table.columns)
        out += "," + text::format_double(c.mse_km2);
    out += "\nmse_normalized";
    for (const auto& c : table.columns)
        out += "," + text::format_double(c.mse_normalized);
    out += '\n';
    return out;
}

std::string results_to_text(const ResultsTable& table)
{
    constexpr int label = 18;
    std::size_t width = 12;
    for (const auto& c : table.columns)
        width = std::max(width, c.name.size() + 2);

    std::string out = fmt::format("{:<{}}", "Real (km)", label);
    for (const auto& c : table.columns)
        out += fmt::format("{:>{}}", c.name, width);
    out += '\n';
    for (std::size_t i = 0; i < table.size(); ++i) {
        out += fmt::format("{:<{}.4f}", table.real_km[i], label);
        for (const auto& c : table.columns)
            out += fmt::format("{:>{}.4f}", c.predicted_km[i], width);
        out += '\n';
    }
    out += fmt::format("{:<{}}", "MSE (km^2)", label);
    for (const auto& c : table.columns)
        out += fmt::format("{:>{}.5E}", c.mse_km2, width);
    out += '\n';
    out += fmt::format("{:<{}}", "MSE (normalized)", label);
    for (const auto& c : table.columns)
        out += fmt::format("{:>{}.5E}", c.mse_normalized, width);
    out += '\n';
    return out;
}

std::vector<features::DatasetRow> resimulate_rows(const ExperimentConfig& config, double rf_ohm)
{
    std::vector<features::DatasetRow> rows;
    for (const auto& s : features::make_grid(config.distances_km, {rf_ohm}, config.inception_s)) {
        features::DatasetRow row;
        row.features = features::scenario_features(s, config.pipeline);
        row.target_km = s.distance_km;
        row.split = features::Split::Test;
        rows.push_back(std::move(row));
    }
    return rows;
}

} // namespace hifloc::harness
