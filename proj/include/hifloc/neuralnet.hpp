#pragma once

#include "hifloc/optimizers.hpp"

#include <json.hpp>

#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace hifloc::nn {

enum class Activation { Tanh, Logistic };

std::string_view activation_name(Activation activation);
Activation parse_activation(std::string_view name);

struct DenseLayer {
    std::size_t inputs = 0;
    std::size_t outputs = 0;
    std::vector<double> weights;  // outputs x inputs, row-major
    std::vector<double> biases;
};

/// Feedforward network: hidden layers use `hidden_activation`, the output
/// layer is linear.
struct MlpModel {
    std::vector<std::size_t> layer_sizes;
    Activation hidden_activation = Activation::Tanh;
    std::vector<DenseLayer> layers;

    std::size_t input_size() const { return layer_sizes.front(); }
    std::size_t output_size() const { return layer_sizes.back(); }
    std::size_t parameter_count() const;

    /// Flat view order: for each layer, weights then biases.
    std::vector<double> parameters() const;
    void set_parameters(std::span<const double> flat);
};

/// Inputs and targets, one row each.
struct Batch {
    std::vector<std::vector<double>> inputs;
    std::vector<std::vector<double>> targets;

    std::size_t size() const { return inputs.size(); }
    bool empty() const { return inputs.empty(); }
};

/// Weights uniform in [-1/sqrt(fan_in), 1/sqrt(fan_in)], biases zero.
MlpModel init_mlp(const std::vector<std::size_t>& layer_sizes, Activation hidden_activation, std::uint64_t seed);

std::vector<double> mlp_forward(const MlpModel& model, std::span<const double> x);

/// MSE = sum ||y_hat - y||^2 / (rows * outputs).
double mlp_loss(const MlpModel& model, const Batch& batch);

/// Full-batch backpropagation; gradient laid out like MlpModel::parameters().
std::vector<double> mlp_gradient(const MlpModel& model, const Batch& batch);

double mlp_loss_and_gradient(const MlpModel& model, const Batch& batch, std::span<double> grad);

/// Batch MSE as a function of the flattened parameters.
class MlpObjective final : public optim::Objective {
public:
    MlpObjective(MlpModel model, const Batch& batch);

    std::size_t dimension() const override { return dimension_; }
    double value(std::span<const double> w) override;
    double value_and_gradient(std::span<const double> w, std::span<double> grad) override;

private:
    MlpModel model_;
    const Batch& batch_;
    std::size_t dimension_;
};

enum class Optimizer { Gdx, Scg, Cgb };

std::string_view optimizer_name(Optimizer optimizer);
Optimizer parse_optimizer(std::string_view name);

struct TrainConfig {
    int max_epochs = 1000;
    double goal_mse = 0.0;
    std::uint64_t seed = 1;
    Optimizer optimizer = Optimizer::Gdx;
    optim::GdxOptions gdx;
    optim::ScgOptions scg;
    optim::CgbOptions cgb;
    int max_validation_failures = 6;
    double gradient_floor = 1e-10;

    void validate() const;
};

struct TrainingReport {
    Optimizer optimizer = Optimizer::Gdx;
    std::vector<double> train_mse;      // index 0 is the untrained model
    std::vector<double> validation_mse; // NaN when there are no validation rows
    std::vector<double> learning_rate;  // GDX only, one per epoch after the first
    optim::StopReason stop_reason = optim::StopReason::MaxEpochs;
    int best_epoch = 0;
    MlpModel model;  // snapshot at best_epoch

    int epochs() const { return static_cast<int>(train_mse.size()) - 1; }
};

/// Runs the configured optimizer. With validation rows the returned model is
/// the best-validation snapshot and training stops after
/// `max_validation_failures` consecutive validation increases; epochs that
/// leave the weights unchanged are not validated.
TrainingReport train(const MlpModel& model, const Batch& train_rows, const Batch& validation_rows,
                     const TrainConfig& config);

TrainingReport train_gdx(const MlpModel& model, const Batch& train_rows, const Batch& validation_rows,
                         TrainConfig config);
TrainingReport train_scg(const MlpModel& model, const Batch& train_rows, const Batch& validation_rows,
                         TrainConfig config);
TrainingReport train_cgb(const MlpModel& model, const Batch& train_rows, const Batch& validation_rows,
                         TrainConfig config);

nlohmann::json model_to_json(const MlpModel& model);
MlpModel model_from_json(const nlohmann::json& doc);

/// CSV with header `epoch,train_mse,val_mse`.
std::string report_to_csv(const TrainingReport& report);

} // namespace hifloc::nn
