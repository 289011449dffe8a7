#include "hifloc/neuralnet.hpp"

#include "hifloc/error.hpp"
#include "hifloc/random.hpp"
#include "hifloc/text.hpp"

#include <cmath>
#include <limits>

namespace hifloc::nn {

namespace {

double activate(Activation a, double z)
{
    return a == Activation::Tanh ? std::tanh(z) : 1.0 / (1.0 + std::exp(-z));
}

// Derivative expressed through the activation output.
double activate_slope(Activation a, double y)
{
    return a == Activation::Tanh ? 1.0 - y * y : y * (1.0 - y);
}

void check_input(const MlpModel& model, std::size_t size)
{
    if (size != model.input_size())
        throw Error(Errc::DimensionMismatch, "input has " + std::to_string(size) + " values, model expects " +
                                                 std::to_string(model.input_size()));
}

// Activations of every layer, input first.
std::vector<std::vector<double>> forward_all(const MlpModel& model, std::span<const double> x)
{
    std::vector<std::vector<double>> acts;
    acts.reserve(model.layers.size() + 1);
    acts.emplace_back(x.begin(), x.end());
    for (std::size_t l = 0; l < model.layers.size(); ++l) {
        const auto& layer = model.layers[l];
        const bool hidden = l + 1 < model.layers.size();
        const auto& in = acts.back();
        std::vector<double> out(layer.outputs);
        for (std::size_t o = 0; o < layer.outputs; ++o) {
            double z = layer.biases[o];
            const double* row = &layer.weights[o * layer.inputs];
            for (std::size_t i = 0; i < layer.inputs; ++i)
                z += row[i] * in[i];
            out[o] = hidden ? activate(model.hidden_activation, z) : z;
        }
        acts.push_back(std::move(out));
    }
    return acts;
}

double check_batch(const MlpModel& model, const Batch& batch)
{
    if (batch.empty())
        throw Error(Errc::EmptyBatch, "batch has no rows");
    if (batch.targets.size() != batch.inputs.size())
        throw Error(Errc::DimensionMismatch, "batch inputs and targets differ in length");
    for (std::size_t m = 0; m < batch.size(); ++m) {
        check_input(model, batch.inputs[m].size());
        if (batch.targets[m].size() != model.output_size())
            throw Error(Errc::DimensionMismatch, "target width does not match model output");
    }
    return static_cast<double>(batch.size() * model.output_size());
}

TrainingReport run_training(const MlpModel& model, const Batch& train_rows, const Batch& validation_rows,
                            const TrainConfig& config)
{
    config.validate();
    check_batch(model, train_rows);
    const bool validating = !validation_rows.empty();
    if (validating)
        check_batch(model, validation_rows);

    TrainingReport report;
    report.optimizer = config.optimizer;
    report.model = model;

    MlpObjective objective(model, train_rows);
    MlpModel probe = model;
    auto validation_loss = [&](std::span<const double> w) {
        if (!validating)
            return std::numeric_limits<double>::quiet_NaN();
        probe.set_parameters(w);
        return mlp_loss(probe, validation_rows);
    };

    auto w = model.parameters();
    double best_val = validation_loss(w);
    report.train_mse.push_back(mlp_loss(model, train_rows));
    report.validation_mse.push_back(best_val);
    auto best_w = w;
    double last_val = best_val;
    int failures = 0;

    optim::EpochObserver observer = [&](int epoch, double loss, std::span<const double> current, bool moved) {
        const double val = moved ? validation_loss(current) : report.validation_mse.back();
        report.train_mse.push_back(loss);
        report.validation_mse.push_back(val);
        if (!validating) {
            report.best_epoch = epoch;
            return false;
        }
        if (!moved)
            return false;
        if (val < best_val) {
            best_val = val;
            best_w.assign(current.begin(), current.end());
            report.best_epoch = epoch;
        }
        // Consecutive increases over the previous moving epoch.
        failures = val > last_val ? failures + 1 : 0;
        last_val = val;
        return failures >= config.max_validation_failures;
    };

    const optim::StopCriteria stop{config.max_epochs, config.goal_mse, config.gradient_floor};
    optim::Trace trace;
    switch (config.optimizer) {
    case Optimizer::Gdx: trace = optim::minimize_gdx(objective, w, stop, config.gdx, observer); break;
    case Optimizer::Scg: trace = optim::minimize_scg(objective, w, stop, config.scg, observer); break;
    case Optimizer::Cgb: trace = optim::minimize_cgb(objective, w, stop, config.cgb, observer); break;
    }
    report.stop_reason = trace.reason;
    report.learning_rate = std::move(trace.learning_rates);
    report.model.set_parameters(validating ? best_w : w);
    return report;
}

} // namespace

std::string_view activation_name(Activation activation)
{
    return activation == Activation::Tanh ? "tanh" : "logistic";
}

Activation parse_activation(std::string_view name)
{
    if (name == "tanh")
        return Activation::Tanh;
    if (name == "logistic")
        return Activation::Logistic;
    throw Error(Errc::Usage, "unknown activation '" + std::string(name) + "'");
}

std::size_t MlpModel::parameter_count() const
{
    std::size_t count = 0;
    for (const auto& l : layers)
        count += l.weights.size() + l.biases.size();
    return count;
}

std::vector<double> MlpModel::parameters() const
{
    std::vector<double> flat;
    flat.reserve(parameter_count());
    for (const auto& l : layers) {
        flat.insert(flat.end(), l.weights.begin(), l.weights.end());
        flat.insert(flat.end(), l.biases.begin(), l.biases.end());
    }
    return flat;
}

void MlpModel::set_parameters(std::span<const double> flat)
{
    if (flat.size() != parameter_count())
        throw Error(Errc::DimensionMismatch, "parameter vector length does not match model");
    auto it = flat.begin();
    for (auto& l : layers) {
        std::copy(it, it + static_cast<std::ptrdiff_t>(l.weights.size()), l.weights.begin());
        it += static_cast<std::ptrdiff_t>(l.weights.size());
        std::copy(it, it + static_cast<std::ptrdiff_t>(l.biases.size()), l.biases.begin());
        it += static_cast<std::ptrdiff_t>(l.biases.size());
    }
}

MlpModel init_mlp(const std::vector<std::size_t>& layer_sizes, Activation hidden_activation, std::uint64_t seed)
{
    if (layer_sizes.size() < 3)
        throw Error(Errc::BadTopology, "need input, at least one hidden, and output layer");
    for (const auto s : layer_sizes)
        if (s < 1)
            throw Error(Errc::BadTopology, "every layer needs at least one unit");

    MlpModel model{layer_sizes, hidden_activation, {}};
    Engine engine(seed);
    for (std::size_t l = 0; l + 1 < layer_sizes.size(); ++l) {
        DenseLayer layer{layer_sizes[l], layer_sizes[l + 1], {}, {}};
        const double bound = 1.0 / std::sqrt(static_cast<double>(layer.inputs));
        layer.weights.resize(layer.inputs * layer.outputs);
        for (auto& w : layer.weights)
            w = bound * (2.0 * uniform01(engine) - 1.0);
        layer.biases.assign(layer.outputs, 0.0);
        model.layers.push_back(std::move(layer));
    }
    return model;
}

std::vector<double> mlp_forward(const MlpModel& model, std::span<const double> x)
{
    check_input(model, x.size());
    return std::move(forward_all(model, x).back());
}

double mlp_loss(const MlpModel& model, const Batch& batch)
{
    const double scale = check_batch(model, batch);
    double sum = 0.0;
    for (std::size_t m = 0; m < batch.size(); ++m) {
        const auto y = forward_all(model, batch.inputs[m]).back();
        for (std::size_t k = 0; k < y.size(); ++k) {
            const double e = y[k] - batch.targets[m][k];
            sum += e * e;
        }
    }
    return sum / scale;
}

std::vector<double> mlp_gradient(const MlpModel& model, const Batch& batch)
{
    std::vector<double> grad(model.parameter_count());
    mlp_loss_and_gradient(model, batch, grad);
    return grad;
}

double mlp_loss_and_gradient(const MlpModel& model, const Batch& batch, std::span<double> grad)
{
    const double scale = check_batch(model, batch);
    if (grad.size() != model.parameter_count())
        throw Error(Errc::DimensionMismatch, "gradient buffer length does not match model");
    std::fill(grad.begin(), grad.end(), 0.0);

    // Offsets of each layer's block in the flat layout.
    std::vector<std::size_t> offset(model.layers.size());
    for (std::size_t l = 0, at = 0; l < model.layers.size(); ++l) {
        offset[l] = at;
        at += model.layers[l].weights.size() + model.layers[l].biases.size();
    }

    double sum = 0.0;
    for (std::size_t m = 0; m < batch.size(); ++m) {
        const auto acts = forward_all(model, batch.inputs[m]);
        const auto& y = acts.back();
        // dLoss/dz for the linear output layer.
        std::vector<double> delta(y.size());
        for (std::size_t k = 0; k < y.size(); ++k) {
            const double e = y[k] - batch.targets[m][k];
            sum += e * e;
            delta[k] = 2.0 * e / scale;
        }
        for (std::size_t l = model.layers.size(); l-- > 0;) {
            const auto& layer = model.layers[l];
            const auto& in = acts[l];
            double* gw = &grad[offset[l]];
            double* gb = gw + layer.weights.size();
            for (std::size_t o = 0; o < layer.outputs; ++o) {
                gb[o] += delta[o];
                for (std::size_t i = 0; i < layer.inputs; ++i)
                    gw[o * layer.inputs + i] += delta[o] * in[i];
            }
            if (l == 0)
                break;
            std::vector<double> below(layer.inputs, 0.0);
            for (std::size_t o = 0; o < layer.outputs; ++o)
                for (std::size_t i = 0; i < layer.inputs; ++i)
                    below[i] += layer.weights[o * layer.inputs + i] * delta[o];
            for (std::size_t i = 0; i < layer.inputs; ++i)
                below[i] *= activate_slope(model.hidden_activation, in[i]);
            delta = std::move(below);
        }
    }
    return sum / scale;
}

MlpObjective::MlpObjective(MlpModel model, const Batch& batch)
    : model_(std::move(model)), batch_(batch), dimension_(model_.parameter_count())
{
}

double MlpObjective::value(std::span<const double> w)
{
    model_.set_parameters(w);
    return mlp_loss(model_, batch_);
}

double MlpObjective::value_and_gradient(std::span<const double> w, std::span<double> grad)
{
    model_.set_parameters(w);
    return mlp_loss_and_gradient(model_, batch_, grad);
}

std::string_view optimizer_name(Optimizer optimizer)
{
    switch (optimizer) {
    case Optimizer::Gdx: return "gdx";
    case Optimizer::Scg: return "scg";
    case Optimizer::Cgb: return "cgb";
    }
    return "gdx";
}

Optimizer parse_optimizer(std::string_view name)
{
    if (name == "gdx")
        return Optimizer::Gdx;
    if (name == "scg")
        return Optimizer::Scg;
    if (name == "cgb")
        return Optimizer::Cgb;
    throw Error(Errc::Usage, "unknown optimizer '" + std::string(name) + "' (expected gdx, scg or cgb)");
}

void TrainConfig::validate() const
{
    if (max_epochs < 1 || !(goal_mse >= 0.0) || max_validation_failures < 1)
        throw Error(Errc::InvalidParameter, "max_epochs and max_validation_failures must be >= 1, goal >= 0");
}

TrainingReport train(const MlpModel& model, const Batch& train_rows, const Batch& validation_rows,
                     const TrainConfig& config)
{
    return run_training(model, train_rows, validation_rows, config);
}

TrainingReport train_gdx(const MlpModel& model, const Batch& train_rows, const Batch& validation_rows,
                         TrainConfig config)
{
    config.optimizer = Optimizer::Gdx;
    return run_training(model, train_rows, validation_rows, config);
}

TrainingReport train_scg(const MlpModel& model, const Batch& train_rows, const Batch& validation_rows,
                         TrainConfig config)
{
    config.optimizer = Optimizer::Scg;
    return run_training(model, train_rows, validation_rows, config);
}

TrainingReport train_cgb(const MlpModel& model, const Batch& train_rows, const Batch& validation_rows,
                         TrainConfig config)
{
    config.optimizer = Optimizer::Cgb;
    return run_training(model, train_rows, validation_rows, config);
}

nlohmann::json model_to_json(const MlpModel& model)
{
    nlohmann::json layers = nlohmann::json::array();
    for (const auto& l : model.layers) {
        nlohmann::json rows = nlohmann::json::array();
        for (std::size_t o = 0; o < l.outputs; ++o)
            rows.push_back(std::vector<double>(l.weights.begin() + static_cast<std::ptrdiff_t>(o * l.inputs),
                                               l.weights.begin() + static_cast<std::ptrdiff_t>((o + 1) * l.inputs)));
        layers.push_back({{"weights", rows}, {"biases", l.biases}});
    }
    return {{"layer_sizes", model.layer_sizes},
            {"hidden_activation", activation_name(model.hidden_activation)},
            {"output_activation", "linear"},
            {"layers", layers}};
}

MlpModel model_from_json(const nlohmann::json& doc)
{
    try {
        const auto sizes = doc.at("layer_sizes").get<std::vector<std::size_t>>();
        auto model = init_mlp(sizes, parse_activation(doc.at("hidden_activation").get<std::string>()), 0);
        if (doc.value("output_activation", "linear") != "linear")
            throw Error(Errc::IoFailure, "only linear output layers are supported");
        const auto& layers = doc.at("layers");
        if (layers.size() != model.layers.size())
            throw Error(Errc::IoFailure, "layer count does not match layer_sizes");
        for (std::size_t l = 0; l < model.layers.size(); ++l) {
            auto& layer = model.layers[l];
            const auto& rows = layers[l].at("weights");
            if (rows.size() != layer.outputs)
                throw Error(Errc::IoFailure, "weight matrix has wrong row count");
            for (std::size_t o = 0; o < layer.outputs; ++o) {
                const auto row = rows[o].get<std::vector<double>>();
                if (row.size() != layer.inputs)
                    throw Error(Errc::IoFailure, "weight matrix has wrong column count");
                std::copy(row.begin(), row.end(), layer.weights.begin() + static_cast<std::ptrdiff_t>(o * layer.inputs));
            }
            layer.biases = layers[l].at("biases").get<std::vector<double>>();
            if (layer.biases.size() != layer.outputs)
                throw Error(Errc::IoFailure, "bias vector has wrong length");
        }
        return model;
    } catch (const nlohmann::json::exception& e) {
        throw Error(Errc::IoFailure, std::string("malformed model: ") + e.what());
    }
}

std::string report_to_csv(const TrainingReport& report)
{
    std::string out = "epoch,train_mse,val_mse\n";
    for (std::size_t e = 0; e < report.train_mse.size(); ++e) {
        out += std::to_string(e);
        out += ',';
        out += text::format_double(report.train_mse[e]);
        out += ',';
        out += text::format_double(report.validation_mse[e]);
        out += '\n';
    }
    return out;
}

} // namespace hifloc::nn
