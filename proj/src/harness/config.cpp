#include "hifloc/harness/config.hpp"

#include "hifloc/error.hpp"
#include "hifloc/text.hpp"

#include <cmath>
#include <numbers>

namespace hifloc::harness {

namespace {

using nlohmann::json;

constexpr double kDegree = std::numbers::pi / 180.0;

Complex read_complex(const json& j)
{
    if (!j.is_array() || j.size() != 2)
        throw Error(Errc::Usage, "complex values are written as [real, imag]");
    return {j[0].get<double>(), j[1].get<double>()};
}

json write_complex(Complex z) { return json::array({z.real(), z.imag()}); }

netmodel::SourceParams read_source(const json& j, const netmodel::SourceParams& fallback)
{
    auto src = fallback;
    const double mag = j.value("emf_v", std::abs(fallback.emf));
    const double ang = j.value("emf_angle_deg", std::arg(fallback.emf) / kDegree);
    src.emf = std::polar(mag, ang * kDegree);
    if (j.contains("z1_ohm"))
        src.z1 = read_complex(j.at("z1_ohm"));
    if (j.contains("z0_ohm"))
        src.z0 = read_complex(j.at("z0_ohm"));
    return src;
}

json write_source(const netmodel::SourceParams& s)
{
    return {{"emf_v", std::abs(s.emf)},
            {"emf_angle_deg", std::arg(s.emf) / kDegree},
            {"z1_ohm", write_complex(s.z1)},
            {"z0_ohm", write_complex(s.z0)}};
}

// Keys shared by the common training block and the per-optimizer blocks.
void read_common(const json& j, nn::TrainConfig& tc)
{
    tc.max_epochs = j.value("max_epochs", tc.max_epochs);
    tc.goal_mse = j.value("goal_mse", tc.goal_mse);
    tc.seed = j.value("seed", tc.seed);
    tc.max_validation_failures = j.value("max_validation_failures", tc.max_validation_failures);
    tc.gradient_floor = j.value("gradient_floor", tc.gradient_floor);
}

void read_training(const json& j, std::array<nn::TrainConfig, 3>& training)
{
    for (auto& tc : training)
        read_common(j, tc);
    auto& gdx = training[static_cast<std::size_t>(nn::Optimizer::Gdx)];
    auto& scg = training[static_cast<std::size_t>(nn::Optimizer::Scg)];
    auto& cgb = training[static_cast<std::size_t>(nn::Optimizer::Cgb)];
    if (j.contains("gdx")) {
        const auto& g = j.at("gdx");
        read_common(g, gdx);
        gdx.gdx.learning_rate = g.value("learning_rate", gdx.gdx.learning_rate);
        gdx.gdx.momentum = g.value("momentum", gdx.gdx.momentum);
        gdx.gdx.lr_increase = g.value("lr_increase", gdx.gdx.lr_increase);
        gdx.gdx.lr_decrease = g.value("lr_decrease", gdx.gdx.lr_decrease);
        gdx.gdx.max_loss_increase = g.value("max_loss_increase", gdx.gdx.max_loss_increase);
    }
    if (j.contains("scg")) {
        const auto& s = j.at("scg");
        read_common(s, scg);
        scg.scg.sigma = s.value("sigma", scg.scg.sigma);
        scg.scg.lambda = s.value("lambda", scg.scg.lambda);
    }
    if (j.contains("cgb")) {
        const auto& c = j.at("cgb");
        read_common(c, cgb);
        cgb.cgb.c1 = c.value("c1", cgb.cgb.c1);
        cgb.cgb.c2 = c.value("c2", cgb.cgb.c2);
        cgb.cgb.restart_threshold = c.value("restart_threshold", cgb.cgb.restart_threshold);
        cgb.cgb.max_line_search_evaluations =
            c.value("max_line_search_evaluations", cgb.cgb.max_line_search_evaluations);
    }
}

json write_common(const nn::TrainConfig& tc)
{
    return {{"max_epochs", tc.max_epochs},
            {"goal_mse", tc.goal_mse},
            {"seed", tc.seed},
            {"max_validation_failures", tc.max_validation_failures},
            {"gradient_floor", tc.gradient_floor}};
}

} // namespace

relay::MhoZone ExperimentConfig::zone() const
{
    return relay::zone_from_line(pipeline.network.line, reach_fraction);
}

std::vector<netmodel::FaultScenario> ExperimentConfig::scenarios() const
{
    return features::make_grid(distances_km, resistances_ohm, inception_s);
}

std::vector<std::size_t> ExperimentConfig::layer_sizes(std::size_t inputs) const
{
    std::vector<std::size_t> sizes{inputs};
    sizes.insert(sizes.end(), hidden_layers.begin(), hidden_layers.end());
    sizes.push_back(1);
    return sizes;
}

const nn::TrainConfig& ExperimentConfig::train_config(nn::Optimizer optimizer) const
{
    return training[static_cast<std::size_t>(optimizer)];
}

void ExperimentConfig::validate() const
{
    const auto& net = pipeline.network;
    net.line.validate();
    net.source_a.validate();
    if (net.source_b)
        net.source_b->validate();
    pipeline.window.validate();
    if (pipeline.samples_per_cycle < 4)
        throw Error(Errc::InvalidParameter, "samples_per_cycle must be at least 4");
    if (pipeline.raster_n < 8)
        throw Error(Errc::InvalidParameter, "raster_n must be at least 8");
    if (dwell < 1)
        throw Error(Errc::InvalidParameter, "dwell must be at least 1");
    zone().validate();
    for (const double d : distances_km)
        if (!(d > 0.0 && d < net.line.length_km))
            throw Error(Errc::InvalidParameter,
                        "grid distance " + text::format_double(d) + " km lies outside the line");
    for (const double rf : resistances_ohm)
        if (!(rf >= 0.0))
            throw Error(Errc::InvalidParameter, "fault resistances must be >= 0");
    if (hidden_layers.empty())
        throw Error(Errc::BadTopology, "at least one hidden layer is required");
    for (const auto& tc : training)
        tc.validate();
}

ExperimentConfig default_config()
{
    ExperimentConfig config;
    for (std::size_t i = 0; i < config.training.size(); ++i)
        config.training[i].optimizer = static_cast<nn::Optimizer>(i);
    return config;
}

ExperimentConfig config_from_json(const json& doc)
{
    auto config = default_config();
    try {
        config.name = doc.value("name", config.name);
        auto& net = config.pipeline.network;
        if (doc.contains("line")) {
            const auto& l = doc.at("line");
            if (l.contains("z1_ohm_per_km"))
                net.line.z1_per_km = read_complex(l.at("z1_ohm_per_km"));
            if (l.contains("z0_ohm_per_km"))
                net.line.z0_per_km = read_complex(l.at("z0_ohm_per_km"));
            net.line.length_km = l.value("length_km", net.line.length_km);
            net.line.f_hz = l.value("f_hz", net.line.f_hz);
        }
        if (doc.contains("source_a"))
            net.source_a = read_source(doc.at("source_a"), net.source_a);
        if (doc.contains("source_b")) {
            const auto& b = doc.at("source_b");
            if (b.is_null())
                net.source_b.reset();
            else
                net.source_b = read_source(b, net.source_b.value_or(netmodel::default_network().source_b.value()));
        }
        if (doc.contains("relay")) {
            const auto& r = doc.at("relay");
            config.reach_fraction = r.value("reach_fraction", config.reach_fraction);
            config.dwell = r.value("dwell", config.dwell);
            config.pipeline.samples_per_cycle = r.value("samples_per_cycle", config.pipeline.samples_per_cycle);
            const auto mode = r.value("k0_mode", std::string("compensated"));
            if (mode != "compensated" && mode != "raw")
                throw Error(Errc::Usage, "relay.k0_mode must be 'compensated' or 'raw'");
            config.pipeline.compensated = mode == "compensated";
        }
        if (doc.contains("simulation")) {
            const auto& s = doc.at("simulation");
            config.inception_s = s.value("inception_s", config.inception_s);
            config.pipeline.duration_s = s.value("duration_s", config.pipeline.duration_s);
            config.pipeline.dc_offset = s.value("dc_offset", config.pipeline.dc_offset);
        }
        if (doc.contains("grid")) {
            const auto& g = doc.at("grid");
            const auto preset = g.value("preset", std::string());
            if (preset == "paper-grid") {
                config.distances_km = features::paper_distances();
                config.resistances_ohm = features::paper_resistances();
            } else if (preset == "augmented") {
                config.distances_km = features::augmented_distances();
                config.resistances_ohm = features::augmented_resistances();
            } else if (!preset.empty()) {
                throw Error(Errc::Usage, "unknown grid preset '" + preset + "'");
            }
            if (g.contains("distances_km"))
                config.distances_km = g.at("distances_km").get<std::vector<double>>();
            if (g.contains("resistances_ohm"))
                config.resistances_ohm = g.at("resistances_ohm").get<std::vector<double>>();
        }
        if (doc.contains("features")) {
            const auto& f = doc.at("features");
            config.pipeline.mode = features::parse_mode(f.value("mode", std::string("focal")));
            config.pipeline.raster_n = f.value("raster_n", config.pipeline.raster_n);
            if (f.contains("window_ohm")) {
                const auto& w = f.at("window_ohm");
                auto& win = config.pipeline.window;
                win.r_min = w.value("r_min", win.r_min);
                win.r_max = w.value("r_max", win.r_max);
                win.x_min = w.value("x_min", win.x_min);
                win.x_max = w.value("x_max", win.x_max);
            }
        }
        if (doc.contains("split")) {
            const auto& s = doc.at("split");
            auto& ratios = config.pipeline.ratios;
            ratios.train = s.value("train", ratios.train);
            ratios.validation = s.value("validation", ratios.validation);
            ratios.test = s.value("test", ratios.test);
            config.pipeline.split_seed = s.value("seed", config.pipeline.split_seed);
        }
        if (doc.contains("network")) {
            const auto& n = doc.at("network");
            config.hidden_layers = n.value("hidden_layers", config.hidden_layers);
            config.activation = nn::parse_activation(n.value("activation", std::string("tanh")));
        }
        if (doc.contains("training"))
            read_training(doc.at("training"), config.training);
        config.pipeline.threads = doc.value("threads", config.pipeline.threads);
        config.output_dir = doc.value("output_dir", config.output_dir.string());
    } catch (const json::exception& e) {
        throw Error(Errc::Usage, std::string("bad configuration: ") + e.what());
    }
    try {
        config.validate();
    } catch (const Error& e) {
        throw Error(Errc::Usage, e.what());
    }
    return config;
}

json config_to_json(const ExperimentConfig& config)
{
    const auto& p = config.pipeline;
    const auto& net = p.network;
    json training = write_common(config.train_config(nn::Optimizer::Gdx));
    const auto& gdx = config.train_config(nn::Optimizer::Gdx);
    const auto& scg = config.train_config(nn::Optimizer::Scg);
    const auto& cgb = config.train_config(nn::Optimizer::Cgb);
    training["gdx"] = write_common(gdx);
    training["gdx"].update({{"learning_rate", gdx.gdx.learning_rate},
                            {"momentum", gdx.gdx.momentum},
                            {"lr_increase", gdx.gdx.lr_increase},
                            {"lr_decrease", gdx.gdx.lr_decrease},
                            {"max_loss_increase", gdx.gdx.max_loss_increase}});
    training["scg"] = write_common(scg);
    training["scg"].update({{"sigma", scg.scg.sigma}, {"lambda", scg.scg.lambda}});
    training["cgb"] = write_common(cgb);
    training["cgb"].update({{"c1", cgb.cgb.c1},
                            {"c2", cgb.cgb.c2},
                            {"restart_threshold", cgb.cgb.restart_threshold},
                            {"max_line_search_evaluations", cgb.cgb.max_line_search_evaluations}});

    return {{"name", config.name},
            {"line",
             {{"z1_ohm_per_km", write_complex(net.line.z1_per_km)},
              {"z0_ohm_per_km", write_complex(net.line.z0_per_km)},
              {"length_km", net.line.length_km},
              {"f_hz", net.line.f_hz}}},
            {"source_a", write_source(net.source_a)},
            {"source_b", net.source_b ? write_source(*net.source_b) : json(nullptr)},
            {"relay",
             {{"reach_fraction", config.reach_fraction},
              {"dwell", config.dwell},
              {"samples_per_cycle", p.samples_per_cycle},
              {"k0_mode", p.compensated ? "compensated" : "raw"}}},
            {"simulation", {{"inception_s", config.inception_s}, {"duration_s", p.duration_s}, {"dc_offset", p.dc_offset}}},
            {"grid", {{"distances_km", config.distances_km}, {"resistances_ohm", config.resistances_ohm}}},
            {"features",
             {{"mode", features::mode_name(p.mode)},
              {"raster_n", p.raster_n},
              {"window_ohm",
               {{"r_min", p.window.r_min}, {"r_max", p.window.r_max}, {"x_min", p.window.x_min}, {"x_max", p.window.x_max}}}}},
            {"split", {{"train", p.ratios.train}, {"validation", p.ratios.validation}, {"test", p.ratios.test}, {"seed", p.split_seed}}},
            {"network", {{"hidden_layers", config.hidden_layers}, {"activation", nn::activation_name(config.activation)}}},
            {"training", training},
            {"threads", p.threads},
            {"output_dir", config.output_dir.string()}};
}

ExperimentConfig load_config(const std::filesystem::path& path)
{
    const auto content = text::read_file(path);
    json doc;
    try {
        doc = json::parse(content);
    } catch (const json::exception& e) {
        throw Error(Errc::Usage, path.string() + ": " + e.what());
    }
    return config_from_json(doc);
}

} // namespace hifloc::harness
