// Runs criteria 1-9 end to end and prints one PASS/FAIL line for each.
// Exit status is nonzero when any criterion fails.

#include "hifloc/features.hpp"
#include "hifloc/harness/cli.hpp"
#include "hifloc/harness/config.hpp"
#include "hifloc/harness/experiment.hpp"
#include "hifloc/harness/plots.hpp"
#include "hifloc/netmodel.hpp"
#include "hifloc/neuralnet.hpp"
#include "hifloc/relay.hpp"
#include "hifloc/text.hpp"

#include "oracles/generators.hpp"
#include "oracles/mlp.hpp"
#include "oracles/objectives.hpp"

#include <fmt/format.h>

#include <chrono>
#include <cmath>
#include <filesystem>
#include <functional>
#include <iostream>
#include <limits>
#include <numbers>
#include <regex>
#include <sstream>

#include <unistd.h>

using namespace hifloc;
namespace fs = std::filesystem;

namespace {

struct Outcome {
    bool pass = false;
    std::string detail;
};

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point start)
{
    return std::chrono::duration<double>(Clock::now() - start).count();
}

fs::path config_file(const char* name) { return fs::path(HIFLOC_SOURCE_DIR) / "configs" / name; }

double norm(const std::vector<double>& v)
{
    double s = 0.0;
    for (const double x : v)
        s += x * x;
    return std::sqrt(s);
}

Outcome radial_identity()
{
    const auto start = Clock::now();
    features::PipelineConfig cfg;
    cfg.network.source_b.reset();
    const Complex z1 = cfg.network.line.z1_per_km;
    double worst = 0.0;
    for (int d = 5; d <= 50; d += 5) {
        const auto locus = features::scenario_locus({static_cast<double>(d), 0.0, 0.04}, cfg);
        const Complex expected = z1 * static_cast<double>(d);
        worst = std::max(worst, std::abs(locus.points.back().z - expected) / std::abs(expected));
    }
    const double t = seconds_since(start);
    return {worst < 1e-6 && t < 1.0, fmt::format("max relative error {:.3e}, {:.3f} s", worst, t)};
}

// Marker centre and circle geometry read back from the SVG text.
bool marker_inside_circle(const std::string& svg)
{
    std::smatch c, m;
    const std::regex circle(R"re(<circle cx="([-0-9.]+)" cy="([-0-9.]+)" r="([-0-9.]+)")re");
    const std::regex marker(R"re(<rect x="([-0-9.]+)" y="([-0-9.]+)" width="6.000")re");
    if (!std::regex_search(svg, c, circle) || !std::regex_search(svg, m, marker))
        return false;
    const double cx = std::stod(c[1]), cy = std::stod(c[2]), r = std::stod(c[3]);
    const double mx = std::stod(m[1]) + 3.0, my = std::stod(m[2]) + 3.0;
    return std::hypot(mx - cx, my - cy) <= r;
}

Outcome hif_zone_miss()
{
    const auto start = Clock::now();
    const auto config = harness::default_config();
    const auto zone = config.zone();
    bool ok = std::abs(zone.reach_ohm - 0.8 * config.pipeline.network.line.length_km *
                                            std::abs(config.pipeline.network.line.z1_per_km)) < 1e-9;
    std::string detail;
    for (const double rf : {100.0, 0.0}) {
        const auto locus = features::scenario_locus({30.0, rf, config.inception_s}, config.pipeline);
        const auto decision = relay::decide_trip(locus, zone, config.dwell);
        const bool want_trip = rf == 0.0;
        const auto svg = harness::rx_svg(locus, zone);
        const bool one_circle = svg.find("<circle") == svg.rfind("<circle");
        const bool one_polyline = svg.find("<polyline") != std::string::npos &&
                                  svg.find("<polyline") == svg.rfind("<polyline");
        const bool marker_ok = marker_inside_circle(svg) == relay::mho_contains(locus.points.back().z, zone);
        ok = ok && decision.tripped == want_trip && one_circle && one_polyline && marker_ok;
        detail += fmt::format("rf={} tripped={} ", rf, decision.tripped ? "true" : "false");
    }
    const double t = seconds_since(start);
    ok = ok && t < 1.0;
    return {ok, detail + fmt::format("({:.3f} s)", t)};
}

Outcome location_accuracy()
{
    const auto start = Clock::now();
    const auto config = harness::load_config(config_file("augmented.json"));
    const auto dataset = features::build_dataset(config.scenarios(), config.pipeline);
    const auto normalizer = features::fit_normalizer(dataset, harness::target_bounds(config));
    const auto test_rows = harness::select_rows(dataset, features::Split::Test);
    bool ok = !test_rows.empty();
    std::string detail = fmt::format("{} test rows;", test_rows.size());
    for (const auto opt : {nn::Optimizer::Gdx, nn::Optimizer::Scg, nn::Optimizer::Cgb}) {
        const auto run = harness::train_locator(config, dataset, normalizer, opt, config.train_config(opt).seed);
        double sum = 0.0, worst = 0.0;
        for (const auto& row : test_rows) {
            const double err = std::abs(run.locator.predict_km(row.features) - row.target_km);
            sum += err;
            worst = std::max(worst, err);
        }
        const double mae = sum / static_cast<double>(test_rows.size());
        ok = ok && mae <= 1.5 && worst <= 2.5;
        detail += fmt::format(" {} mae {:.3f} km max {:.3f} km;", nn::optimizer_name(opt), mae, worst);
    }
    const double t = seconds_since(start);
    ok = ok && t < 300.0;
    return {ok, detail + fmt::format(" {:.1f} s", t)};
}

Outcome paper_grid_fit()
{
    const auto config = harness::load_config(config_file("paper-grid.json"));
    const auto dataset = features::build_dataset(config.scenarios(), config.pipeline);
    const auto normalizer = features::fit_normalizer(dataset, harness::target_bounds(config));
    bool ok = dataset.rows.size() == 20 && dataset.count(features::Split::Train) == 20;
    std::string detail;
    for (const auto opt : {nn::Optimizer::Gdx, nn::Optimizer::Scg, nn::Optimizer::Cgb}) {
        const auto run = harness::train_locator(config, dataset, normalizer, opt, config.train_config(opt).seed);
        const double mse = nn::mlp_loss(run.locator.model, harness::make_batch(dataset, normalizer, std::nullopt));
        ok = ok && mse < 1e-4 && run.report.epochs() <= 5000;
        if (!detail.empty())
            detail += "; ";
        detail += fmt::format("{} {:.3e} after {} epochs", nn::optimizer_name(opt), mse, run.report.epochs());
    }
    return {ok, detail};
}

Outcome gradient_check()
{
    Engine e(20240501);
    double worst = 0.0;
    for (int trial = 0; trial < 20; ++trial) {
        const auto m = gen::model(e, gen::topology(e));
        const auto b = gen::batch(e, m.input_size(), m.output_size(), static_cast<std::size_t>(gen::integer(e, 1, 12)));
        const auto g = nn::mlp_gradient(m, b);
        const auto fd = oracle::central_difference(m, b, 1e-5);
        std::vector<double> diff(g.size());
        for (std::size_t i = 0; i < g.size(); ++i)
            diff[i] = g[i] - fd[i];
        worst = std::max(worst, norm(diff) / std::max(norm(g), norm(fd)));
    }
    return {worst < 1e-6, fmt::format("worst relative error {:.3e} over 20 pairs", worst)};
}

Outcome optimizer_suite()
{
    optim::StopCriteria stop;
    stop.goal = -std::numeric_limits<double>::infinity();

    auto sphere = oracle::sphere(5);
    std::vector<double> w{1.0, -2.0, 3.0, -4.0, 5.0};
    stop.max_epochs = 50;
    stop.gradient_floor = 0.0;
    optim::StopCriteria scg_stop = stop;
    scg_stop.goal = 1e-12;
    const auto scg = optim::minimize_scg(sphere, w, scg_stop, {});
    const double scg_value = sphere.value(w);
    const bool scg_ok = scg_value < 1e-12 && scg.epochs <= 50;

    Engine e(77);
    auto quad = oracle::random_quadratic(e, 10);
    std::vector<double> v(10);
    for (auto& x : v)
        x = gen::uniform(e, -2.0, 2.0);
    stop.max_epochs = 30;
    stop.gradient_floor = 1e-8;
    const auto cgb = optim::minimize_cgb(quad, v, stop, {});
    std::vector<double> g(10);
    quad.value_and_gradient(v, g);
    const bool cgb_ok = norm(g) < 1e-8;

    auto gdx_obj = oracle::random_quadratic(e, 4);
    std::vector<double> u{3.0, -2.0, 1.0, 0.5};
    optim::GdxOptions opts;
    opts.learning_rate = 0.5;
    double prev_loss = gdx_obj.value(u);
    stop.max_epochs = 300;
    stop.gradient_floor = 0.0;
    const auto gdx = optim::minimize_gdx(gdx_obj, u, stop, opts);
    bool law = gdx.learning_rates.size() == 300;
    int grow = 0, shrink = 0, keep = 0;
    double prev_lr = opts.learning_rate;
    for (std::size_t k = 0; law && k < gdx.learning_rates.size(); ++k) {
        const double ratio = gdx.learning_rates[k] / prev_lr;
        double expected = 1.0;
        if (!gdx.moved[k]) {
            expected = 0.7;
            ++shrink;
        } else if (gdx.losses[k] < prev_loss) {
            expected = 1.05;
            ++grow;
        } else {
            ++keep;
        }
        law = std::abs(ratio - expected) <= 1e-12;
        prev_lr = gdx.learning_rates[k];
        prev_loss = gdx.losses[k];
    }
    law = law && grow > 0 && shrink > 0;
    return {scg_ok && cgb_ok && law,
            fmt::format("SCG f={:.2e} in {} epochs; CGB |g|={:.2e} in {} epochs; GDX law {} "
                        "({} x1.05, {} x0.7, {} x1)",
                        scg_value, scg.epochs, norm(g), cgb.epochs, law ? "held" : "broken", grow, shrink, keep)};
}

Outcome dft_exactness()
{
    double fundamental = 0.0, harmonic = 0.0;
    for (const int n : {12, 16, 20, 32, 64}) {
        for (const double phase : {0.0, 0.7, -2.1}) {
            std::vector<double> x(static_cast<std::size_t>(n));
            for (int k = 0; k < n; ++k)
                x[static_cast<std::size_t>(k)] = 2.5 * std::cos(2.0 * std::numbers::pi * k / n + phase);
            fundamental = std::max(fundamental, std::abs(relay::dft_phasor(x, n).value - std::polar(2.5, phase)));
            for (int h = 0; h < n / 2; ++h) {
                if (h == 1)
                    continue;
                for (int k = 0; k < n; ++k)
                    x[static_cast<std::size_t>(k)] = std::cos(2.0 * std::numbers::pi * h * k / n + phase);
                harmonic = std::max(harmonic, std::abs(relay::dft_phasor(x, n).value));
            }
        }
    }
    return {fundamental < 1e-12 && harmonic < 1e-9,
            fmt::format("fundamental error {:.2e}, worst harmonic leakage {:.2e}", fundamental, harmonic)};
}

Outcome normalization()
{
    const auto config = harness::load_config(config_file("augmented.json"));
    const auto dataset = features::build_dataset(config.scenarios(), config.pipeline);
    const auto params = features::fit_normalizer(dataset, harness::target_bounds(config));
    const std::size_t k = dataset.feature_count();
    std::vector<double> lo(k, std::numeric_limits<double>::infinity()), hi(k, -std::numeric_limits<double>::infinity());
    for (const auto& row : dataset.rows)
        if (row.split == features::Split::Train)
            for (std::size_t i = 0; i < k; ++i) {
                lo[i] = std::min(lo[i], row.features.values[i]);
                hi[i] = std::max(hi[i], row.features.values[i]);
            }
    bool extrema = true;
    for (std::size_t i = 0; i < k; ++i) {
        extrema = extrema && params.forward(lo[i], params.features[i]) == 0.1 &&
                  params.forward(hi[i], params.features[i]) == 0.9;
    }
    double worst = 0.0;
    for (const auto& row : dataset.rows) {
        const auto y = features::apply_normalizer(row.features, params, features::Direction::Forward);
        const auto back = features::apply_normalizer(y, params, features::Direction::Inverse);
        for (std::size_t i = 0; i < k; ++i)
            worst = std::max(worst, std::abs(back.values[i] - row.features.values[i]) /
                                        std::max(1.0, std::abs(row.features.values[i])));
    }
    return {extrema && worst < 1e-12,
            fmt::format("training extrema {} 0.1/0.9, round-trip error {:.2e}", extrema ? "map to" : "miss", worst)};
}

int cli(const std::vector<std::string>& args)
{
    std::ostringstream out, err;
    const int code = harness::run_cli(args, out, err);
    if (code != 0)
        std::cerr << err.str();
    return code;
}

Outcome determinism()
{
    const auto root = fs::temp_directory_path() / ("hifloc_acceptance_" + std::to_string(::getpid()));
    fs::remove_all(root);
    const std::string cfg = config_file("paper-grid.json").string();
    bool ran = true;
    for (const char* run : {"a", "b"}) {
        const auto dir = (root / run).string();
        ran = ran && cli({"--config", cfg, "--out-dir", dir, "dataset"}) == 0;
        ran = ran && cli({"--config", cfg, "--out-dir", dir, "train", "--optimizer", "all"}) == 0;
        ran = ran && cli({"--config", cfg, "--out-dir", dir, "eval", "--split", "all"}) == 0;
        ran = ran && cli({"--config", cfg, "--out-dir", dir, "simulate", "--distance-km", "30", "--rf-ohm", "100",
                          "--svg", (root / run / "rx.svg").string()}) == 0;
    }
    std::size_t compared = 0;
    std::vector<std::string> differing;
    if (ran) {
        for (const auto& entry : fs::directory_iterator(root / "a")) {
            const auto name = entry.path().filename();
            const auto other = root / "b" / name;
            ++compared;
            if (!fs::exists(other) || text::read_file(entry.path()) != text::read_file(other))
                differing.push_back(name.string());
        }
    }
    fs::remove_all(root);
    const bool ok = ran && compared >= 12 && differing.empty();
    std::string detail = fmt::format("{} artifacts compared", compared);
    for (const auto& d : differing)
        detail += ", differs: " + d;
    if (!ran)
        detail = "pipeline run failed";
    return {ok, detail};
}

} // namespace

int main()
{
    const std::vector<std::pair<const char*, std::function<Outcome()>>> criteria = {
        {"radial zero-resistance identity", radial_identity},
        {"high-impedance fault misses zone 1", hif_zone_miss},
        {"end-to-end location accuracy", location_accuracy},
        {"paper-grid fit", paper_grid_fit},
        {"gradient correctness", gradient_check},
        {"optimizer unit suite", optimizer_suite},
        {"DFT exactness", dft_exactness},
        {"normalization", normalization},
        {"determinism", determinism},
    };
    int failures = 0;
    for (std::size_t i = 0; i < criteria.size(); ++i) {
        Outcome o;
        try {
            o = criteria[i].second();
        } catch (const std::exception& e) {
            o = {false, std::string("exception: ") + e.what()};
        }
        if (!o.pass)
            ++failures;
        std::cout << fmt::format("criterion {} {}: {} ({})", i + 1, o.pass ? "PASS" : "FAIL", criteria[i].first,
                                 o.detail)
                  << std::endl;
    }
    std::cout << fmt::format("{} of {} criteria passed", criteria.size() - static_cast<std::size_t>(failures),
                             criteria.size())
              << std::endl;
    return failures == 0 ? 0 : 1;
}
