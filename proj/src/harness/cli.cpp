#include "hifloc/harness/cli.hpp"

#include "hifloc/harness/config.hpp"
#include "hifloc/harness/experiment.hpp"
#include "hifloc/harness/plots.hpp"
#include "hifloc/text.hpp"

#include <CLI11.hpp>
#include <fmt/format.h>

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <limits>
#include <optional>
#include <ostream>

namespace hifloc::harness {

namespace fs = std::filesystem;
using nlohmann::json;

int exit_code(ErrorCategory category)
{
    switch (category) {
    case ErrorCategory::Usage: return 2;
    case ErrorCategory::Simulation: return 3;
    case ErrorCategory::Training: return 4;
    case ErrorCategory::Io: return 5;
    }
    return 1;
}

namespace {

struct Common {
    std::string config_path;
    std::string out_dir;
};

struct SimulateArgs {
    double distance_km = 0.0;
    double rf_ohm = 0.0;
    std::optional<double> inception_s;
    std::string locus, waveforms, svg;
};

struct TrainArgs {
    std::string optimizer = "all";
    std::optional<std::uint64_t> seed;
    std::string dataset, normalizer;
};

struct EvalArgs {
    std::vector<std::string> models;
    std::string dataset;
    std::string split = "test";
    std::optional<double> rf_ohm;
};

struct PlotArgs {
    std::string locus, model, report, dataset, out;
};

ExperimentConfig resolve_config(const Common& common)
{
    auto config = common.config_path.empty() ? default_config() : load_config(common.config_path);
    if (!common.out_dir.empty())
        config.output_dir = common.out_dir;
    return config;
}

fs::path or_default(const std::string& given, const fs::path& fallback)
{
    return given.empty() ? fallback : fs::path(given);
}

json read_json(const fs::path& path)
{
    try {
        return json::parse(text::read_file(path));
    } catch (const json::exception& e) {
        throw Error(Errc::IoFailure, path.string() + ": " + e.what());
    }
}

features::Dataset read_dataset(const fs::path& path) { return features::dataset_from_csv(text::read_file(path)); }

std::string dump(const json& doc) { return doc.dump(2) + "\n"; }

std::vector<nn::Optimizer> optimizers_from(const std::string& name)
{
    if (name == "all")
        return {nn::Optimizer::Gdx, nn::Optimizer::Scg, nn::Optimizer::Cgb};
    try {
        return {nn::parse_optimizer(name)};
    } catch (const Error& e) {
        throw Error(Errc::Usage, std::string("--optimizer: ") + e.what());
    }
}

std::vector<FitPanel> fit_panels(const Locator& locator, const features::Dataset& dataset)
{
    std::vector<FitPanel> panels;
    for (const auto split : {features::Split::Train, features::Split::Validation, features::Split::Test}) {
        FitPanel panel;
        panel.title = std::string(features::split_name(split));
        for (const auto& row : dataset.rows) {
            if (row.split != split)
                continue;
            panel.targets.push_back(row.target_km);
            panel.predictions.push_back(locator.predict_km(row.features));
        }
        panels.push_back(std::move(panel));
    }
    return panels;
}

nn::TrainingReport report_from_csv(const std::string& content, nn::Optimizer optimizer)
{
    const auto table = text::parse_csv(content);
    nn::TrainingReport report;
    report.optimizer = optimizer;
    const auto train_col = table.column("train_mse");
    const auto val_col = table.column("val_mse");
    for (const auto& row : table.rows) {
        report.train_mse.push_back(text::parse_double(row.at(train_col)));
        report.validation_mse.push_back(text::parse_double(row.at(val_col)));
    }
    if (report.train_mse.empty())
        throw Error(Errc::IoFailure, "training report has no rows");
    return report;
}

void check_pair(const features::Dataset& dataset, const features::NormalizationParams& normalizer)
{
    if (dataset.feature_count() != normalizer.features.size())
        throw Error(Errc::DimensionMismatch,
                    fmt::format("dataset has {} features, normalizer {}", dataset.feature_count(),
                                normalizer.features.size()));
}

int cmd_simulate(const Common& common, const SimulateArgs& a, std::ostream& out)
{
    const auto config = resolve_config(common);
    netmodel::FaultScenario scenario{a.distance_km, a.rf_ohm, a.inception_s.value_or(config.inception_s)};
    try {
        scenario.validate(config.pipeline.network.line);
    } catch (const Error& e) {
        throw Error(Errc::Usage, e.what());
    }
    const auto locus = features::scenario_locus(scenario, config.pipeline);
    const auto zone = config.zone();
    const auto decision = relay::decide_trip(locus, zone, config.dwell);

    const auto locus_path = or_default(a.locus, config.output_dir / "locus.csv");
    text::write_file(locus_path, relay::locus_to_csv(locus));
    if (!a.waveforms.empty()) {
        auto options = config.pipeline.waveform_options();
        const auto waves = netmodel::simulate_scenario(config.pipeline.network, scenario, options);
        text::write_file(a.waveforms, netmodel::waveforms_to_csv(waves));
    }
    if (!a.svg.empty())
        render_rx_svg(locus, zone, a.svg);

    const auto z = locus.points.back().z;
    out << fmt::format("distance_km {}\nrf_ohm {}\n", text::format_double(a.distance_km),
                       text::format_double(a.rf_ohm));
    out << fmt::format("zone reach_ohm {:.4f} angle_deg {:.4f}\n", zone.reach_ohm, zone.angle_deg);
    out << fmt::format("final_z_ohm {:.4f} {:+.4f}j\n", z.real(), z.imag());
    out << "tripped " << (decision.tripped ? "true" : "false") << '\n';
    if (decision.trip_time_s)
        out << fmt::format("trip_time_s {:.4f}\n", *decision.trip_time_s);
    out << "locus " << locus_path.string() << '\n';
    return 0;
}

int cmd_dataset(const Common& common, std::ostream& out)
{
    const auto config = resolve_config(common);
    const auto dataset = features::build_dataset(config.scenarios(), config.pipeline);
    const auto normalizer = features::fit_normalizer(dataset, target_bounds(config));
    const auto csv_path = config.output_dir / "dataset.csv";
    const auto norm_path = config.output_dir / "normalizer.json";
    text::write_file(csv_path, features::dataset_to_csv(dataset));
    text::write_file(norm_path, dump(features::normalizer_to_json(normalizer)));
    out << fmt::format("rows {} (train {}, validation {}, test {}), {} features ({})\n", dataset.rows.size(),
                       dataset.count(features::Split::Train), dataset.count(features::Split::Validation),
                       dataset.count(features::Split::Test), dataset.feature_count(),
                       features::mode_name(config.pipeline.mode));
    out << "dataset " << csv_path.string() << "\nnormalizer " << norm_path.string() << '\n';
    return 0;
}

int cmd_train(const Common& common, const TrainArgs& a, std::ostream& out)
{
    const auto config = resolve_config(common);
    const auto optimizers = optimizers_from(a.optimizer);
    const auto dataset = read_dataset(or_default(a.dataset, config.output_dir / "dataset.csv"));
    const auto normalizer =
        features::normalizer_from_json(read_json(or_default(a.normalizer, config.output_dir / "normalizer.json")));
    check_pair(dataset, normalizer);

    for (const auto opt : optimizers) {
        const auto seed = a.seed.value_or(config.train_config(opt).seed);
        const auto run = train_locator(config, dataset, normalizer, opt, seed);
        const std::string name(nn::optimizer_name(opt));
        const auto model_path = config.output_dir / ("model_" + name + ".json");
        text::write_file(model_path, dump(locator_to_json(run.locator)));
        text::write_file(config.output_dir / ("report_" + name + ".csv"), nn::report_to_csv(run.report));
        render_fit_svg(run.report, fit_panels(run.locator, dataset), config.output_dir / ("fit_" + name + ".svg"));

        const auto& r = run.report;
        out << fmt::format("{}: {} epochs, stop {}, best epoch {}, train mse {:.6E}", name, r.epochs(),
                           optim::stop_reason_name(r.stop_reason), r.best_epoch,
                           r.train_mse[static_cast<std::size_t>(r.best_epoch)]);
        const double v = r.validation_mse[static_cast<std::size_t>(r.best_epoch)];
        if (!std::isnan(v))
            out << fmt::format(", validation mse {:.6E}", v);
        out << "\nmodel " << model_path.string() << '\n';
    }
    return 0;
}

std::string column_name(const Locator& locator, const std::vector<Locator>& all)
{
    std::string name = "TRAIN";
    for (const char c : nn::optimizer_name(locator.optimizer))
        name += static_cast<char>(std::toupper(static_cast<unsigned char>(c)));
    const auto same = std::count_if(all.begin(), all.end(),
                                     [&](const Locator& l) { return l.optimizer == locator.optimizer; });
    if (same > 1)
        name += "_s" + std::to_string(locator.seed);
    return name;
}

int cmd_eval(const Common& common, const EvalArgs& a, std::ostream& out)
{
    const auto config = resolve_config(common);

    std::vector<fs::path> paths(a.models.begin(), a.models.end());
    if (paths.empty()) {
        for (const auto opt : {nn::Optimizer::Gdx, nn::Optimizer::Scg, nn::Optimizer::Cgb}) {
            auto p = config.output_dir / ("model_" + std::string(nn::optimizer_name(opt)) + ".json");
            if (fs::exists(p))
                paths.push_back(std::move(p));
        }
        if (paths.empty())
            throw Error(Errc::Usage, "--model: no model files given and none found in " + config.output_dir.string());
    }
    std::vector<Locator> locators;
    for (const auto& p : paths)
        locators.push_back(locator_from_json(read_json(p)));

    std::vector<features::DatasetRow> rows;
    if (a.rf_ohm) {
        if (!(*a.rf_ohm >= 0.0))
            throw Error(Errc::Usage, "--rf-ohm must be >= 0");
        rows = resimulate_rows(config, *a.rf_ohm);
    } else {
        std::optional<features::Split> split;
        if (a.split != "all") {
            try {
                split = features::parse_split(a.split);
            } catch (const Error& e) {
                throw Error(Errc::Usage, std::string("--split: ") + e.what());
            }
        }
        const auto dataset = read_dataset(or_default(a.dataset, config.output_dir / "dataset.csv"));
        rows = select_rows(dataset, split);
        if (rows.empty())
            throw Error(Errc::Usage, "--split: no rows in split '" + a.split + "'");
    }

    std::vector<ResultsTable> tables;
    for (const auto& l : locators)
        tables.push_back(evaluate_locator(l.model, l.normalizer, rows, column_name(l, locators)));
    const auto table = merge_results(tables);

    const auto csv_path = config.output_dir / "results.csv";
    const auto txt_path = config.output_dir / "results.txt";
    const auto txt = results_to_text(table);
    text::write_file(csv_path, results_to_csv(table));
    text::write_file(txt_path, txt);
    out << txt;
    return 0;
}

int cmd_plot(const Common& common, const PlotArgs& a, std::ostream& out)
{
    const auto config = resolve_config(common);
    if (!a.locus.empty() == !a.model.empty())
        throw Error(Errc::Usage, "plot: give exactly one of --locus or --model");
    if (!a.locus.empty()) {
        render_rx_svg(relay::locus_from_csv(text::read_file(a.locus)), config.zone(), a.out);
    } else {
        if (a.report.empty())
            throw Error(Errc::Usage, "--report is required with --model");
        const auto locator = locator_from_json(read_json(a.model));
        const auto dataset = read_dataset(or_default(a.dataset, config.output_dir / "dataset.csv"));
        const auto report = report_from_csv(text::read_file(a.report), locator.optimizer);
        render_fit_svg(report, fit_panels(locator, dataset), a.out);
    }
    out << "svg " << a.out << '\n';
    return 0;
}

} // namespace

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err)
{
    CLI::App app{"Fault location on a distance-protected line: simulate, build datasets, train, evaluate, plot.",
                 "hifloc"};
    app.require_subcommand(1);
    app.fallthrough();

    Common common;
    app.add_option("--config", common.config_path, "experiment configuration (JSON)")->check(CLI::ExistingFile);
    app.add_option("--out-dir", common.out_dir, "output directory, overrides the configuration");

    SimulateArgs sim;
    auto* simulate = app.add_subcommand("simulate", "one fault scenario: locus CSV and trip decision");
    simulate->add_option("--distance-km", sim.distance_km, "fault distance from the relay")->required();
    simulate->add_option("--rf-ohm", sim.rf_ohm, "fault resistance")->required();
    simulate->add_option("--inception-s", sim.inception_s, "fault inception time");
    simulate->add_option("--locus", sim.locus, "locus CSV path (default <out-dir>/locus.csv)");
    simulate->add_option("--waveforms", sim.waveforms, "also write the sampled waveforms");
    simulate->add_option("--svg", sim.svg, "also write the R-X diagram");

    auto* dataset = app.add_subcommand("dataset", "simulate the grid: dataset.csv and normalizer.json");

    TrainArgs tr;
    auto* train = app.add_subcommand("train", "train locators: model_<opt>.json, report_<opt>.csv, fit_<opt>.svg");
    train->add_option("--optimizer", tr.optimizer, "gdx, scg, cgb or all")->capture_default_str();
    train->add_option("--seed", tr.seed, "weight initialization seed");
    train->add_option("--dataset", tr.dataset, "dataset CSV (default <out-dir>/dataset.csv)");
    train->add_option("--normalizer", tr.normalizer, "normalizer JSON (default <out-dir>/normalizer.json)");

    EvalArgs ev;
    auto* eval = app.add_subcommand("eval", "evaluate model files: results.csv and results.txt");
    eval->add_option("--model", ev.models, "model file, repeatable (default: every model in <out-dir>)");
    eval->add_option("--dataset", ev.dataset, "dataset CSV (default <out-dir>/dataset.csv)");
    eval->add_option("--split", ev.split, "train, validation, test or all")->capture_default_str();
    eval->add_option("--rf-ohm", ev.rf_ohm, "re-simulate the configured distances at this resistance");

    PlotArgs pl;
    auto* plot = app.add_subcommand("plot", "R-X diagram from a locus, or regression fit from a model");
    plot->add_option("--locus", pl.locus, "locus CSV");
    plot->add_option("--model", pl.model, "model file");
    plot->add_option("--report", pl.report, "training report CSV");
    plot->add_option("--dataset", pl.dataset, "dataset CSV (default <out-dir>/dataset.csv)");
    plot->add_option("--out", pl.out, "SVG path")->required();

    std::vector<std::string> reversed(args.rbegin(), args.rend());
    try {
        app.parse(reversed);
    } catch (const CLI::CallForHelp&) {
        out << app.help();
        return 0;
    } catch (const CLI::CallForAllHelp&) {
        out << app.help("", CLI::AppFormatMode::All);
        return 0;
    } catch (const CLI::ParseError& e) {
        err << "hifloc: " << e.what() << "\n\n" << app.help();
        return exit_code(ErrorCategory::Usage);
    }

    try {
        if (simulate->parsed())
            return cmd_simulate(common, sim, out);
        if (dataset->parsed())
            return cmd_dataset(common, out);
        if (train->parsed())
            return cmd_train(common, tr, out);
        if (eval->parsed())
            return cmd_eval(common, ev, out);
        if (plot->parsed())
            return cmd_plot(common, pl, out);
    } catch (const Error& e) {
        err << "hifloc: " << e.what() << '\n';
        return exit_code(category_of(e.code()));
    } catch (const fs::filesystem_error& e) {
        err << "hifloc: " << e.what() << '\n';
        return exit_code(ErrorCategory::Io);
    } catch (const std::exception& e) {
        err << "hifloc: internal error: " << e.what() << '\n';
        return 1;
    }
    err << app.help();
    return exit_code(ErrorCategory::Usage);
}

} // namespace hifloc::harness
