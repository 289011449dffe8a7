#include "hifloc/features.hpp"

#include "hifloc/error.hpp"
#include "hifloc/random.hpp"
#include "hifloc/text.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <exception>
#include <numbers>
#include <optional>
#include <thread>

namespace hifloc::features {

namespace {

struct GridPoint {
    double u;  // column coordinate in [0, n]
    double v;  // row coordinate in [0, n]
};

struct Pixel {
    int col;
    int row;

    bool operator==(const Pixel&) const = default;
};

GridPoint to_grid(Complex z, const RasterWindow& w, int n)
{
    return {(z.real() - w.r_min) / (w.r_max - w.r_min) * n, (w.x_max - z.imag()) / (w.x_max - w.x_min) * n};
}

bool inside(const GridPoint& p, int n)
{
    return p.u >= 0.0 && p.u <= n && p.v >= 0.0 && p.v <= n;
}

Pixel to_pixel(const GridPoint& p, int n)
{
    return {std::min(static_cast<int>(std::floor(p.u)), n - 1), std::min(static_cast<int>(std::floor(p.v)), n - 1)};
}

// Liang-Barsky clip of a segment against [0, n] x [0, n].
std::optional<std::pair<GridPoint, GridPoint>> clip(GridPoint a, GridPoint b, int n)
{
    const double du = b.u - a.u;
    const double dv = b.v - a.v;
    double t0 = 0.0;
    double t1 = 1.0;
    const double p[4] = {-du, du, -dv, dv};
    const double q[4] = {a.u, n - a.u, a.v, n - a.v};
    for (int k = 0; k < 4; ++k) {
        if (p[k] == 0.0) {
            if (q[k] < 0.0)
                return std::nullopt;
            continue;
        }
        const double t = q[k] / p[k];
        if (p[k] < 0.0)
            t0 = std::max(t0, t);
        else
            t1 = std::min(t1, t);
        if (t0 > t1)
            return std::nullopt;
    }
    const GridPoint start = t0 == 0.0 ? a : GridPoint{a.u + t0 * du, a.v + t0 * dv};
    const GridPoint end = t1 == 1.0 ? b : GridPoint{a.u + t1 * du, a.v + t1 * dv};
    return std::pair{start, end};
}

template <typename Visit>
void bresenham(Pixel from, Pixel to, Visit&& visit)
{
    const int dx = std::abs(to.col - from.col);
    const int dy = -std::abs(to.row - from.row);
    const int sx = from.col < to.col ? 1 : -1;
    const int sy = from.row < to.row ? 1 : -1;
    int err = dx + dy;
    Pixel p = from;
    while (true) {
        visit(p);
        if (p == to)
            break;
        const int e2 = 2 * err;
        if (e2 >= dy) {
            err += dy;
            p.col += sx;
        }
        if (e2 <= dx) {
            err += dx;
            p.row += sy;
        }
    }
}

double median(std::vector<double> values)
{
    std::sort(values.begin(), values.end());
    const auto mid = values.size() / 2;
    return values.size() % 2 ? values[mid] : 0.5 * (values[mid - 1] + values[mid]);
}

template <typename Fn>
void parallel_for(std::size_t count, unsigned threads, Fn&& fn)
{
    if (threads == 0)
        threads = std::max(1u, std::thread::hardware_concurrency());
    threads = static_cast<unsigned>(std::min<std::size_t>(threads, count));
    if (threads <= 1) {
        for (std::size_t i = 0; i < count; ++i)
            fn(i);
        return;
    }
    std::atomic<std::size_t> next{0};
    std::vector<std::jthread> pool;
    for (unsigned t = 0; t < threads; ++t)
        pool.emplace_back([&] {
            for (auto i = next++; i < count; i = next++)
                fn(i);
        });
}

} // namespace

void RasterWindow::validate() const
{
    if (!(r_max > r_min) || !(x_max > x_min))
        throw Error(Errc::InvalidParameter, "raster window must have positive extent");
}

std::size_t RasterImage::lit_pixels() const
{
    return static_cast<std::size_t>(std::count_if(grid.begin(), grid.end(), [](unsigned c) { return c > 0; }));
}

std::string_view mode_name(FeatureMode mode)
{
    return mode == FeatureMode::Focal ? "focal" : "pixels";
}

FeatureMode parse_mode(std::string_view name)
{
    if (name == "focal")
        return FeatureMode::Focal;
    if (name == "pixels")
        return FeatureMode::Pixels;
    throw Error(Errc::Usage, "unknown feature mode '" + std::string(name) + "'");
}

std::string_view split_name(Split split)
{
    switch (split) {
    case Split::Train: return "train";
    case Split::Validation: return "validation";
    case Split::Test: return "test";
    }
    return "train";
}

Split parse_split(std::string_view name)
{
    if (name == "train")
        return Split::Train;
    if (name == "validation")
        return Split::Validation;
    if (name == "test")
        return Split::Test;
    throw Error(Errc::Usage, "unknown split '" + std::string(name) + "'");
}

std::size_t Dataset::count(Split split) const
{
    return static_cast<std::size_t>(
        std::count_if(rows.begin(), rows.end(), [split](const DatasetRow& r) { return r.split == split; }));
}

double NormalizationParams::forward(double x, const ValueRange& range) const
{
    if (range.degenerate())
        return 0.5 * (lo + hi);
    return lo + (hi - lo) * ((x - range.min) / (range.max - range.min));
}

double NormalizationParams::inverse(double y, const ValueRange& range) const
{
    if (range.degenerate())
        return range.min;
    return range.min + (y - lo) / (hi - lo) * (range.max - range.min);
}

netmodel::WaveformOptions PipelineConfig::waveform_options() const
{
    netmodel::WaveformOptions opts;
    opts.sample_rate_hz = samples_per_cycle * network.line.f_hz;
    opts.duration_s = duration_s;
    opts.dc_offset = dc_offset;
    return opts;
}

Complex PipelineConfig::k0() const
{
    if (!compensated)
        return {};
    return relay::residual_compensation_factor(network.line.z1_per_km, network.line.z0_per_km);
}

RasterImage rasterize_locus(const relay::ImpedanceLocus& locus, const RasterWindow& window, int n)
{
    if (locus.empty())
        throw Error(Errc::EmptyLocus, "cannot rasterize an empty locus");
    if (n < 8)
        throw Error(Errc::InvalidParameter, "raster side must be at least 8");
    window.validate();

    RasterImage image{window, n, std::vector<unsigned>(static_cast<std::size_t>(n * n), 0u)};
    auto mark = [&](Pixel p) { ++image.grid[static_cast<std::size_t>(p.row * n + p.col)]; };

    const auto& pts = locus.points;
    if (pts.size() == 1) {
        const auto g = to_grid(pts.front().z, window, n);
        if (inside(g, n))
            mark(to_pixel(g, n));
        return image;
    }
    for (std::size_t i = 0; i + 1 < pts.size(); ++i) {
        const auto a = to_grid(pts[i].z, window, n);
        const auto b = to_grid(pts[i + 1].z, window, n);
        const auto clipped = clip(a, b, n);
        if (!clipped)
            continue;
        // A vertex shared with the previous segment is counted once.
        const bool skip_first = i > 0 && inside(a, n);
        const Pixel first = to_pixel(clipped->first, n);
        bresenham(first, to_pixel(clipped->second, n), [&](Pixel p) {
            if (!(skip_first && p == first))
                mark(p);
        });
    }
    return image;
}

FeatureVector extract_focal_features(const relay::ImpedanceLocus& locus, const RasterImage& image,
                                     FeatureMode mode, int samples_per_cycle)
{
    FeatureVector out;
    out.mode = mode;
    if (mode == FeatureMode::Pixels) {
        out.values.reserve(image.grid.size());
        for (const auto count : image.grid)
            out.values.push_back(count > 0 ? 1.0 : 0.0);
        return out;
    }

    if (locus.empty())
        throw Error(Errc::EmptyLocus, "no locus points to extract features from");
    const auto& pts = locus.points;
    const auto tail = std::min<std::size_t>(pts.size(), static_cast<std::size_t>(std::max(samples_per_cycle, 1)));
    std::vector<double> rs;
    std::vector<double> xs;
    for (auto i = pts.size() - tail; i < pts.size(); ++i) {
        rs.push_back(pts[i].z.real());
        xs.push_back(pts[i].z.imag());
    }

    double arc = 0.0;
    for (std::size_t i = 1; i < pts.size(); ++i)
        arc += std::abs(pts[i].z - pts[i - 1].z);

    // Chords shorter than this are DFT rounding noise on a settled locus.
    const double min_chord = 1e-6 * arc;
    double angle = 0.0;
    for (auto i = pts.size(); i-- > 1;) {
        const Complex chord = pts[i].z - pts[i - 1].z;
        if (arc > 0.0 && std::abs(chord) > min_chord) {
            angle = std::arg(chord) * 180.0 / std::numbers::pi;
            break;
        }
    }

    out.values = {median(std::move(rs)), median(std::move(xs)), arc, angle};
    return out;
}

NormalizationParams fit_normalizer(const Dataset& dataset, ValueRange target_bounds)
{
    NormalizationParams params;
    params.target = target_bounds;
    bool seen = false;
    for (const auto& row : dataset.rows) {
        if (row.split != Split::Train)
            continue;
        const auto& v = row.features.values;
        if (!seen) {
            for (const double x : v)
                params.features.push_back({x, x});
            seen = true;
            continue;
        }
        if (v.size() != params.features.size())
            throw Error(Errc::DimensionMismatch, "dataset rows differ in feature count");
        for (std::size_t k = 0; k < v.size(); ++k) {
            params.features[k].min = std::min(params.features[k].min, v[k]);
            params.features[k].max = std::max(params.features[k].max, v[k]);
        }
    }
    if (!seen)
        throw Error(Errc::EmptyDataset, "no training rows to fit the normalizer on");
    return params;
}

FeatureVector apply_normalizer(const FeatureVector& x, const NormalizationParams& params, Direction direction)
{
    if (x.values.size() != params.features.size())
        throw Error(Errc::DimensionMismatch, "feature vector has " + std::to_string(x.values.size()) +
                                                 " values, normalizer expects " +
                                                 std::to_string(params.features.size()));
    FeatureVector out{std::vector<double>(x.values.size()), x.mode};
    for (std::size_t k = 0; k < x.values.size(); ++k)
        out.values[k] = direction == Direction::Forward ? params.forward(x.values[k], params.features[k])
                                                        : params.inverse(x.values[k], params.features[k]);
    return out;
}

relay::ImpedanceLocus scenario_locus(const netmodel::FaultScenario& scenario, const PipelineConfig& config)
{
    const auto waves = netmodel::simulate_scenario(config.network, scenario, config.waveform_options());
    return relay::track_locus(waves, config.samples_per_cycle, config.k0());
}

FeatureVector scenario_features(const netmodel::FaultScenario& scenario, const PipelineConfig& config)
{
    const auto locus = scenario_locus(scenario, config);
    const auto image = rasterize_locus(locus, config.window, config.raster_n);
    return extract_focal_features(locus, image, config.mode, config.samples_per_cycle);
}

std::vector<Split> assign_splits(std::size_t count, const SplitRatios& ratios, std::uint64_t seed)
{
    const double total = ratios.train + ratios.validation + ratios.test;
    if (!(ratios.train >= 0.0 && ratios.validation >= 0.0 && ratios.test >= 0.0 && total > 0.0))
        throw Error(Errc::InvalidParameter, "split ratios must be non-negative with a positive sum");
    const auto n = static_cast<double>(count);
    auto n_train = static_cast<std::size_t>(std::llround(n * ratios.train / total));
    auto n_val = static_cast<std::size_t>(std::llround(n * ratios.validation / total));
    n_train = std::min(n_train, count);
    n_val = std::min(n_val, count - n_train);
    if (ratios.test == 0.0)
        n_val = count - n_train;

    std::vector<Split> labels(count, Split::Test);
    std::fill_n(labels.begin(), n_train, Split::Train);
    std::fill_n(labels.begin() + static_cast<std::ptrdiff_t>(n_train), n_val, Split::Validation);

    Engine engine(seed);
    for (std::size_t i = count; i > 1; --i)
        std::swap(labels[i - 1], labels[uniform_below(engine, i)]);
    return labels;
}

Dataset build_dataset(const std::vector<netmodel::FaultScenario>& scenarios, const PipelineConfig& config)
{
    if (scenarios.empty())
        throw Error(Errc::EmptyDataset, "no scenarios to simulate");

    std::vector<FeatureVector> results(scenarios.size());
    std::vector<std::exception_ptr> failures(scenarios.size());
    parallel_for(scenarios.size(), config.threads, [&](std::size_t i) {
        try {
            results[i] = scenario_features(scenarios[i], config);
        } catch (...) {
            failures[i] = std::current_exception();
        }
    });
    for (std::size_t i = 0; i < scenarios.size(); ++i) {
        if (!failures[i])
            continue;
        const auto where = "scenario " + std::to_string(i) + " (d=" + text::format_double(scenarios[i].distance_km) +
                           " km, rf=" + text::format_double(scenarios[i].rf_ohm) + " ohm)";
        try {
            std::rethrow_exception(failures[i]);
        } catch (const Error& e) {
            throw Error(e.code(), where + ": " + e.what());
        }
    }

    const auto labels = assign_splits(scenarios.size(), config.ratios, config.split_seed);
    Dataset dataset;
    dataset.seed = config.split_seed;
    for (std::size_t i = 0; i < scenarios.size(); ++i)
        dataset.rows.push_back({std::move(results[i]), scenarios[i].distance_km, labels[i]});
    return dataset;
}

std::vector<netmodel::FaultScenario> make_grid(const std::vector<double>& distances_km,
                                               const std::vector<double>& resistances_ohm, double inception_s)
{
    std::vector<netmodel::FaultScenario> grid;
    for (const double d : distances_km)
        for (const double rf : resistances_ohm)
            grid.push_back({d, rf, inception_s, netmodel::FaultKind::PhaseAToGround});
    return grid;
}

std::vector<double> paper_distances()
{
    std::vector<double> d;
    for (int km = 5; km <= 50; km += 5)
        d.push_back(km);
    return d;
}

std::vector<double> paper_resistances() { return {50.0, 100.0}; }

std::vector<double> augmented_distances()
{
    std::vector<double> d;
    for (int km = 5; km <= 50; ++km)
        d.push_back(km);
    return d;
}

std::vector<double> augmented_resistances() { return {25.0, 50.0, 75.0, 100.0, 125.0}; }

std::string dataset_to_csv(const Dataset& dataset)
{
    std::string out;
    const auto k = dataset.feature_count();
    for (std::size_t i = 0; i < k; ++i)
        out += "f" + std::to_string(i + 1) + ",";
    out += "target_km,split\n";
    for (const auto& row : dataset.rows) {
        for (const double v : row.features.values) {
            out += text::format_double(v);
            out += ',';
        }
        out += text::format_double(row.target_km);
        out += ',';
        out += split_name(row.split);
        out += '\n';
    }
    return out;
}

Dataset dataset_from_csv(const std::string& content)
{
    const auto table = text::parse_csv(content);
    const auto target = table.column("target_km");
    const auto split = table.column("split");
    if (target != table.header.size() - 2 || split != table.header.size() - 1)
        throw Error(Errc::IoFailure, "dataset CSV must end with target_km,split");
    const auto k = target;
    const auto mode = k == 4 ? FeatureMode::Focal : FeatureMode::Pixels;
    Dataset dataset;
    for (const auto& fields : table.rows) {
        DatasetRow row;
        row.features.mode = mode;
        for (std::size_t i = 0; i < k; ++i)
            row.features.values.push_back(text::parse_double(fields[i]));
        row.target_km = text::parse_double(fields[target]);
        row.split = parse_split(fields[split]);
        dataset.rows.push_back(std::move(row));
    }
    if (dataset.rows.empty())
        throw Error(Errc::EmptyDataset, "dataset CSV has no rows");
    return dataset;
}

nlohmann::json normalizer_to_json(const NormalizationParams& params)
{
    nlohmann::json features = nlohmann::json::array();
    for (const auto& r : params.features)
        features.push_back({{"min", r.min}, {"max", r.max}});
    return {{"method", "d-min-max"},
            {"lo", params.lo},
            {"hi", params.hi},
            {"features", features},
            {"target_km", {{"min", params.target.min}, {"max", params.target.max}}}};
}

NormalizationParams normalizer_from_json(const nlohmann::json& doc)
{
    try {
        NormalizationParams params;
        params.lo = doc.at("lo").get<double>();
        params.hi = doc.at("hi").get<double>();
        for (const auto& f : doc.at("features"))
            params.features.push_back({f.at("min").get<double>(), f.at("max").get<double>()});
        params.target = {doc.at("target_km").at("min").get<double>(), doc.at("target_km").at("max").get<double>()};
        if (!(params.lo < params.hi))
            throw Error(Errc::IoFailure, "normalizer range must satisfy lo < hi");
        return params;
    } catch (const nlohmann::json::exception& e) {
        throw Error(Errc::IoFailure, std::string("malformed normalizer: ") + e.what());
    }
}

} // namespace hifloc::features
