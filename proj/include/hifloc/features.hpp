#pragma once

#include "hifloc/netmodel.hpp"
#include "hifloc/relay.hpp"

#include <json.hpp>

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

namespace hifloc::features {

struct RasterWindow {
    double r_min = -10.0;
    double r_max = 120.0;
    double x_min = -10.0;
    double x_max = 60.0;

    void validate() const;
};

/// Visit counts on an n x n grid, row-major, row 0 at x_max.
struct RasterImage {
    RasterWindow window;
    int n = 0;
    std::vector<unsigned> grid;

    unsigned at(int row, int col) const { return grid[static_cast<std::size_t>(row * n + col)]; }
    std::size_t lit_pixels() const;
};

enum class FeatureMode { Focal, Pixels };

std::string_view mode_name(FeatureMode mode);
FeatureMode parse_mode(std::string_view name);

struct FeatureVector {
    std::vector<double> values;
    FeatureMode mode = FeatureMode::Focal;
};

struct ValueRange {
    double min = 0.0;
    double max = 0.0;

    bool degenerate() const { return max == min; }
};

/// Min-max scaling of every feature (and the target) into [lo, hi].
struct NormalizationParams {
    std::vector<ValueRange> features;
    ValueRange target;
    double lo = 0.1;
    double hi = 0.9;

    double forward(double x, const ValueRange& range) const;
    double inverse(double y, const ValueRange& range) const;
    double normalize_target(double km) const { return forward(km, target); }
    double denormalize_target(double y) const { return inverse(y, target); }
};

enum class Direction { Forward, Inverse };

enum class Split { Train, Validation, Test };

std::string_view split_name(Split split);
Split parse_split(std::string_view name);

struct DatasetRow {
    FeatureVector features;
    double target_km = 0.0;
    Split split = Split::Train;
};

struct Dataset {
    std::vector<DatasetRow> rows;
    std::uint64_t seed = 0;

    std::size_t feature_count() const { return rows.empty() ? 0 : rows.front().features.values.size(); }
    std::size_t count(Split split) const;
};

struct SplitRatios {
    double train = 0.70;
    double validation = 0.15;
    double test = 0.15;
};

/// Everything needed to turn a fault scenario into a dataset row.
struct PipelineConfig {
    netmodel::Network network = netmodel::default_network();
    int samples_per_cycle = 20;
    double duration_s = 0.1;
    bool dc_offset = false;
    bool compensated = true;  // k0 = 0 when false
    RasterWindow window;
    int raster_n = 32;
    FeatureMode mode = FeatureMode::Focal;
    SplitRatios ratios;
    std::uint64_t split_seed = 1;
    unsigned threads = 0;  // 0: hardware concurrency

    netmodel::WaveformOptions waveform_options() const;
    Complex k0() const;
};

RasterImage rasterize_locus(const relay::ImpedanceLocus& locus, const RasterWindow& window, int n);

/// Focal mode: settled R and X (component-wise median over the final cycle of
/// points), total arc length, and the angle of the last non-negligible chord
/// in degrees. Pixels mode: the binary image, row-major.
FeatureVector extract_focal_features(const relay::ImpedanceLocus& locus, const RasterImage& image,
                                     FeatureMode mode, int samples_per_cycle);

/// Per-feature extrema over the training rows only.
NormalizationParams fit_normalizer(const Dataset& dataset, ValueRange target_bounds);

FeatureVector apply_normalizer(const FeatureVector& x, const NormalizationParams& params,
                               Direction direction);

/// Simulates one scenario through to its impedance locus.
relay::ImpedanceLocus scenario_locus(const netmodel::FaultScenario& scenario,
                                     const PipelineConfig& config);

FeatureVector scenario_features(const netmodel::FaultScenario& scenario, const PipelineConfig& config);

/// Rows follow the scenario order; the split is drawn from `split_seed`.
Dataset build_dataset(const std::vector<netmodel::FaultScenario>& scenarios, const PipelineConfig& config);

/// Deterministic partition with per-split counts within one row of the ratios.
std::vector<Split> assign_splits(std::size_t count, const SplitRatios& ratios, std::uint64_t seed);

std::vector<netmodel::FaultScenario> make_grid(const std::vector<double>& distances_km,
                                               const std::vector<double>& resistances_ohm,
                                               double inception_s);
std::vector<double> paper_distances();
std::vector<double> paper_resistances();
std::vector<double> augmented_distances();
std::vector<double> augmented_resistances();

std::string dataset_to_csv(const Dataset& dataset);
Dataset dataset_from_csv(const std::string& content);

nlohmann::json normalizer_to_json(const NormalizationParams& params);
NormalizationParams normalizer_from_json(const nlohmann::json& doc);

} // namespace hifloc::features
