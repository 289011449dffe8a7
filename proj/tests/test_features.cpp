#include "hifloc/error.hpp"
#include "hifloc/features.hpp"
#include "hifloc/text.hpp"

#include "oracles/generators.hpp"
#include "oracles/nodal.hpp"

#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>

using namespace hifloc;
using namespace hifloc::features;

namespace {

relay::ImpedanceLocus polyline(std::initializer_list<Complex> zs)
{
    relay::ImpedanceLocus l;
    double t = 0.0;
    for (const auto z : zs)
        l.points.push_back({t += 0.001, z});
    return l;
}

// Unit-square window so grid coordinates are z scaled by n.
const RasterWindow kUnit{0.0, 1.0, 0.0, 1.0};

std::size_t total_visits(const RasterImage& img)
{
    std::size_t s = 0;
    for (const auto c : img.grid)
        s += c;
    return s;
}

// Bresenham visits max(|dc|, |dr|) + 1 pixels per segment.
std::size_t chebyshev_pixels(int c0, int r0, int c1, int r1)
{
    return static_cast<std::size_t>(std::max(std::abs(c1 - c0), std::abs(r1 - r0))) + 1;
}

Dataset toy_dataset()
{
    Dataset d;
    const double rows[][3] = {{1.0, 10.0, 5.0}, {3.0, 10.0, 20.0}, {2.0, 10.0, 35.0}, {9.0, 10.0, 50.0}};
    const Split splits[] = {Split::Train, Split::Train, Split::Train, Split::Test};
    for (int i = 0; i < 4; ++i)
        d.rows.push_back({FeatureVector{{rows[i][0], rows[i][1]}, FeatureMode::Focal}, rows[i][2], splits[i]});
    return d;
}

} // namespace

TEST(Raster, SinglePointAndMaxEdge)
{
    const int n = 10;
    auto img = rasterize_locus(polyline({{0.55, 0.55}}), kUnit, n);
    EXPECT_EQ(img.lit_pixels(), 1u);
    EXPECT_EQ(img.at(4, 5), 1u);  // row 0 is the top (x_max)

    img = rasterize_locus(polyline({{1.0, 0.0}}), kUnit, n);
    EXPECT_EQ(img.at(n - 1, n - 1), 1u);  // r_max, x_min corner
    img = rasterize_locus(polyline({{0.0, 1.0}}), kUnit, n);
    EXPECT_EQ(img.at(0, 0), 1u);
}

TEST(Raster, HorizontalRowAndDiagonal)
{
    const int n = 16;
    auto img = rasterize_locus(polyline({{0.01, 0.5 + 0.01}, {0.99, 0.5 + 0.01}}), kUnit, n);
    EXPECT_EQ(img.lit_pixels(), static_cast<std::size_t>(n));
    for (int c = 0; c < n; ++c)
        EXPECT_EQ(img.at(7, c), 1u);

    img = rasterize_locus(polyline({{0.0, 0.0}, {1.0, 1.0}}), kUnit, n);
    EXPECT_EQ(img.lit_pixels(), static_cast<std::size_t>(n));
    for (int k = 0; k < n; ++k)
        EXPECT_EQ(img.at(n - 1 - k, k), 1u);
}

TEST(Raster, VisitCountsMatchChebyshevOracle)
{
    // Random polylines inside the window: total visits equal the sum of
    // per-segment Bresenham lengths minus the shared vertices.
    Engine e(77);
    const int n = 32;
    for (int trial = 0; trial < 200; ++trial) {
        const int k = gen::integer(e, 2, 8);
        std::vector<std::pair<int, int>> cells;
        relay::ImpedanceLocus locus;
        for (int i = 0; i < k; ++i) {
            const int c = gen::integer(e, 0, n - 1), r = gen::integer(e, 0, n - 1);
            cells.emplace_back(c, r);
            // Pixel centre, so the mapping is unambiguous.
            locus.points.push_back({0.001 * i, Complex{(c + 0.5) / n, 1.0 - (r + 0.5) / n}});
        }
        std::size_t expected = 0;
        for (int i = 0; i + 1 < k; ++i)
            expected += chebyshev_pixels(cells[i].first, cells[i].second, cells[i + 1].first, cells[i + 1].second);
        expected -= static_cast<std::size_t>(k - 2);
        const auto img = rasterize_locus(locus, kUnit, n);
        EXPECT_EQ(total_visits(img), expected) << "trial " << trial;
        for (const auto& [c, r] : cells)
            EXPECT_GT(img.at(r, c), 0u);
    }
}

TEST(Raster, ClipsOutsideSegments)
{
    const int n = 10;
    // Crosses the window horizontally from far left to far right.
    auto img = rasterize_locus(polyline({{-5.0, 0.55}, {6.0, 0.55}}), kUnit, n);
    EXPECT_EQ(img.lit_pixels(), static_cast<std::size_t>(n));
    // Entirely outside.
    img = rasterize_locus(polyline({{-5.0, -5.0}, {-4.0, -3.0}}), kUnit, n);
    EXPECT_EQ(img.lit_pixels(), 0u);
}

TEST(Raster, Errors)
{
    EXPECT_THROW(rasterize_locus({}, kUnit, 10), Error);
    EXPECT_THROW(rasterize_locus(polyline({{0.5, 0.5}}), kUnit, 4), Error);
    EXPECT_THROW(rasterize_locus(polyline({{0.5, 0.5}}), RasterWindow{1.0, 0.0, 0.0, 1.0}, 10), Error);
}

TEST(Focal, SettledValuesMatchNodalOracle)
{
    PipelineConfig cfg;
    const auto& net = cfg.network;
    const Complex k0 = cfg.k0();
    for (const auto& [d, rf] : {std::pair{25.0, 50.0}, std::pair{10.0, 100.0}, std::pair{45.0, 0.0}}) {
        const auto f = scenario_features({d, rf, 0.04}, cfg);
        ASSERT_EQ(f.values.size(), 4u);
        const auto ref = oracle::nodal_solve(net, d, rf);
        const Complex ires = ref.i_relay[0] + ref.i_relay[1] + ref.i_relay[2];
        const Complex z = ref.v_relay[0] / (ref.i_relay[0] + k0 * ires);
        EXPECT_NEAR(f.values[0], z.real(), 1e-7 * std::abs(z)) << d << " " << rf;
        EXPECT_NEAR(f.values[1], z.imag(), 1e-7 * std::abs(z)) << d << " " << rf;
        EXPECT_GT(f.values[2], 0.0);
        EXPECT_GE(f.values[3], -180.0);
        EXPECT_LE(f.values[3], 180.0);
    }
}

TEST(Focal, ArcAndLastChord)
{
    const auto locus = polyline({{0.0, 0.0}, {3.0, 4.0}, {3.0, 4.0}, {3.0, 5.0}, {3.0, 5.0}});
    const auto img = rasterize_locus(locus, RasterWindow{}, 32);
    const auto f = extract_focal_features(locus, img, FeatureMode::Focal, 2);
    EXPECT_DOUBLE_EQ(f.values[0], 3.0);
    EXPECT_DOUBLE_EQ(f.values[1], 5.0);
    EXPECT_DOUBLE_EQ(f.values[2], 6.0);
    EXPECT_DOUBLE_EQ(f.values[3], 90.0);

    const auto still = polyline({{1.0, 1.0}, {1.0, 1.0}});
    const auto g = extract_focal_features(still, rasterize_locus(still, RasterWindow{}, 32), FeatureMode::Focal, 20);
    EXPECT_EQ(g.values[2], 0.0);
    EXPECT_EQ(g.values[3], 0.0);
}

TEST(Focal, PixelModeIsBinaryImage)
{
    const auto locus = polyline({{0.05, 0.05}, {0.95, 0.95}, {0.05, 0.05}});
    const auto img = rasterize_locus(locus, kUnit, 8);
    const auto f = extract_focal_features(locus, img, FeatureMode::Pixels, 20);
    ASSERT_EQ(f.values.size(), 64u);
    for (std::size_t i = 0; i < 64; ++i)
        EXPECT_EQ(f.values[i], img.grid[i] > 0 ? 1.0 : 0.0);
}

TEST(Normalize, TrainingExtremaMapToBounds)
{
    const auto d = toy_dataset();
    const auto p = fit_normalizer(d, {0.0, 60.0});
    ASSERT_EQ(p.features.size(), 2u);
    EXPECT_EQ(p.features[0].min, 1.0);
    EXPECT_EQ(p.features[0].max, 3.0);  // test row (9.0) is excluded
    EXPECT_EQ(p.forward(1.0, p.features[0]), 0.1);
    EXPECT_EQ(p.forward(3.0, p.features[0]), 0.9);
    EXPECT_EQ(p.forward(10.0, p.features[1]), 0.5);  // degenerate feature
    EXPECT_EQ(p.inverse(0.5, p.features[1]), 10.0);
    EXPECT_EQ(p.normalize_target(0.0), 0.1);
    EXPECT_EQ(p.normalize_target(60.0), 0.9);
}

TEST(Normalize, RoundTripProperty)
{
    Engine e(3);
    for (int trial = 0; trial < 200; ++trial) {
        Dataset d;
        const int k = gen::integer(e, 1, 6);
        const int rows = gen::integer(e, 2, 30);
        const double scale = std::pow(10.0, gen::uniform(e, -3.0, 4.0));
        for (int r = 0; r < rows; ++r) {
            FeatureVector f;
            for (int i = 0; i < k; ++i)
                f.values.push_back(gen::uniform(e, -1.0, 1.0) * scale);
            d.rows.push_back({f, gen::uniform(e, 1.0, 59.0), r == 0 || gen::uniform(e, 0.0, 1.0) < 0.7 ? Split::Train : Split::Test});
        }
        const auto p = fit_normalizer(d, {0.0, 60.0});
        for (const auto& row : d.rows) {
            const auto y = apply_normalizer(row.features, p, Direction::Forward);
            const auto back = apply_normalizer(y, p, Direction::Inverse);
            for (int i = 0; i < k; ++i) {
                // A constant training feature carries no scale to invert.
                if (!p.features[i].degenerate() || row.split == Split::Train) {
                    EXPECT_LT(std::abs(back.values[i] - row.features.values[i]), 1e-12 * scale);
                }
                if (row.split == Split::Train) {
                    EXPECT_GE(y.values[i], 0.1 - 1e-15);
                    EXPECT_LE(y.values[i], 0.9 + 1e-15);
                }
            }
            EXPECT_LT(std::abs(p.denormalize_target(p.normalize_target(row.target_km)) - row.target_km), 1e-12 * 60.0);
        }
        // Training extrema land exactly on the bounds.
        for (int i = 0; i < k; ++i) {
            if (p.features[i].degenerate())
                continue;
            EXPECT_EQ(p.forward(p.features[i].min, p.features[i]), 0.1);
            EXPECT_EQ(p.forward(p.features[i].max, p.features[i]), 0.9);
        }
    }
}

TEST(Normalize, Errors)
{
    Dataset d = toy_dataset();
    for (auto& r : d.rows)
        r.split = Split::Test;
    try {
        fit_normalizer(d, {0.0, 60.0});
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.code(), Errc::EmptyDataset);
    }
    const auto p = fit_normalizer(toy_dataset(), {0.0, 60.0});
    try {
        apply_normalizer(FeatureVector{{1.0, 2.0, 3.0}, FeatureMode::Focal}, p, Direction::Forward);
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.code(), Errc::DimensionMismatch);
    }
}

TEST(Normalize, JsonRoundTrip)
{
    const auto p = fit_normalizer(toy_dataset(), {0.0, 60.0});
    const auto back = normalizer_from_json(nlohmann::json::parse(normalizer_to_json(p).dump()));
    ASSERT_EQ(back.features.size(), p.features.size());
    for (std::size_t i = 0; i < p.features.size(); ++i) {
        EXPECT_EQ(back.features[i].min, p.features[i].min);
        EXPECT_EQ(back.features[i].max, p.features[i].max);
    }
    EXPECT_EQ(back.target.max, 60.0);
}

TEST(Splits, PartitionCountsAndDeterminism)
{
    Engine e(9);
    for (int trial = 0; trial < 100; ++trial) {
        const auto count = static_cast<std::size_t>(gen::integer(e, 1, 400));
        const SplitRatios ratios{0.70, 0.15, 0.15};
        const auto seed = e();
        const auto a = assign_splits(count, ratios, seed);
        EXPECT_EQ(a, assign_splits(count, ratios, seed));
        ASSERT_EQ(a.size(), count);
        const auto n_train = static_cast<double>(std::count(a.begin(), a.end(), Split::Train));
        const auto n_val = static_cast<double>(std::count(a.begin(), a.end(), Split::Validation));
        const auto n_test = static_cast<double>(std::count(a.begin(), a.end(), Split::Test));
        EXPECT_EQ(n_train + n_val + n_test, static_cast<double>(count));
        EXPECT_LE(std::abs(n_train - 0.70 * count), 1.0);
        EXPECT_LE(std::abs(n_val - 0.15 * count), 1.0);
        EXPECT_LE(std::abs(n_test - 0.15 * count), 1.5);
    }
}

TEST(Splits, DifferentSeedsShuffleDifferently)
{
    EXPECT_NE(assign_splits(230, {}, 1), assign_splits(230, {}, 2));
    const auto all_train = assign_splits(20, {1.0, 0.0, 0.0}, 1);
    EXPECT_EQ(std::count(all_train.begin(), all_train.end(), Split::Train), 20);
}

TEST(Grid, PaperAndAugmented)
{
    const auto paper = make_grid(paper_distances(), paper_resistances(), 0.04);
    EXPECT_EQ(paper.size(), 20u);
    EXPECT_EQ(paper.front().distance_km, 5.0);
    EXPECT_EQ(paper.front().rf_ohm, 50.0);
    EXPECT_EQ(paper[1].rf_ohm, 100.0);
    EXPECT_EQ(paper.back().distance_km, 50.0);
    const auto aug = make_grid(augmented_distances(), augmented_resistances(), 0.04);
    EXPECT_EQ(aug.size(), 46u * 5u);
}

TEST(Dataset, BuildIsDeterministicAcrossThreadCounts)
{
    PipelineConfig one;
    one.threads = 1;
    PipelineConfig four = one;
    four.threads = 4;
    const auto grid = make_grid(paper_distances(), paper_resistances(), 0.04);
    const auto a = dataset_to_csv(build_dataset(grid, one));
    const auto b = dataset_to_csv(build_dataset(grid, four));
    EXPECT_EQ(a, b);
}

TEST(Dataset, CsvCarriesFocalRowAt25km50ohm)
{
    PipelineConfig cfg;
    cfg.ratios = {1.0, 0.0, 0.0};
    const auto grid = make_grid(paper_distances(), paper_resistances(), 0.04);
    const auto csv = dataset_to_csv(build_dataset(grid, cfg));
    const auto table = text::parse_csv(csv);
    EXPECT_EQ(table.header, (std::vector<std::string>{"f1", "f2", "f3", "f4", "target_km", "split"}));
    ASSERT_EQ(table.rows.size(), 20u);
    // Row order follows the grid: distance outer, resistance inner.
    const auto& row = table.rows[8];
    EXPECT_EQ(row[4], "25");
    EXPECT_EQ(row[5], "train");

    const auto ref = oracle::nodal_solve(cfg.network, 25.0, 50.0);
    const Complex ires = ref.i_relay[0] + ref.i_relay[1] + ref.i_relay[2];
    const Complex z = ref.v_relay[0] / (ref.i_relay[0] + cfg.k0() * ires);
    EXPECT_NEAR(text::parse_double(row[0]), z.real(), 1e-7 * std::abs(z));
    EXPECT_NEAR(text::parse_double(row[1]), z.imag(), 1e-7 * std::abs(z));

    const auto back = dataset_from_csv(csv);
    EXPECT_EQ(dataset_to_csv(back), csv);
}

TEST(Dataset, ScenarioErrorsNameTheScenario)
{
    PipelineConfig cfg;
    const std::vector<netmodel::FaultScenario> bad{{10.0, 50.0, 0.04}, {80.0, 50.0, 0.04}};
    try {
        build_dataset(bad, cfg);
        FAIL();
    } catch (const Error& e) {
        EXPECT_NE(std::string(e.what()).find("d=80"), std::string::npos) << e.what();
    }
}
