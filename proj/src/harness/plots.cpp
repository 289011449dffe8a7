#include "hifloc/harness/plots.hpp"

#include "hifloc/error.hpp"
#include "hifloc/text.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <cmath>
#include <limits>

namespace hifloc::harness {

namespace {

struct Bounds {
    double x0 = std::numeric_limits<double>::infinity();
    double x1 = -std::numeric_limits<double>::infinity();
    double y0 = std::numeric_limits<double>::infinity();
    double y1 = -std::numeric_limits<double>::infinity();

    void add(double x, double y)
    {
        x0 = std::min(x0, x);
        x1 = std::max(x1, x);
        y0 = std::min(y0, y);
        y1 = std::max(y1, y);
    }

    void pad(double fraction)
    {
        double dx = x1 - x0, dy = y1 - y0;
        if (dx <= 0.0)
            dx = std::max(1.0, std::abs(x0));
        if (dy <= 0.0)
            dy = std::max(1.0, std::abs(y0));
        x0 -= fraction * dx;
        x1 += fraction * dx;
        y0 -= fraction * dy;
        y1 += fraction * dy;
    }
};

// Maps data coordinates into a pixel rectangle, y pointing up.
struct Frame {
    double left, top, width, height;
    Bounds b;
    double sx, sy;

    Frame(double left_, double top_, double width_, double height_, Bounds bounds, bool equal_aspect)
        : left(left_), top(top_), width(width_), height(height_), b(bounds)
    {
        sx = width / (b.x1 - b.x0);
        sy = height / (b.y1 - b.y0);
        if (equal_aspect) {
            const double s = std::min(sx, sy);
            // Re-centre the shorter span so one ohm is the same length on both axes.
            const double cx = 0.5 * (b.x0 + b.x1), cy = 0.5 * (b.y0 + b.y1);
            b.x0 = cx - 0.5 * width / s;
            b.x1 = cx + 0.5 * width / s;
            b.y0 = cy - 0.5 * height / s;
            b.y1 = cy + 0.5 * height / s;
            sx = sy = s;
        }
    }

    double px(double x) const { return left + (x - b.x0) * sx; }
    double py(double y) const { return top + height - (y - b.y0) * sy; }
};

std::string num(double v)
{
    // Avoid "-0.000" so byte output does not depend on the sign of tiny values.
    auto s = fmt::format("{:.3f}", v);
    if (s == "-0.000")
        s = "0.000";
    return s;
}

std::string svg_open(double width, double height)
{
    return fmt::format("<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n"
                       "<svg xmlns=\"http://www.w3.org/2000/svg\" version=\"1.1\" width=\"{}\" height=\"{}\" "
                       "viewBox=\"0 0 {} {}\">\n"
                       "<rect x=\"0\" y=\"0\" width=\"{}\" height=\"{}\" fill=\"white\"/>\n",
                       num(width), num(height), num(width), num(height), num(width), num(height));
}

std::string line(double x1, double y1, double x2, double y2, std::string_view style)
{
    return fmt::format("<line x1=\"{}\" y1=\"{}\" x2=\"{}\" y2=\"{}\" {}/>\n", num(x1), num(y1), num(x2), num(y2),
                       style);
}

std::string label(double x, double y, std::string_view anchor, std::string_view body)
{
    return fmt::format("<text x=\"{}\" y=\"{}\" font-family=\"sans-serif\" font-size=\"12\" text-anchor=\"{}\">{}</text>\n",
                       num(x), num(y), anchor, body);
}

void write_svg(const std::filesystem::path& out, const std::string& svg)
{
    text::write_file(out, svg);
}

} // namespace

std::string rx_svg(const relay::ImpedanceLocus& locus, const relay::MhoZone& zone)
{
    if (locus.empty())
        throw Error(Errc::EmptyLocus, "nothing to plot");
    zone.validate();

    const Complex c = zone.center();
    const double r = std::abs(c);
    const auto final_z = locus.points.back().z;

    // The pre-fault load point usually sits far outside the zone; points
    // beyond a few reaches are left to the clip path rather than the scale.
    Bounds b;
    b.add(0.0, 0.0);
    b.add(c.real() - r, c.imag() - r);
    b.add(c.real() + r, c.imag() + r);
    b.add(final_z.real(), final_z.imag());
    const double keep = 4.0 * zone.reach_ohm + std::abs(final_z);
    for (const auto& p : locus.points)
        if (std::abs(p.z) <= keep)
            b.add(p.z.real(), p.z.imag());
    b.pad(0.08);

    constexpr double W = 640.0, H = 520.0;
    const Frame f(60.0, 30.0, W - 90.0, H - 80.0, b, true);

    std::string svg = svg_open(W, H);
    svg += fmt::format("<defs><clipPath id=\"plot\"><rect x=\"{}\" y=\"{}\" width=\"{}\" height=\"{}\"/></clipPath></defs>\n",
                       num(f.left), num(f.top), num(f.width), num(f.height));
    svg += label(W / 2.0, 20.0, "middle", "Apparent impedance (ohm)");

    // Axes through the origin, clamped to the frame.
    const double ox = std::clamp(f.px(0.0), f.left, f.left + f.width);
    const double oy = std::clamp(f.py(0.0), f.top, f.top + f.height);
    svg += line(f.left, oy, f.left + f.width, oy, "stroke=\"black\" stroke-width=\"1\"");
    svg += line(ox, f.top, ox, f.top + f.height, "stroke=\"black\" stroke-width=\"1\"");
    svg += label(f.left + f.width, oy - 6.0, "end", "R");
    svg += label(ox + 6.0, f.top + 12.0, "start", "X");
    svg += label(f.left, f.top + f.height + 20.0, "start", fmt::format("R {} .. {}", num(f.b.x0), num(f.b.x1)));
    svg += label(f.left + f.width, f.top + f.height + 20.0, "end",
                 fmt::format("X {} .. {}", num(f.b.y0), num(f.b.y1)));

    svg += fmt::format("<circle cx=\"{}\" cy=\"{}\" r=\"{}\" fill=\"none\" stroke=\"steelblue\" stroke-width=\"1.5\" "
                       "clip-path=\"url(#plot)\"/>\n",
                       num(f.px(c.real())), num(f.py(c.imag())), num(r * f.sx));

    std::string pts;
    for (const auto& p : locus.points) {
        if (!pts.empty())
            pts += ' ';
        pts += num(f.px(p.z.real())) + "," + num(f.py(p.z.imag()));
    }
    svg += fmt::format("<polyline points=\"{}\" fill=\"none\" stroke=\"firebrick\" stroke-width=\"1.2\" "
                       "clip-path=\"url(#plot)\"/>\n",
                       pts);

    const double mx = f.px(final_z.real()), my = f.py(final_z.imag());
    svg += fmt::format("<rect x=\"{}\" y=\"{}\" width=\"6.000\" height=\"6.000\" fill=\"firebrick\"/>\n", num(mx - 3.0),
                       num(my - 3.0));
    svg += label(mx + 6.0, my - 6.0, "start",
                 fmt::format("{} + j{}", num(final_z.real()), num(final_z.imag())));
    svg += "</svg>\n";
    return svg;
}

void render_rx_svg(const relay::ImpedanceLocus& locus, const relay::MhoZone& zone, const std::filesystem::path& out)
{
    write_svg(out, rx_svg(locus, zone));
}

LineFit least_squares_fit(const std::vector<double>& x, const std::vector<double>& y)
{
    if (x.size() != y.size())
        throw Error(Errc::DimensionMismatch, "fit needs paired samples");
    if (x.empty())
        return {};
    const double n = static_cast<double>(x.size());
    double mx = 0.0, my = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        mx += x[i];
        my += y[i];
    }
    mx /= n;
    my /= n;
    const bool flat_y = std::all_of(y.begin(), y.end(), [&](double v) { return v == y.front(); });
    if (flat_y)
        return {0.0, y.front()};
    double sxx = 0.0, sxy = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        sxx += (x[i] - mx) * (x[i] - mx);
        sxy += (x[i] - mx) * (y[i] - my);
    }
    if (sxx == 0.0)
        return {0.0, my};
    const double slope = sxy / sxx;
    return {slope, my - slope * mx};
}

std::string fit_svg(const nn::TrainingReport& report, const std::vector<FitPanel>& panels)
{
    if (report.train_mse.empty())
        throw Error(Errc::InvalidParameter, "empty training report");

    constexpr double panel = 300.0, gap = 40.0, top = 60.0;
    const double W = gap + static_cast<double>(std::max<std::size_t>(panels.size(), 1)) * (panel + gap);
    const double H = top + panel + 70.0;

    std::string svg = svg_open(W, H);
    svg += label(W / 2.0, 24.0, "middle",
                 fmt::format("{}: {} epochs, final training MSE {}", nn::optimizer_name(report.optimizer),
                             report.epochs(), fmt::format("{:.4E}", report.train_mse.back())));

    for (std::size_t k = 0; k < panels.size(); ++k) {
        const auto& p = panels[k];
        if (p.targets.size() != p.predictions.size())
            throw Error(Errc::DimensionMismatch, "panel '" + p.title + "' has unpaired samples");
        const double left = gap + static_cast<double>(k) * (panel + gap);
        svg += fmt::format("<rect x=\"{}\" y=\"{}\" width=\"{}\" height=\"{}\" fill=\"none\" stroke=\"black\"/>\n",
                           num(left), num(top), num(panel), num(panel));
        if (p.targets.empty()) {
            svg += label(left + panel / 2.0, top - 10.0, "middle", fmt::format("{}: no rows", p.title));
            continue;
        }
        Bounds b;
        for (std::size_t i = 0; i < p.targets.size(); ++i)
            b.add(p.targets[i], p.predictions[i]);
        // Square data range so the identity line is the diagonal.
        const double lo = std::min(b.x0, b.y0), hi = std::max(b.x1, b.y1);
        b = Bounds{lo, hi, lo, hi};
        b.pad(0.05);
        const Frame f(left, top, panel, panel, b, false);

        const auto fit = least_squares_fit(p.targets, p.predictions);
        svg += fmt::format("<g clip-path=\"url(#panel{})\">\n", k);
        svg += fmt::format("<clipPath id=\"panel{}\"><rect x=\"{}\" y=\"{}\" width=\"{}\" height=\"{}\"/></clipPath>\n",
                           k, num(left), num(top), num(panel), num(panel));
        svg += line(f.px(f.b.x0), f.py(f.b.x0), f.px(f.b.x1), f.py(f.b.x1),
                    "stroke=\"gray\" stroke-dasharray=\"4 3\"");
        svg += line(f.px(f.b.x0), f.py(fit.slope * f.b.x0 + fit.intercept), f.px(f.b.x1),
                    f.py(fit.slope * f.b.x1 + fit.intercept), "stroke=\"navy\" stroke-width=\"1.5\"");
        for (std::size_t i = 0; i < p.targets.size(); ++i)
            svg += fmt::format("<circle cx=\"{}\" cy=\"{}\" r=\"2.500\" fill=\"none\" stroke=\"black\"/>\n",
                               num(f.px(p.targets[i])), num(f.py(p.predictions[i])));
        svg += "</g>\n";
        svg += label(left + panel / 2.0, top - 10.0, "middle",
                     fmt::format("{}: Output ~= {}*Target + {}", p.title, num(fit.slope), num(fit.intercept)));
        svg += label(left + panel / 2.0, top + panel + 20.0, "middle",
                     fmt::format("Target (km) {} .. {}", num(f.b.x0), num(f.b.x1)));
        svg += label(left + panel / 2.0, top + panel + 38.0, "middle", fmt::format("n = {}", p.targets.size()));
    }
    svg += "</svg>\n";
    return svg;
}

void render_fit_svg(const nn::TrainingReport& report, const std::vector<FitPanel>& panels,
                    const std::filesystem::path& out)
{
    write_svg(out, fit_svg(report, panels));
}

} // namespace hifloc::harness
