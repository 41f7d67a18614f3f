#include "induction_lens/svg_report.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <map>

#include "induction_lens/csv.hpp"
#include "induction_lens/errors.hpp"

namespace ilens {

namespace {

std::string fmt(const char* spec, double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, spec, v);
    return buf;
}

std::string px(double v) { return fmt("%.2f", v); }

std::string escape(const std::string& s) {
    std::string out;
    for (char c : s) {
        switch (c) {
            case '&': out += "&amp;"; break;
            case '<': out += "&lt;"; break;
            case '>': out += "&gt;"; break;
            case '"': out += "&quot;"; break;
            default: out.push_back(c);
        }
    }
    return out;
}

// Sequential light-to-dark blue ramp, t in [0, 1].
std::string ramp(double t) {
    t = std::clamp(t, 0.0, 1.0);
    const double lo[3] = {247, 251, 255};
    const double hi[3] = {8, 48, 107};
    char buf[16];
    std::snprintf(buf, sizeof buf, "#%02x%02x%02x", static_cast<int>(std::lround(lo[0] + (hi[0] - lo[0]) * t)),
                  static_cast<int>(std::lround(lo[1] + (hi[1] - lo[1]) * t)),
                  static_cast<int>(std::lround(lo[2] + (hi[2] - lo[2]) * t)));
    return buf;
}

// Curve palette: yellow (low) to purple (high), readable on white.
std::string line_color(double t) {
    t = std::clamp(t, 0.0, 1.0);
    const double lo[3] = {230, 171, 2};
    const double hi[3] = {84, 39, 143};
    char buf[16];
    std::snprintf(buf, sizeof buf, "#%02x%02x%02x", static_cast<int>(std::lround(lo[0] + (hi[0] - lo[0]) * t)),
                  static_cast<int>(std::lround(lo[1] + (hi[1] - lo[1]) * t)),
                  static_cast<int>(std::lround(lo[2] + (hi[2] - lo[2]) * t)));
    return buf;
}

std::string svg_open(double w, double h) {
    return "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" + px(w) +
           "\" height=\"" + px(h) + "\" viewBox=\"0 0 " + px(w) + " " + px(h) + "\" font-family=\"sans-serif\">\n";
}

std::string text(double x, double y, const std::string& s, const char* anchor = "start", int size = 11) {
    return "<text x=\"" + px(x) + "\" y=\"" + px(y) + "\" font-size=\"" + std::to_string(size) +
           "\" text-anchor=\"" + anchor + "\">" + escape(s) + "</text>\n";
}

}  // namespace

HeatmapGrid heatmap_grid(const RelationIndexTable& table) {
    HeatmapGrid g;
    g.title = "relation index: " + table.label + (table.reversed ? " (reverse)" : "");
    g.n_layers = table.n_layers;
    g.n_heads = table.n_heads;
    for (std::size_t l = 0; l < table.n_layers; ++l) {
        for (std::size_t h = 0; h < table.n_heads; ++h) g.values.push_back(table.mean(l, h));
    }
    return g;
}

HeatmapGrid heatmap_grid(const HeadOccurrenceTable& table) {
    HeatmapGrid g;
    g.title = "head occurrences: " + table.label;
    g.n_layers = table.n_layers;
    g.n_heads = table.n_heads;
    for (std::size_t c : table.count) {
        g.values.push_back(c == 0 ? std::nullopt : std::optional<double>(static_cast<double>(c)));
    }
    return g;
}

std::string render_heatmap(const HeatmapGrid& grid) {
    if (grid.n_layers == 0 || grid.n_heads == 0 || grid.values.size() != grid.n_layers * grid.n_heads) {
        throw InputError("render_heatmap: empty or inconsistent grid");
    }
    std::optional<double> lo, hi;
    for (const auto& v : grid.values) {
        if (!v || !std::isfinite(*v)) continue;
        lo = lo ? std::min(*lo, *v) : *v;
        hi = hi ? std::max(*hi, *v) : *v;
    }
    const double cell = 40.0, left = 70.0, top = 40.0, legend_w = 110.0;
    const double grid_w = cell * static_cast<double>(grid.n_heads);
    const double grid_h = cell * static_cast<double>(grid.n_layers);
    const double width = left + grid_w + legend_w, height = top + grid_h + 50.0;

    std::string s = svg_open(width, height);
    s += "<defs><pattern id=\"hatch\" width=\"6\" height=\"6\" patternUnits=\"userSpaceOnUse\" "
         "patternTransform=\"rotate(45)\"><rect width=\"6\" height=\"6\" fill=\"#ffffff\"/>"
         "<line x1=\"0\" y1=\"0\" x2=\"0\" y2=\"6\" stroke=\"#999999\" stroke-width=\"2\"/></pattern>"
         "<linearGradient id=\"scale\" x1=\"0\" y1=\"1\" x2=\"0\" y2=\"0\"><stop offset=\"0\" stop-color=\"" +
         ramp(0.0) + "\"/><stop offset=\"1\" stop-color=\"" + ramp(1.0) + "\"/></linearGradient></defs>\n";
    s += text(left, 20.0, grid.title, "start", 13);
    for (std::size_t l = 0; l < grid.n_layers; ++l) {
        // layer 0 sits in the bottom row
        const double y = top + grid_h - cell * static_cast<double>(l + 1);
        s += text(left - 8.0, y + cell / 2 + 4, "L" + std::to_string(l), "end");
        for (std::size_t h = 0; h < grid.n_heads; ++h) {
            const double x = left + cell * static_cast<double>(h);
            const auto& v = grid.values[l * grid.n_heads + h];
            std::string fill = "url(#hatch)";
            if (v && std::isfinite(*v)) {
                const double t = *hi > *lo ? (*v - *lo) / (*hi - *lo) : 0.5;
                fill = ramp(t);
            }
            s += "<rect class=\"cell\" data-layer=\"" + std::to_string(l) + "\" data-head=\"" + std::to_string(h) +
                 "\" x=\"" + px(x) + "\" y=\"" + px(y) + "\" width=\"" + px(cell) + "\" height=\"" + px(cell) +
                 "\" fill=\"" + fill + "\" stroke=\"#ffffff\"/>\n";
        }
    }
    for (std::size_t h = 0; h < grid.n_heads; ++h) {
        s += text(left + cell * (static_cast<double>(h) + 0.5), top + grid_h + 16.0, "H" + std::to_string(h),
                  "middle");
    }
    s += text(left + grid_w / 2, top + grid_h + 36.0, "head", "middle");

    const double lx = left + grid_w + 30.0;
    s += "<rect x=\"" + px(lx) + "\" y=\"" + px(top) + "\" width=\"16\" height=\"" + px(grid_h) +
         "\" fill=\"url(#scale)\" stroke=\"#666666\"/>\n";
    s += text(lx + 22.0, top + 10.0, "max " + (hi ? fmt("%.4g", *hi) : std::string("n/a")));
    s += text(lx + 22.0, top + grid_h, "min " + (lo ? fmt("%.4g", *lo) : std::string("n/a")));
    s += "</svg>\n";
    return s;
}

void emit_heatmap(const HeatmapGrid& grid, const std::filesystem::path& path) {
    write_text_atomic(path, render_heatmap(grid));
}

std::vector<Curve> curves_from_sweep(const std::filesystem::path& sweep_csv, const std::string& metric) {
    const CsvTable t = read_csv(sweep_csv);
    const std::size_t cs = t.column("step"), cl = t.column("layer"), ch = t.column("head"), cm = t.column("metric"),
                      cv = t.column("value");
    std::map<std::pair<std::size_t, std::size_t>, Curve> by_head;
    for (const auto& r : t.rows) {
        if (r[cm] != metric) continue;
        const std::size_t l = std::stoul(r[cl]), h = std::stoul(r[ch]);
        Curve& c = by_head[{l, h}];
        c.layer = l;
        c.head = h;
        c.points.push_back({std::stoul(r[cs]), parse_number(r[cv])});
    }
    if (by_head.empty()) throw InputError("sweep has no rows for metric '" + metric + "'");
    std::vector<Curve> out;
    for (auto& [key, c] : by_head) {
        std::sort(c.points.begin(), c.points.end(),
                  [](const CurvePoint& a, const CurvePoint& b) { return a.step < b.step; });
        out.push_back(std::move(c));
    }
    return out;
}

namespace {

std::optional<double> value_at(const Curve& c, std::size_t step) {
    for (const auto& p : c.points) {
        if (p.step == step && std::isfinite(p.value)) return p.value;
    }
    return std::nullopt;
}

}  // namespace

std::string render_curves(const std::vector<Curve>& curves, const std::string& metric, const CurveSelection& sel) {
    if (curves.empty()) throw InputError("render_curves: no curves");
    std::size_t first_step = curves.front().points.empty() ? 0 : curves.front().points.front().step;
    std::size_t last_step = first_step;
    for (const auto& c : curves) {
        for (const auto& p : c.points) {
            first_step = std::min(first_step, p.step);
            last_step = std::max(last_step, p.step);
        }
    }
    const std::size_t ref = sel.reference_step.value_or(last_step);

    // Selection ranks by the final value; absent values rank last, ties go to (layer, head).
    std::vector<const Curve*> chosen;
    for (const auto& c : curves) chosen.push_back(&c);
    std::stable_sort(chosen.begin(), chosen.end(), [&](const Curve* a, const Curve* b) {
        const auto va = value_at(*a, last_step), vb = value_at(*b, last_step);
        if (va.has_value() != vb.has_value()) return va.has_value();
        if (va && *va != *vb) return *va > *vb;
        return std::pair{a->layer, a->head} < std::pair{b->layer, b->head};
    });
    if (sel.top_k > 0 && chosen.size() > sel.top_k) chosen.resize(sel.top_k);
    std::sort(chosen.begin(), chosen.end(), [](const Curve* a, const Curve* b) {
        return std::pair{a->layer, a->head} < std::pair{b->layer, b->head};
    });

    std::optional<double> lo, hi, ref_lo, ref_hi;
    for (const Curve* c : chosen) {
        for (const auto& p : c->points) {
            if (!std::isfinite(p.value)) continue;
            lo = lo ? std::min(*lo, p.value) : p.value;
            hi = hi ? std::max(*hi, p.value) : p.value;
        }
        if (const auto v = value_at(*c, ref)) {
            ref_lo = ref_lo ? std::min(*ref_lo, *v) : *v;
            ref_hi = ref_hi ? std::max(*ref_hi, *v) : *v;
        }
    }
    const double y_lo = lo.value_or(0.0), y_hi = hi && *hi > y_lo ? *hi : y_lo + 1.0;
    const double left = 70.0, top = 40.0, plot_w = 520.0, plot_h = 300.0;
    const double width = left + plot_w + 40.0, height = top + plot_h + 60.0;
    auto sx = [&](std::size_t step) {
        if (last_step == first_step) return left + plot_w / 2;
        return left + plot_w * static_cast<double>(step - first_step) / static_cast<double>(last_step - first_step);
    };
    auto sy = [&](double v) { return top + plot_h - plot_h * (v - y_lo) / (y_hi - y_lo); };

    std::string s = svg_open(width, height);
    s += text(left, 20.0, metric + " (colored by value at step " + std::to_string(ref) + ")", "start", 13);
    s += "<rect x=\"" + px(left) + "\" y=\"" + px(top) + "\" width=\"" + px(plot_w) + "\" height=\"" + px(plot_h) +
         "\" fill=\"none\" stroke=\"#666666\"/>\n";
    s += text(left - 6.0, top + 4.0, fmt("%.4g", y_hi), "end");
    s += text(left - 6.0, top + plot_h, fmt("%.4g", y_lo), "end");
    s += text(left, top + plot_h + 18.0, std::to_string(first_step), "middle");
    s += text(left + plot_w, top + plot_h + 18.0, std::to_string(last_step), "middle");
    s += text(left + plot_w / 2, top + plot_h + 40.0, "training step", "middle");
    for (const Curve* c : chosen) {
        std::string color = "#999999";
        if (const auto v = value_at(*c, ref)) {
            const double t = *ref_hi > *ref_lo ? (*v - *ref_lo) / (*ref_hi - *ref_lo) : 0.5;
            color = line_color(t);
        }
        std::string pts;
        for (const auto& p : c->points) {
            if (!std::isfinite(p.value)) continue;
            if (!pts.empty()) pts.push_back(' ');
            pts += px(sx(p.step)) + "," + px(sy(p.value));
        }
        s += "<polyline class=\"curve\" data-layer=\"" + std::to_string(c->layer) + "\" data-head=\"" +
             std::to_string(c->head) + "\" points=\"" + pts + "\" fill=\"none\" stroke=\"" + color +
             "\" stroke-width=\"1.5\"/>\n";
    }
    s += "</svg>\n";
    return s;
}

void emit_curves(const std::filesystem::path& sweep_csv, const std::string& metric, const CurveSelection& sel,
                 const std::filesystem::path& path) {
    write_text_atomic(path, render_curves(curves_from_sweep(sweep_csv, metric), metric, sel));
}

}  // namespace ilens
