#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "induction_lens/relation_metrics.hpp"

namespace ilens {

// Layers × heads grid of optional values; absent cells are drawn hatched.
struct HeatmapGrid {
    std::string title;
    std::size_t n_layers = 0;
    std::size_t n_heads = 0;
    std::vector<std::optional<double>> values;  // index layer * n_heads + head
};

HeatmapGrid heatmap_grid(const RelationIndexTable& table);
HeatmapGrid heatmap_grid(const HeadOccurrenceTable& table);

// Standalone SVG: layer 0 at the bottom, heads left to right, sequential color scale with the
// min and max printed in the legend. Throws InputError for an empty grid.
std::string render_heatmap(const HeatmapGrid& grid);
void emit_heatmap(const HeatmapGrid& grid, const std::filesystem::path& path);

struct CurvePoint {
    std::size_t step = 0;
    double value = 0.0;
};

struct Curve {
    std::size_t layer = 0;
    std::size_t head = 0;
    std::vector<CurvePoint> points;  // sorted by step
};

struct CurveSelection {
    std::size_t top_k = 0;  // 0 keeps every head
    // Heads are ranked by their value at the last step. This step only keys the colors;
    // defaults to the last step.
    std::optional<std::size_t> reference_step;
};

// Curves of one metric from merged sweep rows (step, layer, head, metric, value).
// Throws InputError when the metric has no rows.
std::vector<Curve> curves_from_sweep(const std::filesystem::path& sweep_csv, const std::string& metric);

// One polyline per selected head over the step axis, colored by the value at the reference step.
std::string render_curves(const std::vector<Curve>& curves, const std::string& metric, const CurveSelection& sel);
void emit_curves(const std::filesystem::path& sweep_csv, const std::string& metric, const CurveSelection& sel,
                 const std::filesystem::path& path);

}  // namespace ilens
