#include <gtest/gtest.h>

#include <cmath>
#include <regex>
#include <set>

#include "induction_lens/csv.hpp"
#include "induction_lens/errors.hpp"
#include "induction_lens/svg_report.hpp"
#include "test_util.hpp"

using namespace ilens;

namespace {

// Tag balance, quoted attributes and a single root element. Enough to catch broken markup.
bool well_formed_xml(const std::string& doc) {
    std::vector<std::string> stack;
    std::size_t roots = 0;
    std::size_t i = 0;
    while ((i = doc.find('<', i)) != std::string::npos) {
        if (doc.compare(i, 4, "<!--") == 0) {
            i = doc.find("-->", i);
            if (i == std::string::npos) return false;
            continue;
        }
        if (doc.compare(i, 2, "<?") == 0) {
            i = doc.find("?>", i);
            if (i == std::string::npos) return false;
            continue;
        }
        std::size_t j = i + 1;
        bool in_quote = false;
        while (j < doc.size() && (in_quote || doc[j] != '>')) {
            if (doc[j] == '"') in_quote = !in_quote;
            if (!in_quote && doc[j] == '<') return false;
            ++j;
        }
        if (j >= doc.size()) return false;
        std::string tag = doc.substr(i + 1, j - i - 1);
        i = j + 1;
        if (tag.empty()) return false;
        if (tag[0] == '/') {
            const std::string name = tag.substr(1);
            if (stack.empty() || stack.back() != name) return false;
            stack.pop_back();
            continue;
        }
        const bool self_closing = tag.back() == '/';
        const std::string name = tag.substr(0, tag.find_first_of(" \n\t/"));
        if (stack.empty()) ++roots;
        if (!self_closing) stack.push_back(name);
    }
    // No stray '&' outside entities.
    static const std::regex bad_amp("&(?!(amp|lt|gt|quot|apos|#[0-9]+);)");
    return stack.empty() && roots == 1 && !std::regex_search(doc, bad_amp);
}

std::size_t count(const std::string& s, const std::string& needle) {
    std::size_t n = 0;
    for (std::size_t p = s.find(needle); p != std::string::npos; p = s.find(needle, p + 1)) ++n;
    return n;
}

std::vector<std::string> polylines(const std::string& svg) {
    std::vector<std::string> out;
    static const std::regex re("<polyline[^>]*points=\"([^\"]*)\"");
    for (std::sregex_iterator it(svg.begin(), svg.end(), re), end; it != end; ++it) out.push_back((*it)[1]);
    return out;
}

std::vector<std::string> strokes(const std::string& svg) {
    std::vector<std::string> out;
    static const std::regex re("<polyline[^>]*stroke=\"([^\"]*)\"");
    for (std::sregex_iterator it(svg.begin(), svg.end(), re), end; it != end; ++it) out.push_back((*it)[1]);
    return out;
}

Curve curve(std::size_t layer, std::size_t head, std::vector<std::pair<std::size_t, double>> pts) {
    Curve c;
    c.layer = layer;
    c.head = head;
    for (auto [s, v] : pts) c.points.push_back({s, v});
    return c;
}

}  // namespace

TEST(Heatmap, TwoByTwoTable) {
    RelationIndexTable t;
    t.label = "subj";
    t.n_layers = 2;
    t.n_heads = 2;
    t.sum = {0.0, 1.0, 0.5, 0.25};
    t.count = {1, 1, 1, 1};
    const std::string svg = render_heatmap(heatmap_grid(t));
    EXPECT_EQ(count(svg, "class=\"cell\""), 4u);
    EXPECT_NE(svg.find("max 1"), std::string::npos);
    EXPECT_NE(svg.find("min 0"), std::string::npos);
    EXPECT_EQ(count(svg, "url(#hatch)"), 0u);
    EXPECT_TRUE(well_formed_xml(svg));
}

TEST(Heatmap, AllUndefinedIsFullyHatched) {
    RelationIndexTable t;
    t.label = "obj";
    t.n_layers = 3;
    t.n_heads = 2;
    t.sum.assign(6, 0.0);
    t.count.assign(6, 0);
    const std::string svg = render_heatmap(heatmap_grid(t));
    EXPECT_EQ(count(svg, "class=\"cell\""), 6u);
    EXPECT_EQ(count(svg, "url(#hatch)"), 6u);
    EXPECT_TRUE(well_formed_xml(svg));
}

TEST(Heatmap, OccurrenceTableHatchesZeroCounts) {
    HeadOccurrenceTable t;
    t.label = "mod";
    t.n_layers = 1;
    t.n_heads = 3;
    t.count = {0, 4, 1};
    const HeatmapGrid g = heatmap_grid(t);
    EXPECT_FALSE(g.values[0].has_value());
    EXPECT_EQ(g.values[1], 4.0);
    EXPECT_EQ(count(render_heatmap(g), "url(#hatch)"), 1u);
}

TEST(Heatmap, TitleIsEscaped) {
    HeatmapGrid g;
    g.title = "a<b & \"c\"";
    g.n_layers = 1;
    g.n_heads = 1;
    g.values = {0.5};
    EXPECT_TRUE(well_formed_xml(render_heatmap(g)));
}

TEST(Heatmap, EmptyGridIsAnError) {
    EXPECT_THROW(render_heatmap(HeatmapGrid{}), InputError);
}

TEST(Heatmap, EmitWritesFile) {
    testutil::TempDir dir("svg");
    HeatmapGrid g;
    g.n_layers = 1;
    g.n_heads = 2;
    g.values = {0.1, std::nullopt};
    emit_heatmap(g, dir / "h.svg");
    EXPECT_EQ(read_text(dir / "h.svg"), render_heatmap(g));
}

TEST(Curves, SingleHeadThreeSteps) {
    const std::string svg = render_curves({curve(0, 0, {{0, 0.1}, {10, 0.5}, {20, 0.3}})}, "relation:subj", {});
    const auto lines = polylines(svg);
    ASSERT_EQ(lines.size(), 1u);
    EXPECT_EQ(count(lines[0], ","), 3u);
    EXPECT_TRUE(well_formed_xml(svg));
}

TEST(Curves, TopSixteenByFinalValue) {
    std::vector<Curve> cs;
    for (std::size_t h = 0; h < 40; ++h) cs.push_back(curve(h / 8, h % 8, {{0, 0.0}, {5, static_cast<double>(h)}}));
    CurveSelection sel;
    sel.top_k = 16;
    const std::string svg = render_curves(cs, "copying", sel);
    EXPECT_EQ(polylines(svg).size(), 16u);
    // Heads 24..39 have the largest final values.
    EXPECT_EQ(svg.find("data-layer=\"2\" data-head=\"7\""), std::string::npos);
    EXPECT_NE(svg.find("data-layer=\"3\" data-head=\"0\""), std::string::npos);
}

TEST(Curves, ReferenceStepChangesOnlyColors) {
    std::vector<Curve> cs;
    for (std::size_t h = 0; h < 4; ++h) {
        cs.push_back(curve(0, h, {{0, 0.9 - 0.2 * static_cast<double>(h)}, {10, 0.1 * static_cast<double>(h)}}));
    }
    CurveSelection last, first;
    first.reference_step = 0;
    const std::string a = render_curves(cs, "m", last), b = render_curves(cs, "m", first);
    EXPECT_EQ(polylines(a), polylines(b));
    EXPECT_NE(strokes(a), strokes(b));
}

TEST(Curves, FromSweepCsv) {
    testutil::TempDir dir("svg");
    CsvTable t;
    t.header = {"step", "layer", "head", "metric", "value"};
    t.rows = {{"20", "0", "1", "copying", "0.5"}, {"0", "0", "1", "copying", "0.25"},
              {"0", "0", "0", "copying", "nan"}, {"0", "0", "0", "other", "3"}};
    write_csv(dir / "sweep.csv", t);
    const auto cs = curves_from_sweep(dir / "sweep.csv", "copying");
    ASSERT_EQ(cs.size(), 2u);
    ASSERT_EQ(cs[1].points.size(), 2u);
    EXPECT_EQ(cs[1].points[0].step, 0u);
    EXPECT_TRUE(std::isnan(cs[0].points[0].value));
    EXPECT_THROW(curves_from_sweep(dir / "sweep.csv", "missing"), InputError);
    emit_curves(dir / "sweep.csv", "copying", {}, dir / "c.svg");
    EXPECT_TRUE(well_formed_xml(read_text(dir / "c.svg")));
}

TEST(Csv, RoundTripWithComments) {
    testutil::TempDir dir("csv");
    CsvTable t;
    t.comments = {schema_comment("relation-table", 1, 7)};
    t.header = {"layer", "head", "mean", "count"};
    t.rows = {{"0", "0", format_number(0.1), "3"}, {"0", "1", format_number(std::nan("")), "0"}};
    write_csv(dir / "t.csv", t);
    const CsvTable r = read_csv(dir / "t.csv");
    EXPECT_EQ(r.comments, t.comments);
    EXPECT_EQ(r.header, t.header);
    EXPECT_EQ(r.rows, t.rows);
    EXPECT_EQ(r.column("mean"), 2u);
    EXPECT_THROW(r.column("nope"), InputError);
}

TEST(Csv, NumbersRoundTripExactly) {
    for (double v : {0.1, 1.0 / 3.0, -2.5e-17, 12345.678, 0.0}) EXPECT_EQ(parse_number(format_number(v)), v);
    EXPECT_TRUE(std::isnan(parse_number(format_number(std::nan("")))));
    EXPECT_THROW(parse_number("1.5x"), CorruptionError);
}

TEST(Csv, SchemaCommentRecordsSeed) {
    const std::string c = schema_comment("sweep", 2, 99);
    EXPECT_NE(c.find("sweep"), std::string::npos);
    EXPECT_NE(c.find("seed=99"), std::string::npos);
    EXPECT_NE(c.find("version="), std::string::npos);
}

TEST(Csv, RaggedRowIsCorruption) {
    EXPECT_THROW(parse_csv_text("a,b\n1,2\n3\n"), CorruptionError);
}
