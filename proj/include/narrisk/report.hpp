#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <utility>
#include <vector>

#include "narrisk/analysis.hpp"
#include "narrisk/corpus.hpp"

namespace narrisk {

inline constexpr std::string_view kToolVersion = "narrisk 1.0.0";

/// Standalone SVG text plus its nominal size.
struct PlotDocument {
    std::string markup;
    double width = 0.0;
    double height = 0.0;
    std::string title;
};

struct PlotMeta {
    std::string title;
    std::uint64_t seed = 0;
    std::string tool_version = std::string(kToolVersion);
};

namespace colors {
inline constexpr std::string_view red = "#d62728";
inline constexpr std::string_view blue = "#1f77b4";
inline constexpr std::string_view gray = "#8c8c8c";
}  // namespace colors

/// Horizontal bars sorted by mean drop, colored by coefficient sign.
PlotDocument render_pfi_plot(const std::vector<PfiResult>& results, const PlotMeta& meta,
                             std::string_view x_label = "Drop in balanced accuracy");

/// Values of one feature keyed by (language, RI label).
using BoxGroups = std::map<std::pair<Language, int>, std::vector<double>>;

/// One box per non-empty group: RI boxes red on the left, non-RI blue on
/// the right, means dotted, outliers as points. Throws DomainError when
/// every group is empty.
PlotDocument render_box_plot(const BoxGroups& groups, std::string_view feature_name, const PlotMeta& meta);

/// Data behind render_box_plot, one line per group.
std::string box_groups_to_csv(const BoxGroups& groups);

struct MetricsRow {
    std::string group;
    std::string language;
    std::string split;
    ConfusionCounts counts;
};

struct MetricsTable {
    std::string csv;
    std::string text;
};

/// Percentages rounded half up, e.g. 0.625 -> 63.
long round_percent(double fraction);

MetricsTable emit_metrics_table(const std::vector<MetricsRow>& rows);

}  // namespace narrisk
