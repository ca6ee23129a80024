#include "narrisk/report.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>

#include "narrisk/error.hpp"
#include "narrisk/format.hpp"

namespace narrisk {

namespace {

std::string fixed(double v, int precision = 2) {
    if (v == 0.0) v = 0.0;  // no "-0.00"
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.*f", precision, v);
    std::string s = buf;
    if (s == "-0.00" || s == "-0.0" || s == "-0") s.erase(0, 1);
    return s;
}

std::string escape(std::string_view text) {
    std::string out;
    for (char c : text) {
        switch (c) {
            case '&': out += "&amp;"; break;
            case '<': out += "&lt;"; break;
            case '>': out += "&gt;"; break;
            case '"': out += "&quot;"; break;
            default: out += c;
        }
    }
    return out;
}

std::string_view sign_color(CoefficientSign s) {
    switch (s) {
        case CoefficientSign::positive: return colors::red;
        case CoefficientSign::negative: return colors::blue;
        case CoefficientSign::zero: return colors::gray;
    }
    return colors::gray;
}

std::string header(double width, double height, const PlotMeta& meta) {
    std::string s = "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n";
    s += "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" + fixed(width, 0) + "\" height=\"" +
         fixed(height, 0) + "\" viewBox=\"0 0 " + fixed(width, 0) + " " + fixed(height, 0) +
         "\" font-family=\"sans-serif\" font-size=\"12\">\n";
    s += "<title>" + escape(meta.title) + "</title>\n";
    s += "<metadata>seed=" + std::to_string(meta.seed) + "; tool=" + escape(meta.tool_version) + "</metadata>\n";
    s += "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
    s += "<text x=\"" + fixed(width / 2, 1) + "\" y=\"20\" text-anchor=\"middle\" font-size=\"14\">" +
         escape(meta.title) + "</text>\n";
    return s;
}

// Round axis bounds outward to a multiple of `step`.
double nice_step(double span) {
    if (!(span > 0.0)) return 1.0;
    const double raw = span / 5.0;
    const double mag = std::pow(10.0, std::floor(std::log10(raw)));
    for (double m : {1.0, 2.0, 5.0, 10.0}) {
        if (raw <= m * mag) return m * mag;
    }
    return 10.0 * mag;
}

struct Axis {
    double lo = 0.0;
    double hi = 1.0;
    double step = 0.2;
};

Axis make_axis(double lo, double hi) {
    if (hi - lo < 1e-12) {
        lo -= 0.5;
        hi += 0.5;
    }
    const double step = nice_step(hi - lo);
    return {std::floor(lo / step) * step, std::ceil(hi / step) * step, step};
}

}  // namespace

PlotDocument render_pfi_plot(const std::vector<PfiResult>& results, const PlotMeta& meta, std::string_view x_label) {
    const std::vector<PfiResult> bars = ranked(results);

    const double label_w = 140.0;
    const double plot_w = 420.0;
    const double bar_h = 22.0;
    const double top = 40.0;
    const double width = label_w + plot_w + 40.0;
    const double height = top + bar_h * static_cast<double>(bars.size()) + 60.0;

    double lo = 0.0;
    double hi = 0.0;
    for (const auto& r : bars) {
        lo = std::min(lo, r.mean_drop - r.std_drop);
        hi = std::max(hi, r.mean_drop + r.std_drop);
    }
    const Axis axis = make_axis(lo, hi);
    const double scale = plot_w / (axis.hi - axis.lo);
    auto x_of = [&](double v) { return label_w + (v - axis.lo) * scale; };
    const double bottom = top + bar_h * static_cast<double>(bars.size());

    std::string s = header(width, height, meta);
    for (double t = axis.lo; t <= axis.hi + axis.step * 1e-6; t += axis.step) {
        const double x = x_of(t);
        s += "<line x1=\"" + fixed(x) + "\" y1=\"" + fixed(top) + "\" x2=\"" + fixed(x) + "\" y2=\"" + fixed(bottom) +
             "\" stroke=\"#e0e0e0\"/>\n";
        s += "<text x=\"" + fixed(x) + "\" y=\"" + fixed(bottom + 16) + "\" text-anchor=\"middle\">" +
             fixed(std::abs(t) < axis.step * 1e-6 ? 0.0 : t, 2) + "</text>\n";
    }

    for (std::size_t i = 0; i < bars.size(); ++i) {
        const auto& r = bars[i];
        const double y = top + bar_h * static_cast<double>(i);
        const double x0 = x_of(0.0);
        const double x1 = x_of(r.mean_drop);
        s += "<text x=\"" + fixed(label_w - 6) + "\" y=\"" + fixed(y + bar_h * 0.65) + "\" text-anchor=\"end\">" +
             escape(r.feature_name) + "</text>\n";
        s += "<rect class=\"bar\" data-feature=\"" + escape(r.feature_name) + "\" data-mean-drop=\"" +
             shortest(r.mean_drop) + "\" x=\"" + fixed(std::min(x0, x1)) + "\" y=\"" + fixed(y + 3) +
             "\" width=\"" + fixed(std::abs(x1 - x0)) + "\" height=\"" + fixed(bar_h - 6) + "\" fill=\"" +
             std::string(sign_color(r.coefficient_sign)) + "\"/>\n";
        if (r.std_drop > 0.0) {
            s += "<line x1=\"" + fixed(x_of(r.mean_drop - r.std_drop)) + "\" y1=\"" + fixed(y + bar_h / 2) +
                 "\" x2=\"" + fixed(x_of(r.mean_drop + r.std_drop)) + "\" y2=\"" + fixed(y + bar_h / 2) +
                 "\" stroke=\"black\"/>\n";
        }
    }
    s += "<line x1=\"" + fixed(x_of(0.0)) + "\" y1=\"" + fixed(top) + "\" x2=\"" + fixed(x_of(0.0)) + "\" y2=\"" +
         fixed(bottom) + "\" stroke=\"black\"/>\n";
    s += "<text x=\"" + fixed(label_w + plot_w / 2) + "\" y=\"" + fixed(bottom + 40) + "\" text-anchor=\"middle\">" +
         escape(x_label) + "</text>\n";
    s += "</svg>\n";
    return {std::move(s), width, height, meta.title};
}

namespace {

// RI first (left, red), then non-RI, per language.
std::vector<std::pair<std::pair<Language, int>, const std::vector<double>*>> box_order(const BoxGroups& groups) {
    std::vector<std::pair<std::pair<Language, int>, const std::vector<double>*>> out;
    for (Language lang : {Language::afrikaans, Language::isixhosa}) {
        for (int ri : {1, 0}) {
            const auto it = groups.find({lang, ri});
            if (it != groups.end() && !it->second.empty()) out.emplace_back(it->first, &it->second);
        }
    }
    return out;
}

std::string group_label(Language lang, int ri) {
    return std::string(to_string(lang)) + (ri == 1 ? " RI" : " non-RI");
}

}  // namespace

PlotDocument render_box_plot(const BoxGroups& groups, std::string_view feature_name, const PlotMeta& meta) {
    const auto order = box_order(groups);
    if (order.empty()) throw DomainError("box plot needs at least one non-empty group");

    std::vector<BoxStats> stats;
    double lo = INFINITY;
    double hi = -INFINITY;
    for (const auto& [key, values] : order) {
        stats.push_back(box_stats(*values));
        lo = std::min(lo, *std::min_element(values->begin(), values->end()));
        hi = std::max(hi, *std::max_element(values->begin(), values->end()));
    }
    const Axis axis = make_axis(lo, hi);

    const double left = 70.0;
    const double slot = 110.0;
    const double top = 40.0;
    const double plot_h = 300.0;
    const double width = left + slot * static_cast<double>(order.size()) + 30.0;
    const double height = top + plot_h + 60.0;
    auto y_of = [&](double v) { return top + plot_h - (v - axis.lo) / (axis.hi - axis.lo) * plot_h; };

    std::string s = header(width, height, meta);
    for (double t = axis.lo; t <= axis.hi + axis.step * 1e-6; t += axis.step) {
        const double y = y_of(t);
        s += "<line x1=\"" + fixed(left) + "\" y1=\"" + fixed(y) + "\" x2=\"" + fixed(width - 30) + "\" y2=\"" +
             fixed(y) + "\" stroke=\"#e0e0e0\"/>\n";
        s += "<text x=\"" + fixed(left - 6) + "\" y=\"" + fixed(y + 4) + "\" text-anchor=\"end\">" +
             fixed(std::abs(t) < axis.step * 1e-6 ? 0.0 : t, 2) + "</text>\n";
    }

    for (std::size_t g = 0; g < order.size(); ++g) {
        const auto& [key, values] = order[g];
        const BoxStats& b = stats[g];
        const std::string color(key.second == 1 ? colors::red : colors::blue);
        const double cx = left + slot * (static_cast<double>(g) + 0.5);
        const double half = 30.0;
        const std::string label = group_label(key.first, key.second);

        s += "<g class=\"box\" data-group=\"" + escape(label) + "\">\n";
        s += "<line class=\"whisker\" x1=\"" + fixed(cx) + "\" y1=\"" + fixed(y_of(b.whisker_low)) + "\" x2=\"" +
             fixed(cx) + "\" y2=\"" + fixed(y_of(b.whisker_high)) + "\" stroke=\"black\"/>\n";
        for (double w : {b.whisker_low, b.whisker_high}) {
            s += "<line x1=\"" + fixed(cx - half / 2) + "\" y1=\"" + fixed(y_of(w)) + "\" x2=\"" +
                 fixed(cx + half / 2) + "\" y2=\"" + fixed(y_of(w)) + "\" stroke=\"black\"/>\n";
        }
        s += "<rect x=\"" + fixed(cx - half) + "\" y=\"" + fixed(y_of(b.q3)) + "\" width=\"" + fixed(2 * half) +
             "\" height=\"" + fixed(y_of(b.q1) - y_of(b.q3)) + "\" fill=\"" + color +
             "\" fill-opacity=\"0.6\" stroke=\"black\"/>\n";
        s += "<line class=\"median\" x1=\"" + fixed(cx - half) + "\" y1=\"" + fixed(y_of(b.median)) + "\" x2=\"" +
             fixed(cx + half) + "\" y2=\"" + fixed(y_of(b.median)) + "\" stroke=\"black\" stroke-width=\"2\"/>\n";
        s += "<line class=\"mean\" x1=\"" + fixed(cx - half) + "\" y1=\"" + fixed(y_of(b.mean)) + "\" x2=\"" +
             fixed(cx + half) + "\" y2=\"" + fixed(y_of(b.mean)) + "\" stroke=\"black\" stroke-dasharray=\"3,3\"/>\n";
        for (double v : b.outliers) {
            s += "<circle class=\"outlier\" cx=\"" + fixed(cx) + "\" cy=\"" + fixed(y_of(v)) +
                 "\" r=\"3\" fill=\"none\" stroke=\"" + color + "\"/>\n";
        }
        s += "</g>\n";
        s += "<text x=\"" + fixed(cx) + "\" y=\"" + fixed(top + plot_h + 18) + "\" text-anchor=\"middle\">" +
             escape(label) + "</text>\n";
    }
    s += "<text x=\"16\" y=\"" + fixed(top + plot_h / 2) + "\" text-anchor=\"middle\" transform=\"rotate(-90 16 " +
         fixed(top + plot_h / 2) + ")\">" + escape(feature_name) + "</text>\n";
    s += "</svg>\n";
    return {std::move(s), width, height, meta.title};
}

std::string box_groups_to_csv(const BoxGroups& groups) {
    std::string out = "language,ri,n,median,q1,q3,whisker_low,whisker_high,mean,outliers\n";
    for (const auto& [key, values] : box_order(groups)) {
        const BoxStats b = box_stats(*values);
        std::string outliers;
        for (double v : b.outliers) outliers += (outliers.empty() ? "" : ";") + shortest(v);
        out += std::string(to_string(key.first)) + "," + std::to_string(key.second) + "," +
               std::to_string(values->size()) + "," + shortest(b.median) + "," + shortest(b.q1) + "," +
               shortest(b.q3) + "," + shortest(b.whisker_low) + "," + shortest(b.whisker_high) + "," +
               shortest(b.mean) + "," + outliers + "\n";
    }
    return out;
}

long round_percent(double fraction) {
    // Halves stored just below .5 (0.645 is 64.4999... after scaling) round up.
    return static_cast<long>(std::floor(fraction * 100.0 + 0.5 + 1e-9));
}

MetricsTable emit_metrics_table(const std::vector<MetricsRow>& rows) {
    struct Cells {
        std::string group, language, split, f1, acc, prevalence;
    };
    std::vector<Cells> cells;
    MetricsTable table;
    table.csv = "group,language,split,f1,balanced_accuracy,ri_prevalence,n\n";
    for (const auto& row : rows) {
        const auto& cc = row.counts;
        const double prevalence =
            cc.total() == 0 ? 0.0 : static_cast<double>(cc.tp + cc.fn) / static_cast<double>(cc.total());
        Cells c{row.group, row.language, row.split, std::to_string(round_percent(f1(cc))),
                std::to_string(round_percent(balanced_accuracy(cc))),
                std::to_string(round_percent(prevalence)) + "% RI"};
        table.csv += c.group + "," + c.language + "," + c.split + "," + c.f1 + "," + c.acc + "," +
                     std::to_string(round_percent(prevalence)) + "," + std::to_string(cc.total()) + "\n";
        cells.push_back(std::move(c));
    }

    const std::vector<std::string> head{"Model", "Language", "Split", "F1", "Acc.", "Prevalence"};
    std::vector<std::size_t> w(head.size());
    for (std::size_t k = 0; k < head.size(); ++k) w[k] = head[k].size();
    for (const auto& c : cells) {
        const std::string* cols[] = {&c.group, &c.language, &c.split, &c.f1, &c.acc, &c.prevalence};
        for (std::size_t k = 0; k < head.size(); ++k) w[k] = std::max(w[k], cols[k]->size());
    }
    auto pad = [](const std::string& s, std::size_t width, bool right) {
        const std::string fill(width - s.size(), ' ');
        return right ? fill + s : s + fill;
    };
    auto line = [&](const std::vector<std::string>& v) {
        std::string out;
        for (std::size_t k = 0; k < v.size(); ++k) {
            if (k) out += "  ";
            out += pad(v[k], w[k], k >= 3);
        }
        while (!out.empty() && out.back() == ' ') out.pop_back();
        return out + "\n";
    };
    table.text = line(head);
    std::size_t total = 0;
    for (auto x : w) total += x;
    table.text += std::string(total + 2 * (w.size() - 1), '-') + "\n";
    for (const auto& c : cells) table.text += line({c.group, c.language, c.split, c.f1, c.acc, c.prevalence});
    return table;
}

}  // namespace narrisk
