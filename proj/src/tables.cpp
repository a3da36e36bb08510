#include <cstdio>
#include <string>
#include <vector>

#include "cqforge/error.hpp"
#include "cqforge/expctl.hpp"

namespace cqforge {

namespace {

std::string format_fixed(double v, int decimals) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.*f", decimals, v);
    return buf;
}

// Display width in code points; the headers and the ± sign are multi-byte.
std::size_t display_width(const std::string& s) {
    std::size_t w = 0;
    for (unsigned char c : s)
        if ((c & 0xC0) != 0x80) ++w;
    return w;
}

std::string csv_cell(const std::string& s) {
    if (s.find_first_of(",\"\n") == std::string::npos) return s;
    std::string out = "\"";
    for (char c : s) {
        if (c == '"') out += '"';
        out += c;
    }
    out += '"';
    return out;
}

const nlohmann::json& report_field(const nlohmann::json& report, const char* key) {
    if (!report.is_object() || !report.contains(key))
        throw ValidationError(std::string("report lacks a \"") + key + "\" field");
    return report.at(key);
}

std::string stat_cell(const nlohmann::json& agg, const char* field, int runs) {
    const auto& stat = agg.at(field);
    const double mean = stat.at("mean").get<double>();
    if (runs > 1)
        return format_fixed(mean, 1) + " ± " + format_fixed(stat.at("std").get<double>(), 2);
    return format_fixed(mean, 1);
}

struct TableRow {
    std::vector<std::string> labels;
    std::vector<std::string> values;  // Use / Inv / NoEval / Unh
};

std::vector<std::string> metric_cells(const nlohmann::json& strategy_doc) {
    const auto& agg = strategy_doc.at("aggregate");
    const int runs = agg.at("runs").get<int>();
    return {stat_cell(agg, "useful_pct", runs), stat_cell(agg, "invalid_pct", runs),
            stat_cell(agg, "not_able_pct", runs),
            stat_cell(agg, "unhelpful_pct", runs)};
}

// Strategy shown by single-row layouts: "judge" when present, else the first
// configured strategy.
std::string display_strategy(const nlohmann::json& config) {
    const auto& strategies = config.at("strategies");
    for (const auto& s : strategies)
        if (s.get<std::string>() == "judge") return "judge";
    if (strategies.empty()) throw ValidationError("report config lists no strategies");
    return strategies.front().get<std::string>();
}

std::string render_text(const std::vector<std::string>& header,
                        const std::vector<TableRow>& rows, std::size_t n_labels) {
    std::vector<std::size_t> widths(header.size());
    for (std::size_t c = 0; c < header.size(); ++c) widths[c] = display_width(header[c]);
    for (const auto& row : rows) {
        for (std::size_t c = 0; c < row.labels.size(); ++c)
            widths[c] = std::max(widths[c], display_width(row.labels[c]));
        for (std::size_t c = 0; c < row.values.size(); ++c)
            widths[n_labels + c] =
                std::max(widths[n_labels + c], display_width(row.values[c]));
    }

    auto pad = [](const std::string& s, std::size_t width, bool left) {
        const std::size_t w = display_width(s);
        const std::string fill(width > w ? width - w : 0, ' ');
        return left ? s + fill : fill + s;
    };

    std::string out;
    for (std::size_t c = 0; c < header.size(); ++c) {
        if (c) out += "  ";
        out += pad(header[c], widths[c], c < n_labels);
    }
    out += '\n';
    std::size_t rule = 0;
    for (std::size_t c = 0; c < header.size(); ++c) rule += widths[c] + (c ? 2 : 0);
    out += std::string(rule, '-');
    out += '\n';
    for (const auto& row : rows) {
        for (std::size_t c = 0; c < header.size(); ++c) {
            if (c) out += "  ";
            const std::string& cell =
                c < n_labels ? row.labels[c] : row.values[c - n_labels];
            out += pad(cell, widths[c], c < n_labels);
        }
        out += '\n';
    }
    return out;
}

std::string render_csv(const std::vector<std::string>& header,
                       const std::vector<TableRow>& rows) {
    std::string out;
    for (std::size_t c = 0; c < header.size(); ++c) {
        if (c) out += ',';
        out += csv_cell(header[c]);
    }
    out += '\n';
    for (const auto& row : rows) {
        std::vector<std::string> cells = row.labels;
        cells.insert(cells.end(), row.values.begin(), row.values.end());
        for (std::size_t c = 0; c < cells.size(); ++c) {
            if (c) out += ',';
            out += csv_cell(cells[c]);
        }
        out += '\n';
    }
    return out;
}

}  // namespace

TableLayout table_layout_from_string(std::string_view s) {
    if (s == "model_grid") return TableLayout::ModelGrid;
    if (s == "scheme_ablation") return TableLayout::SchemeAblation;
    if (s == "count_sweep") return TableLayout::CountSweep;
    if (s == "strategy_compare") return TableLayout::StrategyCompare;
    throw ValidationError("unknown table layout \"" + std::string(s) +
                          "\" (expected model_grid, scheme_ablation, count_sweep, or "
                          "strategy_compare)");
}

std::string render_table(const std::vector<nlohmann::json>& reports, TableLayout layout,
                         bool csv) {
    if (reports.empty()) throw ValidationError("no reports to render");

    // All reports must come from the same evaluation setup.
    nlohmann::json eval_ref;
    for (const auto& report : reports) {
        const auto& config = report_field(report, "config");
        const auto& eval = config.at("eval");
        nlohmann::json key = {{"embedding_model", eval.at("embedding_model")},
                              {"threshold", eval.at("threshold")},
                              {"strict_gt", eval.value("strict_gt", false)}};
        if (eval_ref.is_null())
            eval_ref = key;
        else if (key != eval_ref)
            throw ValidationError(
                "reports mix evaluation configs: " + eval_ref.dump() + " vs " +
                key.dump());
    }
    if (layout == TableLayout::StrategyCompare) {
        const std::string ref =
            report_field(reports.front(), "_config_digest").get<std::string>();
        for (const auto& report : reports) {
            const std::string digest =
                report_field(report, "_config_digest").get<std::string>();
            if (digest != ref)
                throw ValidationError("strategy comparison needs reports from one "
                                      "experiment; got digests " +
                                      ref + " and " + digest);
        }
    }

    std::vector<std::string> label_header;
    switch (layout) {
        case TableLayout::ModelGrid: label_header = {"LLM_Q", "LLM_J"}; break;
        case TableLayout::SchemeAblation: label_header = {"Scheme"}; break;
        case TableLayout::CountSweep: label_header = {"n"}; break;
        case TableLayout::StrategyCompare: label_header = {"Selection"}; break;
    }
    std::vector<std::string> header = label_header;
    header.insert(header.end(), {"Use.↑", "Inv.↓", "NoEval", "Unh."});

    std::vector<TableRow> rows;
    for (const auto& report : reports) {
        const auto& config = report_field(report, "config");
        const auto& strategies = report_field(report, "strategies");
        if (layout == TableLayout::StrategyCompare) {
            for (const auto& name : config.at("strategies")) {
                const std::string strategy = name.get<std::string>();
                if (!strategies.contains(strategy))
                    throw ValidationError("report has no results for strategy \"" +
                                          strategy + "\"");
                rows.push_back({{strategy}, metric_cells(strategies.at(strategy))});
            }
            continue;
        }

        const std::string strategy = display_strategy(config);
        if (!strategies.contains(strategy))
            throw ValidationError("report has no results for strategy \"" + strategy +
                                  "\"");
        TableRow row;
        switch (layout) {
            case TableLayout::ModelGrid:
                row.labels = {config.at("questioner").at("model").get<std::string>(),
                              config.contains("judge")
                                  ? config.at("judge").at("model").get<std::string>()
                                  : "-"};
                break;
            case TableLayout::SchemeAblation:
                row.labels = {config.at("mode").get<std::string>()};
                break;
            case TableLayout::CountSweep:
                row.labels = {std::to_string(config.at("n").get<int>())};
                break;
            case TableLayout::StrategyCompare: break;
        }
        row.values = metric_cells(strategies.at(strategy));
        rows.push_back(std::move(row));
    }

    return csv ? render_csv(header, rows) : render_text(header, rows, label_header.size());
}

}  // namespace cqforge
