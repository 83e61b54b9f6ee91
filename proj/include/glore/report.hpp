#pragma once

#include <cstdio>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "glore/error.hpp"
#include "glore/eval.hpp"
#include "glore/tsv.hpp"

namespace glore::report {

namespace fs = std::filesystem;

/// Report columns, in order.
inline const std::vector<std::string>& variants() {
    static const std::vector<std::string> v = {"base", "glore", "lore"};
    return v;
}

struct VariantResult {
    std::string name;
    std::vector<PrPoint> curve;
    std::map<std::size_t, double> patn;
    std::optional<std::size_t> candidates;
    std::optional<std::size_t> hits;
    std::optional<std::size_t> denominator;
};

struct Report {
    std::vector<VariantResult> present;
    std::vector<std::string> missing;
};

namespace detail {

/// Rows of a CSV with a header line; the header must match.
inline std::vector<std::vector<std::string>> read_csv(const fs::path& path,
                                                      std::string_view header) {
    const auto text = tsv::read_file(path);
    std::vector<std::vector<std::string>> rows;
    std::size_t start = 0;
    bool first = true;
    while (start < text.size()) {
        auto end = text.find('\n', start);
        if (end == std::string::npos)
            end = text.size();
        std::string_view line(text.data() + start, end - start);
        start = end + 1;
        if (line.empty())
            continue;
        if (first) {
            if (line != header)
                throw DataError(path.string() + ": expected header '" + std::string(header) + "'");
            first = false;
            continue;
        }
        std::vector<std::string> row;
        for (auto f : tsv::split(line, ','))
            row.emplace_back(f);
        rows.push_back(std::move(row));
    }
    return rows;
}

inline std::string fixed(double v, int digits = 4) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.*f", digits, v);
    return buf;
}

} // namespace detail

/// Area under the PR curve by the trapezoid rule over recall, starting
/// from (0, first precision).
inline double pr_auc(std::span<const PrPoint> curve) {
    double area = 0.0;
    double r0 = 0.0;
    double p0 = curve.empty() ? 0.0 : curve.front().precision;
    for (const auto& pt : curve) {
        area += (pt.recall - r0) * (pt.precision + p0) / 2.0;
        r0 = pt.recall;
        p0 = pt.precision;
    }
    return area;
}

inline Report load(const fs::path& dir) {
    std::map<std::string, std::vector<std::string>> meta;
    if (fs::exists(dir / "eval_meta.tsv"))
        tsv::for_each_record(dir / "eval_meta.tsv", 4, [&](const auto& f, std::size_t) {
            if (f[0] != "variant")
                meta[std::string(f[0])] = {std::string(f[1]), std::string(f[2]), std::string(f[3])};
        });
    Report r;
    for (const auto& v : variants()) {
        const auto curve_path = dir / ("curve_" + v + ".csv");
        const auto patn_path = dir / ("patn_" + v + ".csv");
        if (!fs::exists(curve_path) || !fs::exists(patn_path)) {
            r.missing.push_back(v);
            continue;
        }
        VariantResult res;
        res.name = v;
        for (const auto& row : detail::read_csv(curve_path, "k,recall,precision")) {
            if (row.size() != 3)
                throw DataError(curve_path.string() + ": expected 3 columns");
            res.curve.push_back({tsv::parse_uint(row[0], "k"), tsv::parse_double(row[1], "recall"),
                                 tsv::parse_double(row[2], "precision")});
        }
        for (const auto& row : detail::read_csv(patn_path, "n,precision")) {
            if (row.size() != 2)
                throw DataError(patn_path.string() + ": expected 2 columns");
            res.patn[tsv::parse_uint(row[0], "n")] = tsv::parse_double(row[1], "precision");
        }
        if (auto it = meta.find(v); it != meta.end()) {
            res.candidates = tsv::parse_uint(it->second[0], "candidates");
            res.hits = tsv::parse_uint(it->second[1], "hits");
            res.denominator = tsv::parse_uint(it->second[2], "recall_denominator");
        }
        r.present.push_back(std::move(res));
    }
    if (r.present.empty())
        throw IoError("no evaluation results in " + dir.string());
    return r;
}

inline std::string format_text(const Report& r) {
    auto opt = [](const std::optional<std::size_t>& v) {
        return v ? std::to_string(*v) : std::string("-");
    };
    std::string out = "Held-out evaluation\n\n";
    out += "variant\tcandidates\thits\trecall_denominator\tmax_recall\tpr_auc\n";
    for (const auto& v : r.present) {
        const double max_recall = v.curve.empty() ? 0.0 : v.curve.back().recall;
        out += v.name + '\t' + opt(v.candidates) + '\t' + opt(v.hits) + '\t' +
               opt(v.denominator) + '\t' + detail::fixed(max_recall) + '\t' +
               detail::fixed(pr_auc(v.curve)) + '\n';
    }
    for (const auto& m : r.missing)
        out += "notice: variant " + m + " omitted (no evaluation artifacts)\n";

    std::set<std::size_t> ns;
    for (const auto& v : r.present)
        for (const auto& [n, p] : v.patn)
            ns.insert(n);
    out += "\nPrecision@N\nn";
    for (const auto& v : r.present)
        out += '\t' + v.name;
    out += '\n';
    for (std::size_t n : ns) {
        out += std::to_string(n);
        for (const auto& v : r.present) {
            auto it = v.patn.find(n);
            out += '\t' + (it == v.patn.end() ? std::string("-") : detail::fixed(it->second));
        }
        out += '\n';
    }
    return out;
}

/// Columns n,base,glore,lore in that order; a missing variant or N leaves
/// the cell empty.
inline std::string format_patn_csv(const Report& r) {
    std::set<std::size_t> ns;
    std::map<std::string, const VariantResult*> by_name;
    for (const auto& v : r.present) {
        by_name[v.name] = &v;
        for (const auto& [n, p] : v.patn)
            ns.insert(n);
    }
    std::string out = "n";
    for (const auto& name : variants())
        out += ',' + name;
    out += '\n';
    for (std::size_t n : ns) {
        out += std::to_string(n);
        for (const auto& name : variants()) {
            out += ',';
            if (auto it = by_name.find(name); it != by_name.end())
                if (auto p = it->second->patn.find(n); p != it->second->patn.end())
                    out += tsv::format_double(p->second);
        }
        out += '\n';
    }
    return out;
}

/// Precision against recall, one polyline per variant.
inline std::string format_svg(const Report& r) {
    constexpr double W = 640, H = 480, L = 60, R = 20, T = 20, B = 50;
    static const std::map<std::string, std::string> colors = {
        {"base", "#7f7f7f"}, {"glore", "#d62728"}, {"lore", "#1f77b4"}};
    double max_recall = 0.0;
    for (const auto& v : r.present)
        for (const auto& p : v.curve)
            max_recall = std::max(max_recall, p.recall);
    if (max_recall <= 0.0)
        max_recall = 1.0;
    auto x = [&](double recall) { return L + (W - L - R) * recall / max_recall; };
    auto y = [&](double precision) { return H - B - (H - T - B) * precision; };

    std::string out = "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"640\" height=\"480\" "
                      "font-family=\"sans-serif\" font-size=\"12\">\n";
    out += "<rect width=\"640\" height=\"480\" fill=\"white\"/>\n";
    out += "<line x1=\"" + detail::fixed(L, 1) + "\" y1=\"" + detail::fixed(H - B, 1) + "\" x2=\"" +
           detail::fixed(W - R, 1) + "\" y2=\"" + detail::fixed(H - B, 1) + "\" stroke=\"black\"/>\n";
    out += "<line x1=\"" + detail::fixed(L, 1) + "\" y1=\"" + detail::fixed(T, 1) + "\" x2=\"" +
           detail::fixed(L, 1) + "\" y2=\"" + detail::fixed(H - B, 1) + "\" stroke=\"black\"/>\n";
    for (int i = 0; i <= 5; ++i) {
        const double f = i / 5.0;
        out += "<text x=\"" + detail::fixed(x(f * max_recall), 1) + "\" y=\"" +
               detail::fixed(H - B + 16, 1) + "\" text-anchor=\"middle\">" +
               detail::fixed(f * max_recall, 2) + "</text>\n";
        out += "<text x=\"" + detail::fixed(L - 6, 1) + "\" y=\"" + detail::fixed(y(f) + 4, 1) +
               "\" text-anchor=\"end\">" + detail::fixed(f, 1) + "</text>\n";
    }
    out += "<text x=\"" + detail::fixed((L + W - R) / 2, 1) + "\" y=\"" + detail::fixed(H - 10, 1) +
           "\" text-anchor=\"middle\">recall</text>\n";
    out += "<text x=\"15\" y=\"" + detail::fixed((T + H - B) / 2, 1) +
           "\" text-anchor=\"middle\" transform=\"rotate(-90 15 " +
           detail::fixed((T + H - B) / 2, 1) + ")\">precision</text>\n";

    int legend = 0;
    for (const auto& v : r.present) {
        const auto& color = colors.at(v.name);
        out += "<polyline fill=\"none\" stroke=\"" + color + "\" stroke-width=\"1.5\" points=\"";
        // One vertex per k is far more than the plot resolves.
        const std::size_t stride = std::max<std::size_t>(1, v.curve.size() / 1000);
        for (std::size_t i = 0; i < v.curve.size(); i += stride) {
            if (i > 0)
                out += ' ';
            out += detail::fixed(x(v.curve[i].recall), 2) + ',' +
                   detail::fixed(y(v.curve[i].precision), 2);
        }
        out += "\"/>\n";
        const double ly = T + 10 + 16 * legend++;
        out += "<line x1=\"" + detail::fixed(W - R - 90, 1) + "\" y1=\"" + detail::fixed(ly, 1) +
               "\" x2=\"" + detail::fixed(W - R - 70, 1) + "\" y2=\"" + detail::fixed(ly, 1) +
               "\" stroke=\"" + color + "\" stroke-width=\"2\"/>\n";
        out += "<text x=\"" + detail::fixed(W - R - 64, 1) + "\" y=\"" + detail::fixed(ly + 4, 1) +
               "\">" + v.name + "</text>\n";
    }
    out += "</svg>\n";
    return out;
}

} // namespace glore::report
