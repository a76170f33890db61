#include <array>
#include <cstdio>
#include <fstream>

#include "pasnet/csv.hpp"
#include "pasnet/errors.hpp"
#include "pasnet/evaluation.hpp"

namespace pasnet::eval {

namespace {

constexpr double kSize = 420.0;
constexpr double kLeft = 60.0;
constexpr double kTop = 20.0;
constexpr std::array<const char*, 8> kPalette{"#1f77b4", "#d62728", "#2ca02c", "#ff7f0e",
                                               "#9467bd", "#8c564b", "#e377c2", "#17becf"};

std::string xml_escape(const std::string& s)
{
    std::string out;
    for (char c : s) {
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

std::string num(double v)
{
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.2f", v);
    return buf;
}

}  // namespace

std::filesystem::path emit_roc_plot(const std::vector<NamedCurve>& curves, const std::filesystem::path& svg)
{
    if (svg.has_parent_path()) std::filesystem::create_directories(svg.parent_path());
    std::ofstream out(svg, std::ios::trunc);
    if (!out) throw IoError("cannot write " + svg.string());

    const double width = kLeft + kSize + 220.0;
    const double height = kTop + kSize + 50.0;
    const auto x = [](double fpr) { return kLeft + fpr * kSize; };
    const auto y = [](double tpr) { return kTop + (1.0 - tpr) * kSize; };

    out << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << num(width) << "\" height=\"" << num(height)
        << "\" font-family=\"sans-serif\" font-size=\"12\">\n";
    out << "<rect x=\"0\" y=\"0\" width=\"" << num(width) << "\" height=\"" << num(height) << "\" fill=\"white\"/>\n";
    out << "<rect x=\"" << num(kLeft) << "\" y=\"" << num(kTop) << "\" width=\"" << num(kSize) << "\" height=\""
        << num(kSize) << "\" fill=\"none\" stroke=\"black\"/>\n";
    for (int t = 0; t <= 5; ++t) {
        const double v = t / 5.0;
        out << "<text x=\"" << num(x(v)) << "\" y=\"" << num(kTop + kSize + 16) << "\" text-anchor=\"middle\">"
            << num(v) << "</text>\n";
        out << "<text x=\"" << num(kLeft - 6) << "\" y=\"" << num(y(v) + 4) << "\" text-anchor=\"end\">" << num(v)
            << "</text>\n";
    }
    out << "<text x=\"" << num(kLeft + kSize / 2) << "\" y=\"" << num(kTop + kSize + 36)
        << "\" text-anchor=\"middle\">False positive rate</text>\n";
    out << "<text transform=\"translate(16," << num(kTop + kSize / 2)
        << ") rotate(-90)\" text-anchor=\"middle\">True positive rate</text>\n";
    out << "<line x1=\"" << num(x(0)) << "\" y1=\"" << num(y(0)) << "\" x2=\"" << num(x(1)) << "\" y2=\"" << num(y(1))
        << "\" stroke=\"gray\" stroke-dasharray=\"4,4\"/>\n";

    std::vector<std::vector<std::string>> rows;
    for (std::size_t c = 0; c < curves.size(); ++c) {
        const auto& nc = curves[c];
        const char* color = kPalette[c % kPalette.size()];
        out << "<polyline fill=\"none\" stroke=\"" << color << "\" stroke-width=\"2\" points=\"";
        for (std::size_t i = 0; i < nc.curve.fpr.size(); ++i) {
            out << num(x(nc.curve.fpr[i])) << ',' << num(y(nc.curve.tpr[i])) << ' ';
            rows.push_back({nc.name, format_double(nc.curve.thresholds[i]), format_double(nc.curve.fpr[i]),
                            format_double(nc.curve.tpr[i])});
        }
        out << "\"/>\n";
        const double ly = kTop + 20.0 + 20.0 * static_cast<double>(c);
        char auc[32];
        std::snprintf(auc, sizeof(auc), "%.3f", nc.auc);
        out << "<line x1=\"" << num(kLeft + kSize + 15) << "\" y1=\"" << num(ly) << "\" x2=\"" << num(kLeft + kSize + 40)
            << "\" y2=\"" << num(ly) << "\" stroke=\"" << color << "\" stroke-width=\"2\"/>\n";
        out << "<text x=\"" << num(kLeft + kSize + 46) << "\" y=\"" << num(ly + 4) << "\">" << xml_escape(nc.name)
            << " (AUC = " << auc << ")</text>\n";
    }
    out << "</svg>\n";
    if (!out) throw IoError("short write to " + svg.string());

    auto csv = svg;
    csv.replace_extension(".csv");
    write_csv(csv, {"model", "threshold", "fpr", "tpr"}, rows);
    return svg;
}

}  // namespace pasnet::eval
