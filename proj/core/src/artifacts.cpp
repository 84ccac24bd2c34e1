#include <charconv>
#include <cstdio>
#include <sstream>

#include "lrvae/errors.hpp"
#include "lrvae/experiments.hpp"
#include "lrvae/io.hpp"

namespace lrvae {
namespace {

std::string fixed(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.2f", v);
  return buf;
}

}  // namespace

std::string curve_csv(const MaskingCurve& curve) {
  std::string out = "groups_masked,wfs,eer\n";
  for (const auto& s : curve.steps) {
    out += std::to_string(s.groups_masked) + "," + format_double(s.wfs) + "," + format_double(s.eer) + "\n";
  }
  return out;
}

MaskingCurve parse_curve_csv(const std::string& text) {
  std::istringstream in(text);
  std::string line;
  if (!std::getline(in, line) || line != "groups_masked,wfs,eer") {
    throw ValidationError("curve CSV: header must be groups_masked,wfs,eer");
  }
  MaskingCurve curve;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    const auto c1 = line.find(',');
    const auto c2 = line.find(',', c1 == std::string::npos ? c1 : c1 + 1);
    if (c1 == std::string::npos || c2 == std::string::npos) {
      throw ValidationError("curve CSV line " + std::to_string(line_no) + ": expected 3 fields");
    }
    CurveStep step;
    const char* b = line.data();
    const char* e = line.data() + line.size();
    const bool ok = std::from_chars(b, b + c1, step.groups_masked).ec == std::errc() &&
                    std::from_chars(b + c1 + 1, b + c2, step.wfs).ec == std::errc() &&
                    std::from_chars(b + c2 + 1, e, step.eer).ec == std::errc();
    if (!ok) throw ValidationError("curve CSV line " + std::to_string(line_no) + ": malformed number");
    curve.steps.push_back(step);
  }
  if (!curve.steps.empty()) curve.group_count = curve.steps.back().groups_masked;
  return curve;
}

std::string curve_svg(const MaskingCurve& curve) {
  constexpr double kWidth = 640, kHeight = 400;
  constexpr double kLeft = 60, kRight = 20, kTop = 30, kBottom = 50;
  const double plot_w = kWidth - kLeft - kRight;
  const double plot_h = kHeight - kTop - kBottom;
  const double x_max = curve.group_count == 0 ? 1.0 : static_cast<double>(curve.group_count);
  auto px = [&](double groups) { return kLeft + plot_w * groups / x_max; };
  auto py = [&](double v) { return kTop + plot_h * (1.0 - v); };

  std::string svg;
  svg += "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"640\" height=\"400\" viewBox=\"0 0 640 400\">\n";
  svg += "<rect x=\"0\" y=\"0\" width=\"640\" height=\"400\" fill=\"white\"/>\n";
  svg += "<text x=\"320\" y=\"18\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"13\">masking curve (" +
         to_string(curve.direction) + ")</text>\n";
  // Axes.
  svg += "<line x1=\"" + fixed(kLeft) + "\" y1=\"" + fixed(py(0)) + "\" x2=\"" + fixed(kLeft + plot_w) + "\" y2=\"" +
         fixed(py(0)) + "\" stroke=\"black\"/>\n";
  svg += "<line x1=\"" + fixed(kLeft) + "\" y1=\"" + fixed(py(0)) + "\" x2=\"" + fixed(kLeft) + "\" y2=\"" +
         fixed(py(1)) + "\" stroke=\"black\"/>\n";
  for (int i = 0; i <= 4; ++i) {
    const double v = i / 4.0;
    svg += "<text x=\"" + fixed(kLeft - 6) + "\" y=\"" + fixed(py(v) + 4) +
           "\" text-anchor=\"end\" font-family=\"sans-serif\" font-size=\"11\">" + fixed(v) + "</text>\n";
    const double g = x_max * v;
    svg += "<text x=\"" + fixed(px(g)) + "\" y=\"" + fixed(py(0) + 16) +
           "\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"11\">" + fixed(g) + "</text>\n";
  }
  svg += "<text x=\"" + fixed(kLeft + plot_w / 2) + "\" y=\"" + fixed(kHeight - 12) +
         "\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"12\">groups masked</text>\n";
  svg += "<text x=\"16\" y=\"" + fixed(kTop + plot_h / 2) + "\" transform=\"rotate(-90 16 " + fixed(kTop + plot_h / 2) +
         ")\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"12\">score</text>\n";

  auto series = [&](const char* colour, auto value) {
    std::string pts;
    for (const auto& s : curve.steps) {
      if (!pts.empty()) pts += ' ';
      pts += fixed(px(static_cast<double>(s.groups_masked))) + "," + fixed(py(value(s)));
    }
    return "<polyline fill=\"none\" stroke=\"" + std::string(colour) + "\" stroke-width=\"2\" points=\"" + pts +
           "\"/>\n";
  };
  svg += series("#1f77b4", [](const CurveStep& s) { return s.wfs; });
  svg += series("#d62728", [](const CurveStep& s) { return s.eer; });
  svg += "<text x=\"" + fixed(kLeft + plot_w - 4) + "\" y=\"" + fixed(kTop + 14) +
         "\" text-anchor=\"end\" font-family=\"sans-serif\" font-size=\"12\" fill=\"#1f77b4\">emotion WFS</text>\n";
  svg += "<text x=\"" + fixed(kLeft + plot_w - 4) + "\" y=\"" + fixed(kTop + 30) +
         "\" text-anchor=\"end\" font-family=\"sans-serif\" font-size=\"12\" fill=\"#d62728\">speaker EER</text>\n";
  svg += "</svg>\n";
  return svg;
}

void emit_curve_artifacts(const MaskingCurve& curve, const std::filesystem::path& directory, const std::string& stem) {
  write_text_file(directory / (stem + ".csv"), curve_csv(curve));
  write_text_file(directory / (stem + ".svg"), curve_svg(curve));
}

}  // namespace lrvae
