#include "pvgate/harness/report.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>

#include "pvgate/util/format.hpp"

namespace pvgate::harness {

std::string ClientLog::joined() const {
  std::string out;
  for (const auto& line : deliveries) {
    out += line;
    out += '\n';
  }
  return out;
}

const VariantReport* RunReport::variant(const std::string& name) const {
  for (const auto& v : variants) {
    if (v.name == name) return &v;
  }
  return nullptr;
}

std::string csv_quote(const std::string& field) {
  if (field.find_first_of(",\"\r\n") == std::string::npos) return field;
  std::string out = "\"";
  for (char c : field) {
    if (c == '"') out += '"';
    out += c;
  }
  out += '"';
  return out;
}

void emit_csv(const VariantReport& report, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write " + path);

  const std::size_t iocs =
      report.samples.empty() ? 0 : report.samples.front().iocs.size();
  std::vector<std::string> header = {"t", "alive_pvs", "active_pvs", "event_rate",
                                     "post_rate"};
  for (std::size_t i = 0; i < iocs; ++i) {
    header.push_back("ioc" + std::to_string(i) + "_fds");
    header.push_back("ioc" + std::to_string(i) + "_cpu");
  }
  for (std::size_t i = 0; i < header.size(); ++i) {
    if (i) out << ',';
    out << csv_quote(header[i]);
  }
  out << "\r\n";

  for (const auto& s : report.samples) {
    out << util::format_fixed(s.t, 0) << ',' << s.gw.alive_pvs << ','
        << s.gw.active_pvs << ',' << util::format_fixed(s.gw.event_rate, 2) << ','
        << util::format_fixed(s.gw.post_rate, 2);
    for (const auto& ioc : s.iocs) {
      out << ',' << ioc.fds << ',' << util::format_fixed(ioc.cpu_proxy, 4);
    }
    out << "\r\n";
  }
  if (!out) throw IoError("write failed: " + path);
}

std::vector<std::vector<std::string>> parse_csv(const std::string& text) {
  std::vector<std::vector<std::string>> rows;
  std::vector<std::string> row;
  std::string field;
  bool quoted = false;
  bool any = false;
  for (std::size_t i = 0; i < text.size(); ++i) {
    char c = text[i];
    if (quoted) {
      if (c == '"') {
        if (i + 1 < text.size() && text[i + 1] == '"') {
          field += '"';
          ++i;
        } else {
          quoted = false;
        }
      } else {
        field += c;
      }
      any = true;
      continue;
    }
    if (c == '"') {
      quoted = true;
      any = true;
    } else if (c == ',') {
      row.push_back(std::move(field));
      field.clear();
      any = true;
    } else if (c == '\n' || c == '\r') {
      if (c == '\r' && i + 1 < text.size() && text[i + 1] == '\n') ++i;
      if (any || !field.empty() || !row.empty()) {
        row.push_back(std::move(field));
        field.clear();
        rows.push_back(std::move(row));
        row.clear();
        any = false;
      }
    } else {
      field += c;
      any = true;
    }
  }
  if (any || !field.empty() || !row.empty()) {
    row.push_back(std::move(field));
    rows.push_back(std::move(row));
  }
  return rows;
}

namespace {

constexpr int kWidth = 820;
constexpr int kHeight = 480;
constexpr int kLeft = 70;
constexpr int kRight = 660;   // plot area right edge; legend lives beyond
constexpr int kTop = 24;
constexpr int kBottom = 430;

const char* kPalette[] = {"#1f77b4", "#d62728", "#2ca02c", "#ff7f0e",
                          "#9467bd", "#8c564b", "#17becf", "#7f7f7f"};

std::string fmt(double v) { return util::format_fixed(v, 2); }

}  // namespace

void render_chart(const std::string& csv_path, const std::string& out_path,
                  const std::vector<std::string>& columns) {
  std::ifstream in(csv_path, std::ios::binary);
  if (!in) throw IoError("cannot read " + csv_path);
  std::stringstream ss;
  ss << in.rdbuf();
  auto rows = parse_csv(ss.str());
  if (rows.empty()) throw ChartError("empty csv");

  const auto& header = rows.front();
  auto col_index = [&](const std::string& name) -> int {
    for (std::size_t i = 0; i < header.size(); ++i) {
      if (header[i] == name) return static_cast<int>(i);
    }
    return -1;
  };
  const int tcol = col_index("t");
  if (tcol < 0) throw ChartError("missing column: t");
  std::vector<int> sel;
  for (const auto& c : columns) {
    int idx = col_index(c);
    if (idx < 0) throw ChartError("missing column: " + c);
    sel.push_back(idx);
  }
  if (sel.empty()) throw ChartError("no columns requested");

  std::vector<double> ts;
  std::vector<std::vector<double>> series(sel.size());
  for (std::size_t r = 1; r < rows.size(); ++r) {
    const auto& row = rows[r];
    if (row.size() != header.size()) continue;
    ts.push_back(std::stod(row[static_cast<std::size_t>(tcol)]));
    for (std::size_t s = 0; s < sel.size(); ++s) {
      series[s].push_back(std::stod(row[static_cast<std::size_t>(sel[s])]));
    }
  }

  double tmin = 0, tmax = 1, ymax = 1;
  if (!ts.empty()) {
    tmin = *std::min_element(ts.begin(), ts.end());
    tmax = *std::max_element(ts.begin(), ts.end());
    if (tmax == tmin) tmax = tmin + 1;
    ymax = 0;
    for (const auto& s : series) {
      for (double v : s) ymax = std::max(ymax, v);
    }
    if (ymax <= 0) ymax = 1;
    ymax *= 1.05;
  }

  auto sx = [&](double t) {
    return kLeft + (t - tmin) / (tmax - tmin) * (kRight - kLeft);
  };
  auto sy = [&](double v) { return kBottom - v / ymax * (kBottom - kTop); };

  std::ostringstream svg;
  svg << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << kWidth
      << "\" height=\"" << kHeight << "\" viewBox=\"0 0 " << kWidth << " " << kHeight
      << "\">\n";
  svg << "<rect width=\"" << kWidth << "\" height=\"" << kHeight
      << "\" fill=\"white\"/>\n";
  // Axes.
  svg << "<line x1=\"" << kLeft << "\" y1=\"" << kBottom << "\" x2=\"" << kRight
      << "\" y2=\"" << kBottom << "\" stroke=\"black\"/>\n";
  svg << "<line x1=\"" << kLeft << "\" y1=\"" << kTop << "\" x2=\"" << kLeft
      << "\" y2=\"" << kBottom << "\" stroke=\"black\"/>\n";
  for (int i = 0; i <= 5; ++i) {
    const double t = tmin + (tmax - tmin) * i / 5.0;
    const double x = sx(t);
    svg << "<line x1=\"" << fmt(x) << "\" y1=\"" << kBottom << "\" x2=\"" << fmt(x)
        << "\" y2=\"" << kBottom + 5 << "\" stroke=\"black\"/>\n";
    svg << "<text x=\"" << fmt(x) << "\" y=\"" << kBottom + 18
        << "\" font-size=\"11\" text-anchor=\"middle\">" << fmt(t) << "</text>\n";
    const double v = ymax * i / 5.0;
    const double y = sy(v);
    svg << "<line x1=\"" << kLeft - 5 << "\" y1=\"" << fmt(y) << "\" x2=\"" << kLeft
        << "\" y2=\"" << fmt(y) << "\" stroke=\"black\"/>\n";
    svg << "<text x=\"" << kLeft - 8 << "\" y=\"" << fmt(y + 4)
        << "\" font-size=\"11\" text-anchor=\"end\">" << fmt(v) << "</text>\n";
  }
  svg << "<text x=\"" << (kLeft + kRight) / 2 << "\" y=\"" << kBottom + 34
      << "\" font-size=\"12\" text-anchor=\"middle\">t (s)</text>\n";

  for (std::size_t s = 0; s < series.size(); ++s) {
    const char* color = kPalette[s % (sizeof(kPalette) / sizeof(kPalette[0]))];
    svg << "<polyline fill=\"none\" stroke=\"" << color << "\" stroke-width=\"1.5\" points=\"";
    for (std::size_t i = 0; i < ts.size(); ++i) {
      if (i) svg << ' ';
      svg << fmt(sx(ts[i])) << ',' << fmt(sy(series[s][i]));
    }
    svg << "\"/>\n";
    // Legend.
    const int ly = kTop + 10 + static_cast<int>(s) * 18;
    svg << "<line x1=\"" << kRight + 16 << "\" y1=\"" << ly << "\" x2=\""
        << kRight + 40 << "\" y2=\"" << ly << "\" stroke=\"" << color
        << "\" stroke-width=\"2\"/>\n";
    svg << "<text x=\"" << kRight + 46 << "\" y=\"" << ly + 4
        << "\" font-size=\"11\">" << columns[s] << "</text>\n";
  }
  svg << "</svg>\n";

  std::ofstream out(out_path, std::ios::binary);
  if (!out) throw IoError("cannot write " + out_path);
  out << svg.str();
  if (!out) throw IoError("write failed: " + out_path);
}

}  // namespace pvgate::harness
