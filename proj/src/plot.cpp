#include "irl/plot.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdio>
#include <istream>
#include <limits>
#include <ostream>
#include <sstream>

#include "irl/ml_irl.hpp"

namespace irl {

namespace {

constexpr double kWidth = 680, kHeight = 440;
constexpr double kLeft = 80, kRight = 170, kTop = 40, kBottom = 60;
constexpr std::array<const char*, 6> kPalette = {"#1f77b4", "#d62728", "#2ca02c",
                                                 "#ff7f0e", "#9467bd", "#8c564b"};

std::string num(double x) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.4g", x);
  return buf;
}

std::string px(double x) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.2f", x);
  return buf;
}

std::string escape(const std::string& s) {
  std::string out;
  for (char c : s) {
    switch (c) {
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '&': out += "&amp;"; break;
      case '"': out += "&quot;"; break;
      default: out += c;
    }
  }
  return out;
}

void header(std::ostringstream& os, double w, double h) {
  os << "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n"
     << "<!-- irl_lab svg v1 -->\n"
     << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << px(w) << "\" height=\"" << px(h)
     << "\" viewBox=\"0 0 " << px(w) << ' ' << px(h) << "\" font-family=\"sans-serif\" font-size=\"12\">\n"
     << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
}

// Sequential five-stop ramp, dark for low values.
std::string ramp(double t) {
  t = std::clamp(t, 0.0, 1.0);
  static constexpr double stops[5][3] = {
      {68, 1, 84}, {59, 82, 139}, {33, 145, 140}, {94, 201, 98}, {253, 231, 37}};
  const double pos = t * 4.0;
  const int i = std::min(3, static_cast<int>(pos));
  const double f = pos - i;
  char buf[8];
  std::snprintf(buf, sizeof buf, "#%02x%02x%02x",
                static_cast<int>(std::lround(stops[i][0] + f * (stops[i + 1][0] - stops[i][0]))),
                static_cast<int>(std::lround(stops[i][1] + f * (stops[i + 1][1] - stops[i][1]))),
                static_cast<int>(std::lround(stops[i][2] + f * (stops[i + 1][2] - stops[i][2]))));
  return buf;
}

}  // namespace

std::string convergence_svg(const std::vector<Series>& series, const std::string& x_label,
                            const std::string& y_label, bool loglog, const std::string& title) {
  std::vector<Series> pts;
  double x_lo = std::numeric_limits<double>::infinity(), x_hi = -x_lo;
  double y_lo = x_lo, y_hi = -x_lo;
  for (const auto& s : series) {
    Series t{s.label, {}, {}};
    for (std::size_t i = 0; i < std::min(s.x.size(), s.y.size()); ++i) {
      double x = s.x[i], y = s.y[i];
      if (!std::isfinite(x) || !std::isfinite(y)) continue;
      if (loglog) {
        if (x <= 0.0 || y <= 0.0) continue;
        x = std::log10(x);
        y = std::log10(y);
      }
      t.x.push_back(x);
      t.y.push_back(y);
      x_lo = std::min(x_lo, x);
      x_hi = std::max(x_hi, x);
      y_lo = std::min(y_lo, y);
      y_hi = std::max(y_hi, y);
    }
    pts.push_back(std::move(t));
  }
  if (!std::isfinite(x_lo) || !std::isfinite(y_lo)) {
    throw std::invalid_argument("convergence_svg: no finite points to plot");
  }
  if (x_hi == x_lo) x_hi = x_lo + 1.0;
  if (y_hi == y_lo) {
    y_hi += 0.5;
    y_lo -= 0.5;
  }
  const double pw = kWidth - kLeft - kRight, ph = kHeight - kTop - kBottom;
  auto sx = [&](double x) { return kLeft + (x - x_lo) / (x_hi - x_lo) * pw; };
  auto sy = [&](double y) { return kTop + ph - (y - y_lo) / (y_hi - y_lo) * ph; };

  std::ostringstream os;
  header(os, kWidth, kHeight);
  if (!title.empty()) {
    os << "<text x=\"" << px(kLeft + pw / 2) << "\" y=\"22\" text-anchor=\"middle\" font-size=\"14\">"
       << escape(title) << "</text>\n";
  }
  os << "<rect x=\"" << px(kLeft) << "\" y=\"" << px(kTop) << "\" width=\"" << px(pw) << "\" height=\""
     << px(ph) << "\" fill=\"none\" stroke=\"black\"/>\n";
  for (int i = 0; i <= 4; ++i) {
    const double fx = x_lo + (x_hi - x_lo) * i / 4.0;
    const double fy = y_lo + (y_hi - y_lo) * i / 4.0;
    const std::string lx = loglog ? "1e" + num(fx) : num(fx);
    const std::string ly = loglog ? "1e" + num(fy) : num(fy);
    os << "<line x1=\"" << px(sx(fx)) << "\" y1=\"" << px(kTop + ph) << "\" x2=\"" << px(sx(fx))
       << "\" y2=\"" << px(kTop + ph + 5) << "\" stroke=\"black\"/>\n"
       << "<text x=\"" << px(sx(fx)) << "\" y=\"" << px(kTop + ph + 18) << "\" text-anchor=\"middle\">"
       << lx << "</text>\n"
       << "<line x1=\"" << px(kLeft - 5) << "\" y1=\"" << px(sy(fy)) << "\" x2=\"" << px(kLeft)
       << "\" y2=\"" << px(sy(fy)) << "\" stroke=\"black\"/>\n"
       << "<text x=\"" << px(kLeft - 8) << "\" y=\"" << px(sy(fy) + 4) << "\" text-anchor=\"end\">" << ly
       << "</text>\n";
  }
  os << "<text x=\"" << px(kLeft + pw / 2) << "\" y=\"" << px(kHeight - 15)
     << "\" text-anchor=\"middle\">" << escape(x_label) << "</text>\n"
     << "<text x=\"18\" y=\"" << px(kTop + ph / 2) << "\" text-anchor=\"middle\" transform=\"rotate(-90 18 "
     << px(kTop + ph / 2) << ")\">" << escape(y_label) << "</text>\n";

  for (std::size_t k = 0; k < pts.size(); ++k) {
    const char* color = kPalette[k % kPalette.size()];
    if (!pts[k].x.empty()) {
      os << "<polyline fill=\"none\" stroke=\"" << color << "\" stroke-width=\"1.5\" points=\"";
      for (std::size_t i = 0; i < pts[k].x.size(); ++i) {
        os << (i ? " " : "") << px(sx(pts[k].x[i])) << ',' << px(sy(pts[k].y[i]));
      }
      os << "\"/>\n";
    }
    const double ly = kTop + 10 + 20.0 * static_cast<double>(k);
    os << "<line x1=\"" << px(kWidth - kRight + 15) << "\" y1=\"" << px(ly) << "\" x2=\""
       << px(kWidth - kRight + 40) << "\" y2=\"" << px(ly) << "\" stroke=\"" << color
       << "\" stroke-width=\"2\"/>\n"
       << "<text x=\"" << px(kWidth - kRight + 46) << "\" y=\"" << px(ly + 4) << "\">"
       << escape(pts[k].label) << "</text>\n";
  }
  os << "</svg>\n";
  return os.str();
}

std::string heatmap_svg(const TableD& values, const std::string& title) {
  if (values.size() == 0) throw std::invalid_argument("heatmap_svg: empty grid");
  if (!values.allFinite()) throw std::invalid_argument("heatmap_svg: non-finite value");
  const double cell = std::clamp(400.0 / static_cast<double>(std::max(values.rows(), values.cols())), 6.0, 64.0);
  const double left = 40, top = 40;
  const double gw = cell * values.cols(), gh = cell * values.rows();
  const double w = left + gw + 110, h = top + gh + 30;
  const double lo = values.minCoeff(), hi = values.maxCoeff();
  const double span = hi > lo ? hi - lo : 1.0;
  const bool labels = values.cols() <= 12 && values.rows() <= 12;

  std::ostringstream os;
  header(os, w, h);
  os << "<text x=\"" << px(left) << "\" y=\"24\" font-size=\"14\">" << escape(title) << "</text>\n";
  for (Eigen::Index r = 0; r < values.rows(); ++r) {
    for (Eigen::Index c = 0; c < values.cols(); ++c) {
      const double t = (values(r, c) - lo) / span;
      os << "<rect x=\"" << px(left + cell * c) << "\" y=\"" << px(top + cell * r) << "\" width=\""
         << px(cell) << "\" height=\"" << px(cell) << "\" fill=\"" << ramp(t) << "\"/>\n";
      if (labels) {
        os << "<text x=\"" << px(left + cell * (c + 0.5)) << "\" y=\"" << px(top + cell * (r + 0.5) + 4)
           << "\" text-anchor=\"middle\" font-size=\"10\" fill=\"" << (t > 0.6 ? "black" : "white")
           << "\">" << num(values(r, c)) << "</text>\n";
      }
    }
  }
  // Color bar.
  const double bx = left + gw + 20;
  for (int i = 0; i < 20; ++i) {
    os << "<rect x=\"" << px(bx) << "\" y=\"" << px(top + gh * i / 20.0) << "\" width=\"16\" height=\""
       << px(gh / 20.0 + 0.5) << "\" fill=\"" << ramp(1.0 - i / 19.0) << "\"/>\n";
  }
  os << "<text x=\"" << px(bx + 22) << "\" y=\"" << px(top + 10) << "\">" << num(hi) << "</text>\n"
     << "<text x=\"" << px(bx + 22) << "\" y=\"" << px(top + gh) << "\">" << num(lo) << "</text>\n"
     << "</svg>\n";
  return os.str();
}

void write_matrix_csv(std::ostream& os, const TableD& m) {
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    for (Eigen::Index c = 0; c < m.cols(); ++c) os << (c ? "," : "") << format_double(m(r, c));
    os << '\n';
  }
}

TableD read_matrix_csv(std::istream& is) {
  std::vector<std::vector<double>> rows;
  std::string line;
  while (std::getline(is, line)) {
    if (line.empty()) continue;
    std::vector<double> row;
    std::istringstream ss(line);
    std::string field;
    while (std::getline(ss, field, ',')) {
      std::size_t used = 0;
      double x;
      try {
        x = std::stod(field, &used);
      } catch (const std::logic_error&) {
        throw std::invalid_argument("matrix CSV: bad number '" + field + "'");
      }
      if (used != field.size()) throw std::invalid_argument("matrix CSV: bad number '" + field + "'");
      row.push_back(x);
    }
    if (!rows.empty() && row.size() != rows.front().size()) {
      throw std::invalid_argument("matrix CSV: ragged rows");
    }
    rows.push_back(std::move(row));
  }
  if (rows.empty() || rows.front().empty()) throw std::invalid_argument("matrix CSV is empty");
  TableD m(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(rows.front().size()));
  for (std::size_t r = 0; r < rows.size(); ++r) {
    for (std::size_t c = 0; c < rows[r].size(); ++c) {
      m(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) = rows[r][c];
    }
  }
  return m;
}

}  // namespace irl
