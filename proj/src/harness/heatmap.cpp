#include "eraselab/harness/heatmap.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <sstream>

#include "eraselab/errors.hpp"
#include "eraselab/support/keyvalue.hpp"

namespace eraselab::harness {

namespace {

constexpr int kCell = 18;
constexpr int kCharWidth = 7;

std::string escape(const std::string& s) {
  std::string out;
  for (char ch : s) {
    switch (ch) {
      case '&': out += "&amp;"; break;
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '"': out += "&quot;"; break;
      default: out += ch;
    }
  }
  return out;
}

std::string fixed(double v, int digits) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.*f", digits, v);
  return buf;
}

}  // namespace

Rgb heat_color(double value) {
  if (!std::isfinite(value)) return {0, 0, 0};
  const double t = std::min(std::abs(value), 1.0);
  const Rgb& end = value >= 0 ? kPositive : kNegative;
  Rgb out{};
  for (int i = 0; i < 3; ++i)
    out[i] = static_cast<int>(std::lround(kNeutral[i] + t * (end[i] - kNeutral[i])));
  return out;
}

std::string hex_color(const Rgb& rgb) {
  char buf[8];
  std::snprintf(buf, sizeof buf, "#%02x%02x%02x", rgb[0], rgb[1], rgb[2]);
  return buf;
}

std::string heatmap_svg(const evaluation::ImpactMatrix& delta, const concepts::ConceptSpace& space,
                        const std::string& title) {
  const std::size_t rows = delta.row_count();
  const std::size_t cols = delta.column_count();
  std::vector<std::string> col_names;
  std::size_t row_chars = 1, col_chars = 1;
  for (const auto& l : delta.row_labels) row_chars = std::max(row_chars, l.size());
  for (auto c : delta.columns) {
    col_names.push_back(space.record(c).name);
    col_chars = std::max(col_chars, col_names.back().size());
  }

  const int left = 10 + static_cast<int>(row_chars) * kCharWidth;
  const int top = 30 + static_cast<int>(col_chars) * kCharWidth;
  const int grid_w = static_cast<int>(cols) * kCell;
  const int grid_h = static_cast<int>(rows) * kCell;
  const int legend_x = left + grid_w + 30;
  const int legend_h = std::max(grid_h, 100);
  const int width = legend_x + 70;
  const int height = top + legend_h + 20;

  std::ostringstream os;
  os << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << width << "\" height=\"" << height
     << "\" viewBox=\"0 0 " << width << ' ' << height << "\" font-family=\"monospace\" font-size=\"11\">\n";
  os << "<rect width=\"100%\" height=\"100%\" fill=\"#ffffff\"/>\n";
  os << "<text x=\"10\" y=\"16\" font-size=\"13\">" << escape(title.empty() ? "impact " + delta.metric : title)
     << "</text>\n";

  for (std::size_t c = 0; c < cols; ++c) {
    const int x = left + static_cast<int>(c) * kCell + kCell / 2 + 4;
    os << "<text x=\"" << x << "\" y=\"" << top - 4 << "\" transform=\"rotate(-90 " << x << ' ' << top - 4
       << ")\">" << escape(col_names[c]) << "</text>\n";
  }
  for (std::size_t r = 0; r < rows; ++r) {
    const int y = top + static_cast<int>(r) * kCell;
    os << "<text x=\"" << left - 4 << "\" y=\"" << y + kCell - 5 << "\" text-anchor=\"end\">"
       << escape(delta.row_labels[r]) << "</text>\n";
    for (std::size_t c = 0; c < cols; ++c) {
      const double v = delta.at(r, c);
      os << "<rect x=\"" << left + static_cast<int>(c) * kCell << "\" y=\"" << y << "\" width=\"" << kCell
         << "\" height=\"" << kCell << "\" fill=\"" << hex_color(heat_color(v)) << "\"><title>"
         << escape(delta.row_labels[r]) << " / " << escape(col_names[c]) << ": " << support::format_double(v)
         << "</title></rect>\n";
    }
  }
  os << "<rect x=\"" << left << "\" y=\"" << top << "\" width=\"" << grid_w << "\" height=\"" << grid_h
     << "\" fill=\"none\" stroke=\"#444444\"/>\n";

  // Legend: 21 bands from +1 (top) to -1 (bottom).
  constexpr int bands = 21;
  const double band_h = static_cast<double>(legend_h) / bands;
  for (int i = 0; i < bands; ++i) {
    const double v = 1.0 - 2.0 * i / (bands - 1);
    os << "<rect x=\"" << legend_x << "\" y=\"" << fixed(top + i * band_h, 2) << "\" width=\"14\" height=\""
       << fixed(band_h + 0.5, 2) << "\" fill=\"" << hex_color(heat_color(v)) << "\"/>\n";
  }
  const double ticks[] = {1.0, 0.5, 0.0, -0.5, -1.0};
  for (double t : ticks) {
    const double y = top + (1.0 - t) / 2.0 * (legend_h - band_h) + band_h / 2.0;
    os << "<text x=\"" << legend_x + 18 << "\" y=\"" << fixed(y + 4, 2) << "\">" << fixed(t, 1) << "</text>\n";
  }
  os << "</svg>\n";
  return os.str();
}

void render_heatmap(const evaluation::ImpactMatrix& delta, const concepts::ConceptSpace& space,
                    const std::string& path, const std::string& title) {
  support::write_file(path, heatmap_svg(delta, space, title));
}

}  // namespace eraselab::harness
