#include "daugs/report.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <sstream>

#include "daugs/core.hpp"

namespace daugs {

std::string fmt(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.10g", v);
  return buf;
}

std::string fmt(std::int64_t v) { return std::to_string(v); }

void Csv::add(std::vector<std::string> row) {
  if (row.size() != header.size()) throw Error("csv row width does not match header");
  rows.push_back(std::move(row));
}

std::string Csv::str() const {
  std::string out;
  auto line = [&](const std::vector<std::string>& r) {
    for (std::size_t i = 0; i < r.size(); ++i) {
      if (i) out += ',';
      if (r[i].find_first_of(",\"\r\n") != std::string::npos) {
        out += '"';
        for (char c : r[i]) {
          if (c == '"') out += '"';
          out += c;
        }
        out += '"';
      } else {
        out += r[i];
      }
    }
    out += '\n';
  };
  line(header);
  for (const auto& r : rows) line(r);
  return out;
}

void Csv::write(const std::filesystem::path& path) const { write_text(path, str()); }

std::size_t Csv::column(const std::string& name) const {
  const auto it = std::find(header.begin(), header.end(), name);
  if (it == header.end()) throw DataError("csv column missing: " + name);
  return static_cast<std::size_t>(it - header.begin());
}

const std::string& Csv::cell(std::size_t row, const std::string& name) const {
  return rows.at(row).at(column(name));
}

// RFC 4180 fields: quoted fields may hold commas, newlines and doubled quotes.
Csv parse_csv(const std::string& text) {
  std::vector<std::vector<std::string>> records;
  std::vector<std::string> fields;
  std::string field;
  bool quoted = false, was_quoted = false;
  auto end_field = [&] {
    fields.push_back(std::move(field));
    field.clear();
    was_quoted = false;
  };
  auto end_record = [&] {
    end_field();
    if (!(fields.size() == 1 && fields[0].empty())) records.push_back(std::move(fields));
    fields.clear();
  };
  for (std::size_t i = 0; i < text.size(); ++i) {
    const char c = text[i];
    if (quoted) {
      if (c != '"') field += c;
      else if (i + 1 < text.size() && text[i + 1] == '"') field += text[i++];
      else quoted = false;
    } else if (c == '"') {
      if (!field.empty() || was_quoted) throw DataError("malformed csv: stray quote");
      quoted = was_quoted = true;
    } else if (c == ',') {
      end_field();
    } else if (c == '\n') {
      end_record();
    } else if (c != '\r') {
      if (was_quoted) throw DataError("malformed csv: text after closing quote");
      field += c;
    }
  }
  if (quoted) throw DataError("malformed csv: unterminated quote");
  end_record();
  if (records.empty()) throw DataError("csv file is empty");
  Csv csv;
  csv.header = std::move(records.front());
  for (std::size_t r = 1; r < records.size(); ++r) {
    if (records[r].size() != csv.header.size()) throw DataError("csv row width does not match header");
    csv.rows.push_back(std::move(records[r]));
  }
  return csv;
}

Csv read_csv(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_csv(ss.str());
}

double parse_double(const std::string& s) {
  if (s == "inf") return std::numeric_limits<double>::infinity();
  if (s == "-inf") return -std::numeric_limits<double>::infinity();
  double v = 0.0;
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || ptr != s.data() + s.size()) throw DataError("not a number: '" + s + "'");
  return v;
}

std::int64_t parse_int(const std::string& s) {
  std::int64_t v = 0;
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || ptr != s.data() + s.size()) throw DataError("not an integer: '" + s + "'");
  return v;
}

void write_text(const std::filesystem::path& path, const std::string& text) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write " + path.string());
  out << text;
  if (!out) throw DataError("write failed: " + path.string());
}

namespace {

constexpr double kW = 640, kH = 420, kL = 70, kR = 20, kT = 40, kB = 60;
const char* const kPalette[] = {"#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b"};

const char* colour(std::size_t i) { return kPalette[i % std::size(kPalette)]; }

std::string esc(const std::string& s) {
  std::string out;
  for (char c : s) {
    switch (c) {
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '&': out += "&amp;"; break;
      default: out += c;
    }
  }
  return out;
}

struct Range {
  double lo = std::numeric_limits<double>::infinity();
  double hi = -std::numeric_limits<double>::infinity();

  void add(double v) {
    if (!std::isfinite(v)) return;
    lo = std::min(lo, v);
    hi = std::max(hi, v);
  }
  void finish() {
    if (lo > hi) lo = 0, hi = 1;
    if (lo == hi) lo -= 0.5, hi += 0.5;
    const double pad = 0.05 * (hi - lo);
    lo -= pad;
    hi += pad;
  }
};

class Canvas {
 public:
  Canvas(const std::string& title, const std::string& xlabel, const std::string& ylabel, Range x, Range y)
      : x_(x), y_(y) {
    out_ << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << kW << "\" height=\"" << kH << "\">\n"
         << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n"
         << "<text x=\"" << kW / 2 << "\" y=\"24\" text-anchor=\"middle\" font-size=\"16\">" << esc(title)
         << "</text>\n"
         << "<text x=\"" << kW / 2 << "\" y=\"" << kH - 15 << "\" text-anchor=\"middle\" font-size=\"13\">"
         << esc(xlabel) << "</text>\n"
         << "<text x=\"18\" y=\"" << kH / 2 << "\" text-anchor=\"middle\" font-size=\"13\" transform=\"rotate(-90 18 "
         << kH / 2 << ")\">" << esc(ylabel) << "</text>\n";
    line(kL, kH - kB, kW - kR, kH - kB, "black");
    line(kL, kT, kL, kH - kB, "black");
    for (int i = 0; i <= 4; ++i) {
      const double vy = y_.lo + (y_.hi - y_.lo) * i / 4.0;
      text(kL - 6, py(vy) + 4, fmt_tick(vy), "end");
    }
  }

  double px(double v) const { return kL + (v - x_.lo) / (x_.hi - x_.lo) * (kW - kL - kR); }
  double py(double v) const { return kH - kB - (v - y_.lo) / (y_.hi - y_.lo) * (kH - kT - kB); }

  void x_ticks() {
    for (int i = 0; i <= 4; ++i) {
      const double vx = x_.lo + (x_.hi - x_.lo) * i / 4.0;
      text(px(vx), kH - kB + 16, fmt_tick(vx), "middle");
    }
  }
  void line(double x1, double y1, double x2, double y2, const char* stroke, const char* dash = nullptr) {
    out_ << "<line x1=\"" << x1 << "\" y1=\"" << y1 << "\" x2=\"" << x2 << "\" y2=\"" << y2 << "\" stroke=\""
         << stroke << "\"";
    if (dash) out_ << " stroke-dasharray=\"" << dash << "\"";
    out_ << "/>\n";
  }
  void text(double x, double y, const std::string& s, const char* anchor, int size = 11) {
    out_ << "<text x=\"" << x << "\" y=\"" << y << "\" text-anchor=\"" << anchor << "\" font-size=\"" << size
         << "\">" << esc(s) << "</text>\n";
  }
  void circle(double x, double y, const char* fill) {
    out_ << "<circle cx=\"" << x << "\" cy=\"" << y << "\" r=\"3\" fill=\"" << fill << "\"/>\n";
  }
  void rect(double x, double y, double w, double h, const char* fill, const char* stroke = "none") {
    out_ << "<rect x=\"" << x << "\" y=\"" << y << "\" width=\"" << w << "\" height=\"" << h << "\" fill=\""
         << fill << "\" stroke=\"" << stroke << "\"/>\n";
  }
  void legend(const std::vector<PlotSeries>& s) {
    for (std::size_t i = 0; i < s.size(); ++i) {
      rect(kW - kR - 150, kT + 4 + 16 * i, 10, 10, colour(i));
      text(kW - kR - 134, kT + 13 + 16 * i, s[i].label, "start");
    }
  }
  void raw(const std::string& s) { out_ << s; }
  std::string finish() {
    out_ << "</svg>\n";
    return out_.str();
  }

 private:
  static std::string fmt_tick(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.3g", v);
    return buf;
  }

  Range x_, y_;
  std::ostringstream out_;
};

}  // namespace

std::string svg_line_plot(const std::string& title, const std::string& xlabel, const std::string& ylabel,
                          const std::vector<PlotSeries>& series) {
  Range xr, yr;
  for (const auto& s : series)
    for (std::size_t i = 0; i < s.x.size(); ++i) {
      xr.add(s.x[i]);
      const double e = i < s.err.size() ? s.err[i] : 0.0;
      yr.add(s.y[i] - e);
      yr.add(s.y[i] + e);
    }
  xr.finish();
  yr.finish();
  Canvas c(title, xlabel, ylabel, xr, yr);
  c.x_ticks();
  for (std::size_t k = 0; k < series.size(); ++k) {
    const auto& s = series[k];
    std::ostringstream pts;
    for (std::size_t i = 0; i < s.x.size(); ++i) pts << c.px(s.x[i]) << ',' << c.py(s.y[i]) << ' ';
    c.raw("<polyline fill=\"none\" stroke=\"" + std::string(colour(k)) + "\" points=\"" + pts.str() + "\"/>\n");
    for (std::size_t i = 0; i < s.x.size(); ++i) {
      c.circle(c.px(s.x[i]), c.py(s.y[i]), colour(k));
      if (i < s.err.size())
        c.line(c.px(s.x[i]), c.py(s.y[i] - s.err[i]), c.px(s.x[i]), c.py(s.y[i] + s.err[i]), colour(k));
    }
  }
  c.legend(series);
  return c.finish();
}

std::string svg_bar_plot(const std::string& title, const std::string& ylabel,
                         const std::vector<std::string>& categories, const std::vector<PlotSeries>& series) {
  Range yr;
  yr.add(0.0);
  for (const auto& s : series)
    for (std::size_t i = 0; i < s.y.size(); ++i) yr.add(s.y[i] + (i < s.err.size() ? s.err[i] : 0.0));
  yr.finish();
  yr.lo = std::min(yr.lo, 0.0);
  Range xr;
  xr.lo = 0;
  xr.hi = static_cast<double>(std::max<std::size_t>(categories.size(), 1));
  Canvas c(title, "", ylabel, xr, yr);
  const double group_w = c.px(1) - c.px(0);
  const double bar_w = 0.8 * group_w / static_cast<double>(std::max<std::size_t>(series.size(), 1));
  for (std::size_t g = 0; g < categories.size(); ++g) {
    c.text(c.px(g + 0.5), kH - kB + 16, categories[g], "middle");
    for (std::size_t k = 0; k < series.size(); ++k) {
      if (g >= series[k].y.size()) continue;
      const double v = series[k].y[g];
      const double x = c.px(static_cast<double>(g)) + 0.1 * group_w + bar_w * k;
      c.rect(x, c.py(std::max(v, 0.0)), bar_w, std::abs(c.py(0) - c.py(v)), colour(k));
      if (g < series[k].err.size()) {
        const double e = series[k].err[g];
        c.line(x + bar_w / 2, c.py(v - e), x + bar_w / 2, c.py(v + e), "black");
      }
    }
  }
  c.legend(series);
  return c.finish();
}

std::string svg_scatter(const std::string& title, const std::string& xlabel, const std::string& ylabel,
                        const std::vector<PlotSeries>& series, bool identity_line) {
  Range r;
  for (const auto& s : series) {
    for (double v : s.x) r.add(v);
    for (double v : s.y) r.add(v);
  }
  r.finish();
  Canvas c(title, xlabel, ylabel, r, r);
  c.x_ticks();
  if (identity_line) c.line(c.px(r.lo), c.py(r.lo), c.px(r.hi), c.py(r.hi), "grey", "4 3");
  for (std::size_t k = 0; k < series.size(); ++k)
    for (std::size_t i = 0; i < series[k].x.size(); ++i)
      c.circle(c.px(series[k].x[i]), c.py(series[k].y[i]), colour(k));
  c.legend(series);
  return c.finish();
}

std::string svg_bland_altman(const std::string& title, const std::vector<double>& reference,
                             const std::vector<double>& method, double bias, double loa_low, double loa_high) {
  Range xr, yr;
  std::vector<double> mean(reference.size()), diff(reference.size());
  for (std::size_t i = 0; i < reference.size(); ++i) {
    mean[i] = 0.5 * (reference[i] + method[i]);
    diff[i] = method[i] - reference[i];
    xr.add(mean[i]);
    yr.add(diff[i]);
  }
  yr.add(loa_low);
  yr.add(loa_high);
  xr.finish();
  yr.finish();
  Canvas c(title, "mean of methods", "difference (method - reference)", xr, yr);
  c.x_ticks();
  c.line(c.px(xr.lo), c.py(bias), c.px(xr.hi), c.py(bias), "black");
  c.line(c.px(xr.lo), c.py(loa_low), c.px(xr.hi), c.py(loa_low), "grey", "4 3");
  c.line(c.px(xr.lo), c.py(loa_high), c.px(xr.hi), c.py(loa_high), "grey", "4 3");
  c.text(kW - kR - 4, c.py(bias) - 4, "bias " + fmt(bias), "end");
  c.text(kW - kR - 4, c.py(loa_high) - 4, "LoA " + fmt(loa_high), "end");
  c.text(kW - kR - 4, c.py(loa_low) - 4, "LoA " + fmt(loa_low), "end");
  for (std::size_t i = 0; i < mean.size(); ++i) c.circle(c.px(mean[i]), c.py(diff[i]), colour(0));
  return c.finish();
}

Histogram histogram(const std::vector<double>& values, int bins) {
  if (bins < 1) throw DataError("histogram needs at least one bin");
  Histogram h;
  h.counts.assign(static_cast<std::size_t>(bins), 0);
  double lo = std::numeric_limits<double>::infinity(), hi = -lo;
  for (double v : values) {
    if (!std::isfinite(v)) continue;
    lo = std::min(lo, v);
    hi = std::max(hi, v);
  }
  if (lo > hi) lo = 0.0, hi = 1.0;
  const double width = hi > lo ? (hi - lo) / bins : 0.0;
  for (int i = 0; i <= bins; ++i) h.edges.push_back(lo + width * i);
  for (double v : values) {
    if (!std::isfinite(v)) continue;
    int b = width > 0.0 ? static_cast<int>((v - lo) / width) : 0;
    h.counts[static_cast<std::size_t>(std::clamp(b, 0, bins - 1))]++;
  }
  return h;
}

std::string svg_histogram(const std::string& title, const std::string& xlabel, const Histogram& h,
                          std::optional<double> marker) {
  Range xr, yr;
  xr.lo = h.edges.front();
  xr.hi = h.edges.back();
  if (xr.hi <= xr.lo) xr.hi = xr.lo + 1.0;
  yr.lo = 0;
  yr.hi = 1;
  for (int n : h.counts) yr.hi = std::max<double>(yr.hi, n);
  Canvas c(title, xlabel, "count", xr, yr);
  c.x_ticks();
  const double bw = h.counts.empty() ? 0.0 : (c.px(xr.hi) - c.px(xr.lo)) / h.counts.size();
  for (std::size_t i = 0; i < h.counts.size(); ++i)
    c.rect(c.px(xr.lo) + bw * i, c.py(h.counts[i]), bw, c.py(0) - c.py(h.counts[i]), colour(0), "white");
  if (marker) c.line(c.px(*marker), c.py(0), c.px(*marker), c.py(yr.hi), colour(1), "4 3");
  return c.finish();
}

void write_pgm8(const std::filesystem::path& path, int width, int height, const std::vector<std::uint8_t>& px) {
  std::string out = "P5\n" + std::to_string(width) + " " + std::to_string(height) + "\n255\n";
  out.append(px.begin(), px.end());
  write_text(path, out);
}

void write_ppm(const std::filesystem::path& path, int width, int height, const std::vector<Rgb>& px) {
  std::string out = "P6\n" + std::to_string(width) + " " + std::to_string(height) + "\n255\n";
  for (const Rgb& p : px) {
    out += static_cast<char>(p.r);
    out += static_cast<char>(p.g);
    out += static_cast<char>(p.b);
  }
  write_text(path, out);
}

}  // namespace daugs
