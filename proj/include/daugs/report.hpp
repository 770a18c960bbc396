#pragma once

// Report emission: CSV tables, small SVG plots and 8-bit PGM/PPM images.
// Numbers are printed with a fixed format so reports diff cleanly.

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

namespace daugs {

// "%.10g"; infinities print as "inf" / "-inf", NaN as "nan".
std::string fmt(double v);
std::string fmt(std::int64_t v);
inline std::string fmt(int v) { return fmt(static_cast<std::int64_t>(v)); }
inline std::string fmt(bool v) { return v ? "1" : "0"; }

struct Csv {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;

  void add(std::vector<std::string> row);
  std::string str() const;
  void write(const std::filesystem::path& path) const;

  // Column index by name; throws DataError when absent.
  std::size_t column(const std::string& name) const;
  const std::string& cell(std::size_t row, const std::string& name) const;
};

// Comma-separated file with a header line. Fields may be double-quoted.
Csv read_csv(const std::filesystem::path& path);
Csv parse_csv(const std::string& text);

double parse_double(const std::string& s);
std::int64_t parse_int(const std::string& s);

void write_text(const std::filesystem::path& path, const std::string& text);

struct PlotSeries {
  std::string label;
  std::vector<double> x;
  std::vector<double> y;
  std::vector<double> err;  // optional symmetric error bars
};

std::string svg_line_plot(const std::string& title, const std::string& xlabel, const std::string& ylabel,
                          const std::vector<PlotSeries>& series);

// Grouped bars: one group per category, one bar per series (series.y[i] is
// the value for categories[i]).
std::string svg_bar_plot(const std::string& title, const std::string& ylabel,
                         const std::vector<std::string>& categories, const std::vector<PlotSeries>& series);

std::string svg_scatter(const std::string& title, const std::string& xlabel, const std::string& ylabel,
                        const std::vector<PlotSeries>& series, bool identity_line);

std::string svg_bland_altman(const std::string& title, const std::vector<double>& reference,
                             const std::vector<double>& method, double bias, double loa_low, double loa_high);

struct Histogram {
  std::vector<double> edges;  // bins + 1 edges
  std::vector<int> counts;
};

// Equal-width bins over [min, max]; the last bin is closed. When every
// value is equal all of them land in the first bin.
Histogram histogram(const std::vector<double>& values, int bins);

std::string svg_histogram(const std::string& title, const std::string& xlabel, const Histogram& h,
                          std::optional<double> marker = std::nullopt);

struct Rgb {
  std::uint8_t r = 0, g = 0, b = 0;
};

// Binary 8-bit grey (P5) and colour (P6) images, row-major.
void write_pgm8(const std::filesystem::path& path, int width, int height, const std::vector<std::uint8_t>& px);
void write_ppm(const std::filesystem::path& path, int width, int height, const std::vector<Rgb>& px);

}  // namespace daugs
