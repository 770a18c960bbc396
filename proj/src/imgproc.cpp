#include "daugs/imgproc.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <vector>

namespace daugs {
namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

// 1-D squared distance transform of sampled function f at positions step*i.
void dt1d(const double* f, double* out, int n, double step, std::vector<int>& v,
          std::vector<double>& z) {
  v.assign(n, 0);
  z.assign(n + 1, 0.0);
  const double w2 = step * step;
  auto intersect = [&](int q, int p) {
    return ((f[q] + w2 * q * q) - (f[p] + w2 * p * p)) / (2.0 * w2 * (q - p));
  };
  int k = -1;
  for (int q = 0; q < n; ++q) {
    if (f[q] == kInf) continue;
    if (k < 0) {
      k = 0;
      v[0] = q;
      z[0] = -kInf;
      z[1] = kInf;
      continue;
    }
    double s = intersect(q, v[k]);
    while (s <= z[k]) {
      --k;
      s = intersect(q, v[k]);
    }
    ++k;
    v[k] = q;
    z[k] = s;
    z[k + 1] = kInf;
  }
  if (k < 0) {
    for (int q = 0; q < n; ++q) out[q] = kInf;
    return;
  }
  int j = 0;
  for (int q = 0; q < n; ++q) {
    while (z[j + 1] < q) ++j;
    const double d = q - v[j];
    out[q] = w2 * d * d + f[v[j]];
  }
}

}  // namespace

std::vector<double> squared_distance_transform(const std::vector<std::uint8_t>& feature, int width,
                                               int height, double dx, double dy) {
  const std::size_t n = static_cast<std::size_t>(width) * height;
  std::vector<double> grid(n);
  for (std::size_t i = 0; i < n; ++i) grid[i] = feature[i] ? 0.0 : kInf;

  std::vector<int> v;
  std::vector<double> z;
  std::vector<double> col(height), colout(height), rowout(width);
  for (int x = 0; x < width; ++x) {
    for (int y = 0; y < height; ++y) col[y] = grid[static_cast<std::size_t>(y) * width + x];
    dt1d(col.data(), colout.data(), height, dy, v, z);
    for (int y = 0; y < height; ++y) grid[static_cast<std::size_t>(y) * width + x] = colout[y];
  }
  for (int y = 0; y < height; ++y) {
    double* row = grid.data() + static_cast<std::size_t>(y) * width;
    dt1d(row, rowout.data(), width, dx, v, z);
    std::copy(rowout.begin(), rowout.end(), row);
  }
  return grid;
}

Components connected_components(const std::vector<std::uint8_t>& in, int width, int height,
                                int connectivity) {
  Components out;
  out.labels.assign(static_cast<std::size_t>(width) * height, 0);
  out.sizes.push_back(0);
  std::vector<int> stack;
  for (int y0 = 0; y0 < height; ++y0)
    for (int x0 = 0; x0 < width; ++x0) {
      const std::size_t i0 = static_cast<std::size_t>(y0) * width + x0;
      if (!in[i0] || out.labels[i0]) continue;
      const int id = ++out.count;
      int size = 0;
      out.labels[i0] = id;
      stack.assign(1, static_cast<int>(i0));
      while (!stack.empty()) {
        const int i = stack.back();
        stack.pop_back();
        ++size;
        const int x = i % width, y = i / width;
        for (int ddy = -1; ddy <= 1; ++ddy)
          for (int ddx = -1; ddx <= 1; ++ddx) {
            if (ddx == 0 && ddy == 0) continue;
            if (connectivity == 4 && ddx != 0 && ddy != 0) continue;
            const int nx = x + ddx, ny = y + ddy;
            if (nx < 0 || ny < 0 || nx >= width || ny >= height) continue;
            const std::size_t j = static_cast<std::size_t>(ny) * width + nx;
            if (in[j] && !out.labels[j]) {
              out.labels[j] = id;
              stack.push_back(static_cast<int>(j));
            }
          }
      }
      out.sizes.push_back(size);
    }
  return out;
}

std::vector<std::uint8_t> enclosed_region(const std::vector<std::uint8_t>& wall, int width,
                                          int height) {
  const std::size_t n = static_cast<std::size_t>(width) * height;
  std::vector<std::uint8_t> outside(n, 0);
  std::vector<int> stack;
  auto seed = [&](int x, int y) {
    const std::size_t i = static_cast<std::size_t>(y) * width + x;
    if (!wall[i] && !outside[i]) {
      outside[i] = 1;
      stack.push_back(static_cast<int>(i));
    }
  };
  for (int x = 0; x < width; ++x) {
    seed(x, 0);
    seed(x, height - 1);
  }
  for (int y = 0; y < height; ++y) {
    seed(0, y);
    seed(width - 1, y);
  }
  while (!stack.empty()) {
    const int i = stack.back();
    stack.pop_back();
    const int x = i % width, y = i / width;
    if (x > 0) seed(x - 1, y);
    if (x + 1 < width) seed(x + 1, y);
    if (y > 0) seed(x, y - 1);
    if (y + 1 < height) seed(x, y + 1);
  }
  std::vector<std::uint8_t> enclosed(n);
  for (std::size_t i = 0; i < n; ++i) enclosed[i] = outside[i] ? 0 : 1;
  return enclosed;
}

}  // namespace daugs
