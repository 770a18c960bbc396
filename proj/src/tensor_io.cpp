#include "daugs/tensor_io.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <iterator>

namespace daugs {
namespace {

constexpr char kMagic[4] = {'F', 'P', 'T', '1'};

void put_u32(std::vector<std::uint8_t>& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
}

std::uint32_t get_u32(const std::uint8_t* p) {
  return std::uint32_t{p[0]} | (std::uint32_t{p[1]} << 8) | (std::uint32_t{p[2]} << 16) |
         (std::uint32_t{p[3]} << 24);
}

}  // namespace

std::size_t Tensor::numel() const {
  std::size_t n = 1;
  for (auto d : dims) n *= d;
  return n;
}

std::vector<std::uint8_t> encode_fpt(const Tensor& t) {
  if (t.dims.empty() || t.dims.size() > 255)
    throw FptError(FptErrc::MalformedHeader, "tensor rank must be in [1, 255]");
  std::uint64_t n = 1;
  for (auto d : t.dims) {
    if (d == 0) throw FptError(FptErrc::MalformedHeader, "tensor dimension of zero");
    n *= d;
    if (n > kMaxTensorElements) throw FptError(FptErrc::DimensionOverflow, "tensor too large");
  }
  const std::size_t have = t.dtype == DType::F32 ? t.f32.size() : t.u8.size();
  if (have != n) throw FptError(FptErrc::TruncatedPayload, "tensor payload does not match dims");

  std::vector<std::uint8_t> out(std::begin(kMagic), std::end(kMagic));
  out.push_back(static_cast<std::uint8_t>(t.dtype));
  out.push_back(static_cast<std::uint8_t>(t.dims.size()));
  for (auto d : t.dims) put_u32(out, d);
  if (t.dtype == DType::F32) {
    out.reserve(out.size() + 4 * n);
    for (float v : t.f32) put_u32(out, std::bit_cast<std::uint32_t>(v));
  } else {
    out.insert(out.end(), t.u8.begin(), t.u8.end());
  }
  return out;
}

Tensor decode_fpt(std::span<const std::uint8_t> bytes) {
  if (bytes.size() < 6 || std::memcmp(bytes.data(), kMagic, 4) != 0)
    throw FptError(FptErrc::MalformedHeader, "missing FPT1 magic");
  Tensor t;
  const std::uint8_t dtype = bytes[4];
  if (dtype != 1 && dtype != 2) throw FptError(FptErrc::MalformedHeader, "unknown FPT dtype");
  t.dtype = static_cast<DType>(dtype);
  const std::size_t ndim = bytes[5];
  if (ndim == 0) throw FptError(FptErrc::MalformedHeader, "FPT rank of zero");
  if (bytes.size() < 6 + 4 * ndim) throw FptError(FptErrc::MalformedHeader, "truncated FPT header");

  std::uint64_t n = 1;
  for (std::size_t i = 0; i < ndim; ++i) {
    const std::uint32_t d = get_u32(bytes.data() + 6 + 4 * i);
    if (d == 0) throw FptError(FptErrc::MalformedHeader, "FPT dimension of zero");
    n *= d;
    if (n > kMaxTensorElements) throw FptError(FptErrc::DimensionOverflow, "FPT dimensions overflow");
    t.dims.push_back(d);
  }
  const std::size_t offset = 6 + 4 * ndim;
  const std::uint64_t elem = t.dtype == DType::F32 ? 4 : 1;
  if (bytes.size() - offset < n * elem)
    throw FptError(FptErrc::TruncatedPayload, "FPT payload shorter than its dims");
  if (bytes.size() - offset > n * elem)
    throw FptError(FptErrc::MalformedHeader, "trailing bytes after FPT payload");

  const std::uint8_t* p = bytes.data() + offset;
  if (t.dtype == DType::F32) {
    t.f32.resize(n);
    for (std::size_t i = 0; i < n; ++i) t.f32[i] = std::bit_cast<float>(get_u32(p + 4 * i));
  } else {
    t.u8.assign(p, p + n);
  }
  return t;
}

void write_fpt(const std::filesystem::path& path, const Tensor& t) {
  const auto bytes = encode_fpt(t);
  std::ofstream f(path, std::ios::binary);
  if (!f) throw FptError(FptErrc::Io, "cannot open for writing: " + path.string());
  f.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!f) throw FptError(FptErrc::Io, "write failed: " + path.string());
}

Tensor read_fpt(const std::filesystem::path& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw FptError(FptErrc::Io, "cannot open: " + path.string());
  std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(f)), std::istreambuf_iterator<char>());
  return decode_fpt(bytes);
}

Tensor to_tensor(const ImageSeries& s) {
  Tensor t;
  t.dtype = DType::F32;
  t.dims = {static_cast<std::uint32_t>(s.n_frames), static_cast<std::uint32_t>(s.height),
            static_cast<std::uint32_t>(s.width)};
  t.f32 = s.data;
  return t;
}

Tensor to_tensor(const LabelMask& m) {
  Tensor t;
  t.dtype = DType::U8;
  t.dims = {static_cast<std::uint32_t>(m.height), static_cast<std::uint32_t>(m.width)};
  t.u8 = m.labels;
  return t;
}

Tensor to_tensor(const ClassProbabilityMap& p) {
  Tensor t;
  t.dims = {static_cast<std::uint32_t>(p.height), static_cast<std::uint32_t>(p.width), kNumClasses};
  t.f32 = p.probs;
  return t;
}

Tensor to_tensor(const UncertaintyMap& u) {
  Tensor t;
  t.dims = {static_cast<std::uint32_t>(u.height), static_cast<std::uint32_t>(u.width)};
  t.f32 = u.u;
  return t;
}

ImageSeries series_from_tensor(const Tensor& t, double dt_s, Spacing spacing) {
  if (t.dtype != DType::F32 || t.dims.size() != 3)
    throw DataError("series tensor must be f32 with dims [T, H, W]");
  ImageSeries s = ImageSeries::zeros(static_cast<int>(t.dims[2]), static_cast<int>(t.dims[1]),
                                     static_cast<int>(t.dims[0]), dt_s, spacing);
  s.data = t.f32;
  return s;
}

LabelMask mask_from_tensor(const Tensor& t) {
  if (t.dtype != DType::U8 || t.dims.size() != 2)
    throw DataError("label tensor must be u8 with dims [H, W]");
  LabelMask m;
  m.height = static_cast<int>(t.dims[0]);
  m.width = static_cast<int>(t.dims[1]);
  m.labels = t.u8;
  m.validate();
  return m;
}

ClassProbabilityMap probs_from_tensor(const Tensor& t) {
  if (t.dtype != DType::F32 || t.dims.size() != 3 || t.dims[2] != kNumClasses)
    throw DataError("probability tensor must be f32 with dims [H, W, 3]");
  ClassProbabilityMap p;
  p.height = static_cast<int>(t.dims[0]);
  p.width = static_cast<int>(t.dims[1]);
  p.probs = t.f32;
  return p;
}

}  // namespace daugs
