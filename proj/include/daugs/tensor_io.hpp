#pragma once

// FPT binary tensor container.
//
//   "FPT1" | u8 dtype (1 = f32 LE, 2 = u8) | u8 ndim | ndim x u32 LE dims | payload
//
// The payload is row-major (last dimension fastest). Series are stored as
// [T, H, W], label masks as [H, W] u8, probability maps as [H, W, 3] and
// U-maps as [H, W].

#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

#include "daugs/core.hpp"

namespace daugs {

enum class DType : std::uint8_t { F32 = 1, U8 = 2 };

struct Tensor {
  DType dtype = DType::F32;
  std::vector<std::uint32_t> dims;
  std::vector<float> f32;
  std::vector<std::uint8_t> u8;

  std::size_t numel() const;
  bool operator==(const Tensor&) const = default;
};

enum class FptErrc { MalformedHeader, DimensionOverflow, TruncatedPayload, Io };

class FptError : public DataError {
 public:
  FptError(FptErrc code, const std::string& what) : DataError(what), code_(code) {}
  FptErrc code() const { return code_; }

 private:
  FptErrc code_;
};

// Element counts above this are rejected as DimensionOverflow.
inline constexpr std::uint64_t kMaxTensorElements = std::uint64_t{1} << 32;

std::vector<std::uint8_t> encode_fpt(const Tensor& t);
Tensor decode_fpt(std::span<const std::uint8_t> bytes);

void write_fpt(const std::filesystem::path& path, const Tensor& t);
Tensor read_fpt(const std::filesystem::path& path);

Tensor to_tensor(const ImageSeries& s);
Tensor to_tensor(const LabelMask& m);
Tensor to_tensor(const ClassProbabilityMap& p);
Tensor to_tensor(const UncertaintyMap& u);

// Frame times are not part of the container; the caller supplies them.
ImageSeries series_from_tensor(const Tensor& t, double dt_s, Spacing spacing = {});
LabelMask mask_from_tensor(const Tensor& t);
ClassProbabilityMap probs_from_tensor(const Tensor& t);

}  // namespace daugs
