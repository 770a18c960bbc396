#pragma once

// Synthetic first-pass perfusion phantoms, dataset-shift transforms and
// frame-swap motion-correction corruption.

#include <array>
#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "daugs/core.hpp"
#include "daugs/rng.hpp"

namespace daugs {

// Peak-normalised gamma variate plus a constant baseline:
//   c(t) = baseline + amplitude * (s / (alpha beta))^alpha * exp(alpha - s / beta),  s = t - onset > 0
// The bolus term peaks at s = alpha * beta with value `amplitude`.
struct GammaVariate {
  double amplitude = 1.0;
  double onset_s = 0.0;
  double alpha = 2.0;
  double beta = 1.5;
  double baseline = 0.0;

  double operator()(double t) const;
};

struct DefectSector {
  double start_deg = 0.0;  // image angle convention of aha6_split
  double width_deg = 60.0;
  double scale = 0.5;      // multiplies the myocardial bolus amplitude
};

struct PhantomSpec {
  int width = 128;
  int height = 128;
  int n_frames = 30;
  double dt_s = 1.0;
  Point lv_center{64.0, 64.0};
  double cavity_radius = 14.0;
  double wall_thickness = 7.0;
  Point rv_center{28.0, 64.0};
  double rv_radius = 13.0;
  GammaVariate background{0.05, 10.0, 3.0, 4.0, 0.05};
  GammaVariate rv{1.0, 3.0, 2.0, 1.5, 0.1};
  GammaVariate lv{0.9, 6.0, 2.5, 1.6, 0.1};
  GammaVariate myo{0.25, 9.0, 3.0, 2.5, 0.1};
  std::vector<DefectSector> defects;
  double noise_sigma = 0.01;
  std::uint64_t seed = 0;

  void validate() const;
};

struct Phantom {
  ImageSeries series;
  LabelMask truth;
  Point rv_centroid;
};

Phantom gen_phantom(const PhantomSpec& spec);

// Noise-free class curve of a phantom pixel class, sampled at the frame times.
std::vector<double> class_curve(const PhantomSpec& spec, std::uint8_t cls);

struct ShiftTransform {
  double rotation_deg = 0.0;   // [-60, 60]
  double shear_deg = 0.0;      // [-10, 10]
  double tx_px = 0.0;          // [-2, 2]
  double ty_px = 0.0;          // [-2, 2]
  double scale = 1.0;          // [0.8, 1.2]
  bool apply_gamma = false;
  double gamma = 1.0;          // [0.5, 1.5]
  bool apply_flatfield = false;
  double flatfield_sigma = 0.0;  // [0, 5]
  double coil_amplitude = 0.0;   // [-0.3, 0.3]
  Point coil_center{64.0, 64.0};
  double coil_width_px = 40.0;
  double noise_sigma = 0.0;      // [0, 0.02]

  static ShiftTransform identity() { return {}; }
  void validate() const;  // throws DataError outside the ranges above
  // Weighted RMS of the parameters, each normalised by its range limit, so
  // the value lies in [0, 1]. Geometric terms carry weight 1, photometric
  // terms weight 0.5.
  double magnitude() const;
};

ShiftTransform sample_shift(Rng& rng, int width, int height);

struct ShiftedCase {
  ImageSeries series;
  LabelMask truth;
  Point rv_centroid;
  double shift_magnitude = 0.0;
};

// Affine warp about the image centre (image bilinear with clamped edges,
// mask nearest neighbour, outside -> background), then flat-field
// correction, coil modulation, gamma and additive noise on the image only.
ShiftedCase apply_shift(const ImageSeries& series, const LabelMask& truth, Point rv_centroid,
                        const ShiftTransform& t, Rng& rng);

// Maps a point through the geometric part of the transform.
Point shift_point(const ShiftTransform& t, int width, int height, Point p);

inline constexpr int kMocoFirstFrame = 8;
inline constexpr int kMocoLastFrame = 22;

// Replaces f distinct frames drawn from [8, 22] by the diastolic frames.
// Returns the corrupted series; `swapped` receives the frame indices.
ImageSeries moco_corrupt(const ImageSeries& systolic, const ImageSeries& diastolic, int f, Rng& rng,
                         std::vector<int>* swapped = nullptr);

// Systolic / diastolic phantom pair sharing curves and centre; the diastolic
// heart has a larger cavity and a thinner wall.
std::array<Phantom, 2> gen_moco_pair(std::uint64_t seed);

enum class ShiftRegime { None, Shifted };
std::string to_string(ShiftRegime r);
ShiftRegime parse_regime(const std::string& s);

struct CohortCase {
  Case data;
  PhantomSpec spec;
  ShiftTransform shift;
  ShiftRegime regime = ShiftRegime::None;
};

// Randomised phantom spec for one case id.
PhantomSpec random_phantom_spec(std::uint64_t seed, std::uint64_t case_id);

// Cases first_id .. first_id + n - 1. Shifted cases get one sampled
// ShiftTransform each.
std::vector<CohortCase> gen_cohort(int n, ShiftRegime regime, std::uint64_t seed, std::uint64_t first_id = 0,
                                   int jobs = 1);

// Writes <dir>/<name>_series.fpt and <name>_truth.fpt per case and
// <dir>/manifest.csv.
void write_cohort(const std::filesystem::path& dir, const std::vector<CohortCase>& cohort, std::uint64_t seed);

// Reads a manifest written by write_cohort (paths relative to its folder).
std::vector<Case> read_manifest(const std::filesystem::path& manifest);

}  // namespace daugs
