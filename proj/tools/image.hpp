#pragma once

#include <array>
#include <cstdint>
#include <iosfwd>
#include <stdexcept>
#include <vector>

#include "memsim/circuit.hpp"
#include "memsim/memcell.hpp"

namespace memsim::cli {

class ImageFormatError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// 8-bit greyscale image as read from a PGM file.
struct GreyImage {
  int width = 0;
  int height = 0;
  int maxval = 255;
  bool ascii = false;  // P2 when true, P5 otherwise
  std::vector<std::uint8_t> pixels;
};

GreyImage read_pgm(std::istream& is);
void write_pgm(std::ostream& os, const GreyImage& img);

inline constexpr double kBlackVolts = 0.2;
inline constexpr double kWhiteVolts = 2.0;

double grey_to_volts(int grey, int maxval = 255);
int volts_to_grey(double v, int maxval = 255);

struct ImageStats {
  std::size_t pixels = 0;
  double mean_error_pct = 0.0;   // per-pixel |v_out - v_in| / v_in
  double max_error_pct = 0.0;
  double mean_abs_error_fullscale_pct = 0.0;  // |g_out - g_in| / maxval
  std::size_t pixels_ge_0p4v = 0;
  double mean_abs_error_fullscale_pct_ge_0p4v = 0.0;
  static constexpr std::array<double, 6> kBinEdges{0.0, 1.0, 2.0, 5.0, 10.0, 20.0};
  std::array<std::size_t, 6> histogram{};  // last bin is open-ended
  std::uint64_t digital_capacitors = 0;
  std::uint64_t analog_capacitors = 0;
};

struct ImageResult {
  GreyImage image;
  ImageStats stats;
};

/// Stores every pixel in the cell for the configured storage time and
/// reads it back. The transient path runs one full simulation per distinct
/// grey level.
ImageResult store_image(const GreyImage& in, const memcell::CellConfig& cfg,
                        bool transient = false,
                        const circuit::StepPolicy& policy = {});

void write_stats_csv(std::ostream& os, const ImageStats& stats);

}  // namespace memsim::cli
