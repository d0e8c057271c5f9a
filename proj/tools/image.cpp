#include "image.hpp"

#include <algorithm>
#include <cmath>
#include <istream>
#include <ostream>
#include <string>

#include "memsim/csv.hpp"

namespace memsim::cli {

namespace {

void skip_space_and_comments(std::istream& is) {
  while (true) {
    const int c = is.peek();
    if (c == '#') {
      std::string line;
      std::getline(is, line);
    } else if (c == ' ' || c == '\t' || c == '\n' || c == '\r') {
      is.get();
    } else {
      return;
    }
  }
}

int read_header_int(std::istream& is, const char* what) {
  skip_space_and_comments(is);
  int v = 0;
  if (!(is >> v)) throw ImageFormatError(std::string("pgm: bad ") + what);
  return v;
}

}  // namespace

GreyImage read_pgm(std::istream& is) {
  char magic[2] = {0, 0};
  if (!is.read(magic, 2) || magic[0] != 'P' || (magic[1] != '2' && magic[1] != '5')) {
    throw ImageFormatError("pgm: unsupported format (expected P2 or P5)");
  }
  GreyImage img;
  img.ascii = magic[1] == '2';
  img.width = read_header_int(is, "width");
  img.height = read_header_int(is, "height");
  img.maxval = read_header_int(is, "maxval");
  if (img.width <= 0 || img.height <= 0) throw ImageFormatError("pgm: bad dimensions");
  if (img.maxval <= 0 || img.maxval > 255) {
    throw ImageFormatError("pgm: only 8-bit greyscale is supported");
  }
  const std::size_t n = static_cast<std::size_t>(img.width) * img.height;
  img.pixels.resize(n);
  if (img.ascii) {
    for (std::size_t i = 0; i < n; ++i) {
      const int v = read_header_int(is, "pixel");
      if (v < 0 || v > img.maxval) throw ImageFormatError("pgm: pixel out of range");
      img.pixels[i] = static_cast<std::uint8_t>(v);
    }
  } else {
    is.get();  // single whitespace after maxval
    is.read(reinterpret_cast<char*>(img.pixels.data()), static_cast<std::streamsize>(n));
    if (static_cast<std::size_t>(is.gcount()) != n) {
      throw ImageFormatError("pgm: truncated pixel data");
    }
    for (auto p : img.pixels) {
      if (p > img.maxval) throw ImageFormatError("pgm: pixel out of range");
    }
  }
  return img;
}

void write_pgm(std::ostream& os, const GreyImage& img) {
  os << (img.ascii ? "P2" : "P5") << '\n'
     << img.width << ' ' << img.height << '\n'
     << img.maxval << '\n';
  if (img.ascii) {
    for (int y = 0; y < img.height; ++y) {
      for (int x = 0; x < img.width; ++x) {
        if (x) os << ' ';
        os << static_cast<int>(img.pixels[static_cast<std::size_t>(y) * img.width + x]);
      }
      os << '\n';
    }
  } else {
    os.write(reinterpret_cast<const char*>(img.pixels.data()),
             static_cast<std::streamsize>(img.pixels.size()));
  }
}

double grey_to_volts(int grey, int maxval) {
  return kBlackVolts + (kWhiteVolts - kBlackVolts) * grey / maxval;
}

int volts_to_grey(double v, int maxval) {
  const double g = std::round((v - kBlackVolts) / (kWhiteVolts - kBlackVolts) * maxval);
  return static_cast<int>(std::clamp(g, 0.0, static_cast<double>(maxval)));
}

ImageResult store_image(const GreyImage& in, const memcell::CellConfig& cfg,
                        bool transient, const circuit::StepPolicy& policy) {
  cfg.validate();
  // Every pixel with the same grey level maps to the same voltage, so one
  // evaluation per level covers the whole image.
  std::array<double, 256> readout{};
  std::array<bool, 256> used{};
  for (auto p : in.pixels) used[p] = true;
  for (int g = 0; g <= in.maxval; ++g) {
    if (!used[g]) continue;
    const double v = grey_to_volts(g, in.maxval);
    readout[g] = transient ? memcell::simulate_cell(cfg, v, policy).final_readout()
                           : memcell::behavioral_store(cfg, v, cfg.cycles());
  }

  ImageResult out;
  out.image = in;
  ImageStats& s = out.stats;
  s.pixels = in.pixels.size();
  double sum_pct = 0.0, sum_fs = 0.0, sum_fs_hi = 0.0;
  for (std::size_t i = 0; i < in.pixels.size(); ++i) {
    const int g_in = in.pixels[i];
    const double v_in = grey_to_volts(g_in, in.maxval);
    const double v_out = readout[g_in];
    const int g_out = volts_to_grey(v_out, in.maxval);
    out.image.pixels[i] = static_cast<std::uint8_t>(g_out);

    const double pct = 100.0 * std::abs(v_out - v_in) / v_in;
    const double fs = 100.0 * std::abs(g_out - g_in) / in.maxval;
    sum_pct += pct;
    sum_fs += fs;
    s.max_error_pct = std::max(s.max_error_pct, pct);
    if (v_in >= 0.4 - 1e-12) {
      ++s.pixels_ge_0p4v;
      sum_fs_hi += fs;
    }
    std::size_t bin = s.histogram.size() - 1;
    for (std::size_t b = 1; b < ImageStats::kBinEdges.size(); ++b) {
      if (pct < ImageStats::kBinEdges[b]) {
        bin = b - 1;
        break;
      }
    }
    ++s.histogram[bin];
  }
  if (s.pixels > 0) {
    s.mean_error_pct = sum_pct / s.pixels;
    s.mean_abs_error_fullscale_pct = sum_fs / s.pixels;
  }
  if (s.pixels_ge_0p4v > 0) {
    s.mean_abs_error_fullscale_pct_ge_0p4v = sum_fs_hi / s.pixels_ge_0p4v;
  }
  s.analog_capacitors = s.pixels;
  s.digital_capacitors = s.pixels * 8;
  return out;
}

void write_stats_csv(std::ostream& os, const ImageStats& s) {
  using csv::number;
  csv::write_row(os, std::vector<std::string>{"metric", "value"});
  auto row = [&](const std::string& k, const std::string& v) {
    csv::write_row(os, std::vector<std::string>{k, v});
  };
  row("pixels", std::to_string(s.pixels));
  row("mean_error_pct", number(s.mean_error_pct));
  row("max_error_pct", number(s.max_error_pct));
  row("mean_abs_error_fullscale_pct", number(s.mean_abs_error_fullscale_pct));
  row("pixels_ge_0p4v", std::to_string(s.pixels_ge_0p4v));
  row("mean_abs_error_fullscale_pct_ge_0p4v", number(s.mean_abs_error_fullscale_pct_ge_0p4v));
  for (std::size_t b = 0; b < s.histogram.size(); ++b) {
    const std::string lo = std::to_string(static_cast<int>(ImageStats::kBinEdges[b]));
    const std::string hi = b + 1 < ImageStats::kBinEdges.size()
                               ? std::to_string(static_cast<int>(ImageStats::kBinEdges[b + 1]))
                               : "inf";
    row("hist_pct_" + lo + "_" + hi, std::to_string(s.histogram[b]));
  }
  row("digital_capacitors", std::to_string(s.digital_capacitors));
  row("analog_capacitors", std::to_string(s.analog_capacitors));
}

}  // namespace memsim::cli
