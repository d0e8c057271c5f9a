#pragma once

#include <filesystem>
#include <fstream>
#include <random>
#include <string>

#include "memsim/calib.hpp"

namespace memsim::fixtures {

inline std::filesystem::path data_path(const std::string& name) {
  return std::filesystem::path(MEMSIM_TEST_DATA_DIR) / name;
}

inline std::vector<calib::GainRow> bundled_gain_rows() {
  std::ifstream in(data_path("gain_reference.csv"));
  return calib::read_gain_csv(in);
}

inline std::vector<calib::ErrorRow> bundled_error_rows() {
  std::ifstream in(data_path("error_reference.csv"));
  return calib::read_error_csv(in);
}

/// Leakage model fitted to the bundled decay table with default options.
inline const LeakModel& calibrated_leak() {
  static const LeakModel leak = calib::fit_retention(bundled_gain_rows(), 1e-12).leak;
  return leak;
}

/// Fresh empty directory under the system temp dir, removed on destruction.
class TempDir {
 public:
  TempDir() {
    std::random_device rd;
    path_ = std::filesystem::temp_directory_path() /
            ("memsim_test_" + std::to_string(rd()) + std::to_string(rd()));
    std::filesystem::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;

  const std::filesystem::path& path() const { return path_; }
  std::string operator/(const std::string& name) const { return (path_ / name).string(); }

 private:
  std::filesystem::path path_;
};

inline std::string slurp(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

}  // namespace memsim::fixtures
