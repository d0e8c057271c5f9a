#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <sstream>

#include "memsim/calib.hpp"
#include "memsim/csv.hpp"
#include "test_support.hpp"

using namespace memsim;
using namespace memsim::calib;

namespace {

constexpr double kC = 1e-12;
constexpr double kPeriod = 40e-3;

std::vector<GainRow> synthetic_rows(const LeakModel& m) {
  std::vector<GainRow> rows;
  for (int i = 1; i <= 19; ++i) {
    const double v = 0.1 * (i + 1);
    const double vs = memcell::retention(m, kC, v, kPeriod) / 2.0;
    rows.push_back({v, vs, v / vs, 0.0});
  }
  return rows;
}

memcell::CellConfig calibrated_config() {
  memcell::CellConfig cfg;
  cfg.leak = fixtures::calibrated_leak();
  return cfg;
}

std::vector<double> targets() {
  std::vector<double> v;
  for (const auto& r : fixtures::bundled_gain_rows()) v.push_back(r.v_target);
  return v;
}

}  // namespace

TEST(Fit, RecoversSyntheticModel) {
  for (const LeakModel truth : {LeakModel{1.8e-11, 1.2e-12}, LeakModel{3e-12, 4e-11},
                                LeakModel{2e-10, 1e-13}}) {
    const FitReport r = fit_retention(synthetic_rows(truth), kC);
    EXPECT_NEAR(r.leak.g0, truth.g0, 1e-6 * truth.g0);
    EXPECT_NEAR(r.leak.g1, truth.g1, 1e-6 * truth.g1);
    EXPECT_LE(r.max_abs_residual, 1e-9);
  }
}

TEST(Fit, RecoversSyntheticModelUnweighted) {
  FitOptions opts;
  opts.weight_exponent = 0.0;
  const LeakModel truth{1.8e-11, 1.2e-12};
  const FitReport r = fit_retention(synthetic_rows(truth), kC, kPeriod, opts);
  EXPECT_NEAR(r.leak.g0, truth.g0, 1e-6 * truth.g0);
  EXPECT_NEAR(r.leak.g1, truth.g1, 1e-6 * truth.g1);
}

TEST(Fit, BundledDecayTableWithinTenMillivolts) {
  const auto rows = fixtures::bundled_gain_rows();
  ASSERT_EQ(rows.size(), 19u);
  const FitReport r = fit_retention(rows, kC);
  EXPECT_LE(r.max_abs_residual, 10e-3);
  ASSERT_EQ(r.residuals.size(), rows.size());
  for (std::size_t i = 0; i < rows.size(); ++i) {
    const double predicted = memcell::retention(r.leak, kC, rows[i].v_target, kPeriod) / 2;
    EXPECT_NEAR(r.residuals[i], predicted - rows[i].v_secondary, 1e-15);
  }
  EXPECT_EQ(r.capacitance, kC);
  EXPECT_EQ(r.dt, kPeriod);
}

TEST(Fit, RejectsUnderdeterminedInput) {
  const auto rows = fixtures::bundled_gain_rows();
  EXPECT_THROW(fit_retention(std::span(rows).first(1), kC), FitError);
  std::vector<GainRow> same(3, rows[4]);
  EXPECT_THROW(fit_retention(same, kC), FitError);
  std::vector<GainRow> bad(rows.begin(), rows.begin() + 3);
  bad[1].v_secondary = -0.1;
  EXPECT_THROW(fit_retention(bad, kC), FitError);
}

TEST(GainTable, ZeroLeakHalvesOnly) {
  memcell::CellConfig cfg;
  for (const GainRow& r : gain_table({}, cfg, targets())) {
    EXPECT_EQ(r.v_secondary, r.v_target / 2);
    EXPECT_EQ(r.gain, 2.0);
    EXPECT_EQ(r.r1_required, 500.0);
  }
}

TEST(GainTable, CalibratedRowsNearReferenceValues) {
  const auto rows = gain_table(fixtures::calibrated_leak(), calibrated_config(), targets());
  const auto& mid = rows[8];
  ASSERT_EQ(mid.v_target, 1.0);
  EXPECT_NEAR(mid.v_secondary, 0.228, 0.010);
  EXPECT_NEAR(mid.gain, 4.386, 0.20);
  EXPECT_NEAR(mid.r1_required, (mid.gain - 1) * 500.0, 1e-9);
  EXPECT_NEAR(mid.r1_required, 1693.0, 100.0);
  const auto& top = rows.back();
  ASSERT_EQ(top.v_target, 2.0);
  EXPECT_NEAR(top.v_secondary, 0.446, 0.010);
  EXPECT_NEAR(top.gain, 4.484, 0.20);
  EXPECT_NEAR(top.r1_required, 1742.0, 100.0);
}

TEST(GainTable, AllRowsWithinReferenceBands) {
  const auto ref = fixtures::bundled_gain_rows();
  const auto rows = gain_table(fixtures::calibrated_leak(), calibrated_config(), targets());
  for (std::size_t i = 0; i < rows.size(); ++i) {
    EXPECT_NEAR(rows[i].v_secondary, ref[i].v_secondary, 10e-3) << ref[i].v_target;
    EXPECT_NEAR(rows[i].gain, ref[i].gain, 0.02 * ref[i].gain) << ref[i].v_target;
  }
}

TEST(GainTable, GainNondecreasingInTarget) {
  std::vector<double> v;
  for (int i = 0; i <= 180; ++i) v.push_back(0.2 + 0.01 * i);
  const auto rows = gain_table(fixtures::calibrated_leak(), calibrated_config(), v);
  for (std::size_t i = 1; i < rows.size(); ++i) EXPECT_GE(rows[i].gain, rows[i - 1].gain);
}

TEST(GainTable, RejectsNonPositiveTargets) {
  const std::vector<double> v{0.5, 0.0};
  EXPECT_THROW(gain_table({}, calibrated_config(), v), std::invalid_argument);
}

TEST(Fit, RetentionFractionInPlausibleBracket) {
  const LeakModel& m = fixtures::calibrated_leak();
  for (int i = 0; i <= 180; ++i) {
    const double v = 0.2 + 0.01 * i;
    const double r = memcell::retention(m, kC, v, kPeriod) / v;
    EXPECT_GT(r, 0.40) << v;
    EXPECT_LT(r, 0.55) << v;
  }
}

TEST(ErrorTable, ReferenceShape) {
  const auto ref = fixtures::bundled_error_rows();
  std::vector<double> v;
  for (const auto& r : ref) v.push_back(r.v_in);
  const auto rows = error_table(fixtures::calibrated_leak(), calibrated_config(), v);
  ASSERT_EQ(rows.size(), 19u);
  for (std::size_t i = 0; i < rows.size(); ++i) {
    EXPECT_NEAR(rows[i].error_pct, ref[i].error_pct, 6.0) << rows[i].v_in;
    EXPECT_NEAR(rows[i].error_pct, 100.0 * std::abs(rows[i].v_later - rows[i].v_in) / rows[i].v_in,
                1e-12);
  }
  const auto worst = std::max_element(rows.begin(), rows.end(), [](auto& a, auto& b) {
    return a.error_pct < b.error_pct;
  });
  EXPECT_EQ(worst->v_in, 0.2);
  EXPECT_GE(rows.front().error_pct, 12.0);
  EXPECT_LE(rows.front().error_pct, 21.0);
  EXPECT_GE(rows[17].error_pct, 1.0);
  EXPECT_LE(rows[17].error_pct, 7.0);
}

TEST(ErrorTable, MaximalAtSmallestInputOnFineGrid) {
  std::vector<double> v;
  for (int i = 0; i <= 180; ++i) v.push_back(0.2 + 0.01 * i);
  const auto rows = error_table(fixtures::calibrated_leak(), calibrated_config(), v);
  for (const auto& r : rows) EXPECT_LE(r.error_pct, rows.front().error_pct);
}

TEST(ErrorTable, FixedPointInputHasNoError) {
  const memcell::CellConfig cfg = calibrated_config();
  const double want = 2.0 / cfg.gain();
  double lo = 0.2, hi = 2.0;  // retention fraction falls with voltage
  for (int i = 0; i < 200; ++i) {
    const double mid = 0.5 * (lo + hi);
    (memcell::retention(cfg.leak, kC, mid, kPeriod) / mid > want ? lo : hi) = mid;
  }
  const std::vector<double> v{0.5 * (lo + hi)};
  EXPECT_NEAR(error_table(cfg.leak, cfg, v).front().error_pct, 0.0, 1e-9);
}

TEST(ErrorTable, PerRowCompensationIsNearlyExact) {
  const auto gains = gain_table(fixtures::calibrated_leak(), calibrated_config(), targets());
  for (const GainRow& g : gains) {
    memcell::CellConfig cfg = calibrated_config();
    cfg.r1 = g.r1_required;
    const std::vector<double> v{g.v_target};
    EXPECT_LE(error_table(cfg.leak, cfg, v).front().error_pct, 0.5) << g.v_target;
  }
}

TEST(ErrorTable, RejectsOutOfRangeInputs) {
  for (double bad : {0.0, -0.3, 2.1}) {
    const std::vector<double> v{bad};
    EXPECT_THROW(error_table({}, calibrated_config(), v), std::invalid_argument);
  }
}

TEST(CalibCsv, GainRoundTripConvertsKiloOhms) {
  const std::vector<GainRow> rows{{0.2, 0.048, 4.167, 1583.5}, {1.0, 0.228, 4.386, 1693.0}};
  std::ostringstream os;
  write_gain_csv(os, rows);
  EXPECT_EQ(os.str().substr(0, os.str().find('\n')), "v_target,v_secondary,gain,r1_kohm");
  std::istringstream is(os.str());
  const auto back = read_gain_csv(is);
  ASSERT_EQ(back.size(), 2u);
  EXPECT_EQ(back[1].v_secondary, 0.228);
  EXPECT_NEAR(back[0].r1_required, 1583.5, 1e-9);
}

TEST(CalibCsv, ErrorRoundTrip) {
  const std::vector<ErrorRow> rows{{0.2, 0.23, 15.0}, {2.0, 1.94, 3.0}};
  std::ostringstream os;
  write_error_csv(os, rows);
  std::istringstream is(os.str());
  const auto back = read_error_csv(is);
  ASSERT_EQ(back.size(), 2u);
  EXPECT_EQ(back[1].v_later, 1.94);
  EXPECT_EQ(back[0].error_pct, 15.0);
}

TEST(CalibCsv, MalformedInputIsSchemaError) {
  std::istringstream wrong_header("a,b,c,d\n1,2,3,4\n");
  EXPECT_THROW(read_gain_csv(wrong_header), csv::SchemaError);
  std::istringstream short_row("v_target,v_secondary,gain,r1_kohm\n1,2,3\n");
  EXPECT_THROW(read_gain_csv(short_row), csv::SchemaError);
  std::istringstream text("v_in,v_later,error_pct\n1,abc,3\n");
  EXPECT_THROW(read_error_csv(text), csv::SchemaError);
}

TEST(Csv, QuotedFieldsRoundTrip) {
  std::ostringstream os;
  csv::write_row(os, std::vector<std::string>{"plain", "with,comma", "with \"quote\""});
  std::istringstream is(os.str());
  const csv::Table t = csv::read(is);
  EXPECT_EQ(t.header, (std::vector<std::string>{"plain", "with,comma", "with \"quote\""}));
  EXPECT_EQ(t.column("with,comma"), 1u);
  EXPECT_THROW(t.column("missing"), csv::SchemaError);
}

TEST(Csv, NumbersRoundTripExactly) {
  for (double v : {0.1, 1.0 / 3.0, 6.02e23, -2.5e-300}) {
    EXPECT_EQ(std::stod(csv::number(v)), v);
  }
}
