#include <doctest.h>

#include <sstream>

#include "haloflow/energy.hpp"
#include "haloflow/errors.hpp"

using namespace haloflow;

TEST_CASE("energy per step") {
  CHECK(energy_per_step(193.0, 0.06, 8) == doctest::Approx(92.64).epsilon(1e-12));
  CHECK(energy_per_step(0.0, 1.0, 4) == 0.0);
  CHECK_THROWS_AS(energy_per_step(-1.0, 1.0, 1), ValidationError);
}

TEST_CASE("device and overall averages") {
  PowerTrace t;
  const double avg[] = {188, 200, 205, 178};
  for (DeviceId d = 0; d < 4; ++d) {
    t.push_back({d, 0.0, avg[d] - 10});
    t.push_back({d, 1.0, avg[d] + 10});
    t.push_back({d, 2.0, avg[d] + 10});
  }
  const auto per = device_averages(t);
  for (DeviceId d = 0; d < 4; ++d) CHECK(per.at(d) == doctest::Approx(avg[d]).epsilon(1e-12));
  CHECK(overall_average(per) == doctest::Approx(192.75).epsilon(1e-12));
}

TEST_CASE("window averages hold the last sample") {
  const PowerTrace t{{0, 0.0, 100.0}, {0, 1.0, 200.0}, {0, 3.0, 50.0}};
  CHECK(window_average(t, 0, 0.0, 2.0) == doctest::Approx(150.0).epsilon(1e-12));
  CHECK(window_average(t, 0, 0.5, 1.5) == doctest::Approx(150.0).epsilon(1e-12));
  CHECK(window_average(t, 0, 3.0, 5.0) == doctest::Approx(50.0).epsilon(1e-12));
  CHECK(window_energy(t, 0, 0.0, 2.0) == doctest::Approx(300.0).epsilon(1e-12));
  CHECK_THROWS_AS(window_average(t, 1, 0.0, 1.0), ValidationError);
  CHECK_THROWS_AS(window_average(t, 0, 2.0, 1.0), ValidationError);
}

TEST_CASE("trace validation") {
  CHECK_THROWS_AS(validate_trace({{0, 0.0, -1.0}}), ValidationError);
  CHECK_THROWS_AS(validate_trace({{0, 1.0, 1.0}, {0, 0.5, 1.0}}), ValidationError);
  CHECK_NOTHROW(validate_trace({{0, 1.0, 1.0}, {1, 0.5, 1.0}}));
}

TEST_CASE("power model") {
  const PowerModel pm;
  CHECK(predict_power(pm, 0.0) == 50.0);
  CHECK(predict_power(pm, 1.0) == 300.0);
  CHECK(predict_power(pm, 0.5) == 175.0);
  CHECK_THROWS_AS(predict_power(pm, 1.5), ValidationError);
  CHECK_THROWS_AS(predict_power(pm, -0.1), ValidationError);
  const PowerModel f = fit_power_model(0.2, 100.0, 0.6, 200.0);
  CHECK(f.p_idle == doctest::Approx(50.0).epsilon(1e-12));
  CHECK(f.p_max == doctest::Approx(300.0).epsilon(1e-12));
  CHECK_THROWS_AS(fit_power_model(0.5, 1.0, 0.5, 2.0), ValidationError);
}

TEST_CASE("energy series sorted by step time") {
  const std::vector<EnergyRun> runs{{1, 0.02, {1.0}}, {4, 0.006, {0.8, 0.8, 0.8, 0.8}}, {2, 0.011, {0.9, 0.9}}};
  const auto rows = energy_vs_time_series(runs, PowerModel{});
  REQUIRE(rows.size() == 3);
  CHECK(rows[0].devices == 1);
  CHECK(rows[1].devices == 2);
  CHECK(rows[2].devices == 4);
  CHECK(rows[2].mean_watts == doctest::Approx(250.0).epsilon(1e-12));
  CHECK(rows[2].energy_j == doctest::Approx(250.0 * 0.006 * 4).epsilon(1e-12));
  for (const auto& r : rows) CHECK(r.energy_j >= 0.0);
  std::ostringstream os;
  write_energy_csv(os, rows);
  CHECK(os.str().find("devices") != std::string::npos);
}

TEST_CASE("trace csv") {
  std::istringstream in("device,t_s,watts\n0,0,100\n0,1,120\n1,0,90\n");
  const PowerTrace t = read_power_trace(in);
  REQUIRE(t.size() == 3);
  std::ostringstream os;
  write_trace_plot_csv(os, t);
  CHECK(os.str().find("overall") != std::string::npos);
  std::istringstream neg("device,t_s,watts\n0,0,-5\n");
  CHECK_THROWS_AS(read_power_trace(neg), ValidationError);
}
