#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "spdc/config.hpp"

namespace spdc::cli {

struct Context {
  config::RunConfig cfg;
  std::uint64_t seed = 0;
  std::filesystem::path out;
  std::vector<double> power_sweep;  // simulate: run a sweep instead when non-empty
  bool quiet = false;
};

int cmd_simulate(Context& ctx);
int cmd_sweep(Context& ctx);
int cmd_tomo(Context& ctx);
int cmd_fit_baths(Context& ctx);
int cmd_budget(Context& ctx);
int cmd_calibrate_gain(Context& ctx);

}  // namespace spdc::cli
