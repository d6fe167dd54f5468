// Regenerates the bundled scenario files from the case builders.
#include <cstdio>
#include <fstream>
#include <string>

#include "elmarket/builders.hpp"
#include "elmarket/scenario_io.hpp"
#include "json.hpp"

using namespace elmarket;

int main(int argc, char** argv) {
  const std::string dir = argc > 1 ? argv[1] : default_data_dir();
  try {
    save_scenario(build_analytical_example(), dir + "/analytical_example.json");

    // RTS-24 with seed 0, demands written as base values plus growth rules.
    const Rts24Options opt;
    auto j = nlohmann::ordered_json::parse(scenario_to_string(build_rts24_case(0, opt)));
    j["growth"] = {{"utility_pct_per_step", opt.utility_growth * 100.0},
                   {"demand_pct_per_step", opt.demand_growth * 100.0}};
    for (auto& d : j["demands"]) {
      const double base = d["max_consumption"][0].get<double>();
      auto slopes = d["utility"][0]["slopes"];
      d.erase("max_consumption");
      d.erase("utility");
      d["max_consumption_base"] = base;
      d["utility_base"] = {{"slopes", slopes}};
    }
    std::ofstream out(dir + "/rts24.json");
    out << j.dump(1) << "\n";
    if (!out) throw std::runtime_error("write failed");
  } catch (const std::exception& e) {
    std::fprintf(stderr, "gen_data: %s\n", e.what());
    return 1;
  }
  std::printf("wrote %s/analytical_example.json and %s/rts24.json\n", dir.c_str(), dir.c_str());
  return 0;
}
