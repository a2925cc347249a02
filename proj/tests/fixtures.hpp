#pragma once

// Shared test fixtures: tiny hand-built cases plus loaders for the shipped
// case files.

#include <fstream>
#include <sstream>
#include <string>

#include "cigrid/grid.hpp"
#include "cigrid/matpower.hpp"
#include "cigrid/scenario.hpp"

namespace fixtures {

inline std::string read_file(const std::string& path) {
  std::ifstream in(path);
  REQUIRE(in.good());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

inline std::string data_path(const std::string& name) {
  return std::string(CIGRID_DATA_DIR) + "/" + name;
}

// 1 generator at bus 1, 100 MW load at bus 2, one line.
inline const char* kTwoBusCase = R"(
mpc.baseMVA = 100;
mpc.bus = [
  1 3 0   0 0 0 1 1 0 100 1 1.1 0.9;
  2 1 100 0 0 0 1 1 0 100 1 1.1 0.9;
];
mpc.gen = [ 1 100 0 0 0 1 100 1 500 0; ];
mpc.branch = [ 1 2 0 0.1 0 400 0 0 0 0 1; ];
mpc.gencost = [ 2 0 0 3 0.02 1.0 0; ];
)";

// Symmetric triangle, equal reactances, generator at bus 1 (reference) and
// bus 2, load at bus 3.
inline const char* kTriangleCase = R"(
mpc.baseMVA = 100;
mpc.bus = [
  1 3 0   0 0 0 1 1 0 100 1 1.1 0.9;
  2 2 0   0 0 0 1 1 0 100 1 1.1 0.9;
  3 1 100 0 0 0 1 1 0 100 1 1.1 0.9;
];
mpc.gen = [
  1 0 0 0 0 1 100 1 300 0;
  2 0 0 0 0 1 100 1 300 0;
];
mpc.branch = [
  1 2 0 0.1 0 400 0 0 0 0 1;
  2 3 0 0.1 0 400 0 0 0 0 1;
  3 1 0 0.1 0 400 0 0 0 0 1;
];
mpc.gencost = [
  2 0 0 3 0.02 1.0 0;
  2 0 0 3 0.03 2.0 0;
];
)";

// Two disconnected pairs.
inline const char* kIslandCase = R"(
mpc.baseMVA = 100;
mpc.bus = [
  1 3 0  0 0 0 1 1 0 100 1 1.1 0.9;
  2 1 50 0 0 0 1 1 0 100 1 1.1 0.9;
  3 1 0  0 0 0 1 1 0 100 1 1.1 0.9;
  4 1 50 0 0 0 1 1 0 100 1 1.1 0.9;
];
mpc.gen = [
  1 50 0 0 0 1 100 1 200 0;
  3 50 0 0 0 1 100 1 200 0;
];
mpc.branch = [
  1 2 0 0.1 0 400 0 0 0 0 1;
  3 4 0 0.1 0 400 0 0 0 0 1;
];
mpc.gencost = [
  2 0 0 3 0.02 1.0 0;
  2 0 0 3 0.02 1.0 0;
];
)";

// Four-bus ring, congested line (4,1). With a_bar = 0.3 the goal
// ((4,1), 26%) has the unique minimal support {s4}; protecting s4 leaves
// {s2,s3} as the new minimum.
inline const char* kRingCase = R"(
mpc.baseMVA = 100;
mpc.bus = [
  1 3 0   0 0 0 1 1 0 100 1 1.1 0.9;
  2 2 0   0 0 0 1 1 0 100 1 1.1 0.9;
  3 1 80  0 0 0 1 1 0 100 1 1.1 0.9;
  4 1 60  0 0 0 1 1 0 100 1 1.1 0.9;
];
mpc.gen = [
  1 0 0 0 0 1 100 1 300 0;
  2 0 0 0 0 1 100 1 300 0;
];
mpc.branch = [
  1 2 0 0.1 0 400 0 0 0 0 1;
  2 3 0 0.1 0 400 0 0 0 0 1;
  3 4 0 0.1 0 400 0 0 0 0 1;
  4 1 0 0.1 0  60 0 0 0 0 1;
];
mpc.gencost = [
  2 0 0 3 0.02 1.0 0;
  2 0 0 3 0.03 2.0 0;
];
)";

// Ring variant with uneven reactances and demands. With a_bar = 0.3 the goal
// ((2,3), 25%) has minimal supports {s2,s3} and {s2,s4}, all through s2;
// protecting s2 pushes the minimum to {s1,s3,s4}.
inline const char* kRingHubCase = R"(
mpc.baseMVA = 100;
mpc.bus = [
  1 3 0   0 0 0 1 1 0 100 1 1.1 0.9;
  2 2 0   0 0 0 1 1 0 100 1 1.1 0.9;
  3 1 100 0 0 0 1 1 0 100 1 1.1 0.9;
  4 1 40  0 0 0 1 1 0 100 1 1.1 0.9;
];
mpc.gen = [
  1 0 0 0 0 1 100 1 300 0;
  2 0 0 0 0 1 100 1 300 0;
];
mpc.branch = [
  1 2 0 0.1  0 400 0 0 0 0 1;
  2 3 0 0.08 0 400 0 0 0 0 1;
  3 4 0 0.07 0 400 0 0 0 0 1;
  4 1 0 0.1  0  50 0 0 0 0 1;
];
mpc.gencost = [
  2 0 0 3 0.02 1.0 0;
  2 0 0 3 0.03 2.0 0;
];
)";

inline const char* kRingMap = R"({ "substations": [
  { "id": "s1", "buses": [1] },
  { "id": "s2", "buses": [2] },
  { "id": "s3", "buses": [3] },
  { "id": "s4", "buses": [4] }
]})";

inline const char* kRingConfig = R"({ "a_bar": 0.3 })";

inline const char* kTwoBusMap = R"({ "substations": [
  { "id": "s1", "buses": [1] },
  { "id": "s2", "buses": [2] }
]})";

inline const char* kTriangleMap = R"({ "substations": [
  { "id": "s1", "buses": [1] },
  { "id": "s2", "buses": [2] },
  { "id": "s3", "buses": [3] }
]})";

inline cigrid::ValidatedScenario load_scenario(const std::string& case_text,
                                               const std::string& map_text,
                                               const std::string& config_text = "{}") {
  return cigrid::validate_scenario(cigrid::parse_matpower_case(case_text),
                                   cigrid::parse_substation_map(map_text),
                                   cigrid::parse_scenario_config(config_text));
}

inline cigrid::ValidatedScenario case9_scenario() {
  return cigrid::validate_scenario(
      cigrid::parse_matpower_case(read_file(data_path("case9.m"))),
      cigrid::parse_substation_map(read_file(data_path("case9_substations.json"))),
      cigrid::parse_scenario_config(read_file(data_path("case9_scenario.json"))));
}

inline cigrid::ValidatedScenario case39_scenario() {
  return cigrid::validate_scenario(
      cigrid::parse_matpower_case(read_file(data_path("case39.m"))),
      cigrid::parse_substation_map(read_file(data_path("case39_substations.json"))),
      cigrid::parse_scenario_config(read_file(data_path("case39_scenario.json"))));
}

}  // namespace fixtures
