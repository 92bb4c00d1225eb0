#pragma once

#include <string>

namespace test_paths {

inline std::string scenario() { return std::string(TLMARL_SCENARIO_DIR) + "/example1.json"; }
inline std::string fspa() { return std::string(TLMARL_SCENARIO_DIR) + "/example1_fspa.json"; }

}  // namespace test_paths
