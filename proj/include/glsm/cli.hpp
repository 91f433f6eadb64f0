#pragma once

#include <string>
#include <utility>
#include <vector>

#include "glsm/config.hpp"
#include "glsm/correlation.hpp"
#include "glsm/mixing.hpp"

namespace glsm::cli {

enum ExitCode : int { kOk = 0, kUsage = 2, kData = 3, kNumerical = 4 };

// (m, n) of study configurations A-D.
std::pair<std::size_t, std::size_t> study_size(const std::string& label);

// Model from "model" plus "model.<param>" keys.
MixingSpec model_from_config(const Config& cfg);
MaternParams corr_from_config(const Config& cfg);

// Entry point; args excludes the program name.
int run(const std::vector<std::string>& args);
int run(int argc, char** argv);

}  // namespace glsm::cli
