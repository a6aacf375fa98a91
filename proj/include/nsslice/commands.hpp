#pragma once

#include <string>
#include <vector>

#include "nsslice/config.hpp"

namespace nsslice {

// Each command writes its outputs below cfg.str("out") and returns the process
// exit status: 0 when every requested check passes, 1 when a check fails.
// Errors propagate as nsslice::Error.
int cmd_project(const Config& cfg);
int cmd_solve(const Config& cfg);
int cmd_uniqueness(const Config& cfg);
int cmd_quadform(const Config& cfg);
int cmd_stratify(const Config& cfg);
int cmd_mms(const Config& cfg);

const std::vector<std::string>& command_names();
int run_command(const std::string& name, const Config& cfg);

}  // namespace nsslice
