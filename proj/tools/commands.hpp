#pragma once

#include <string>

#include "config.hpp"

namespace qrcli {

// Each command returns its exit code; configuration problems surface as exceptions.
int cmd_optimize(const RunConfig &config);
int cmd_hessian(const RunConfig &config);
int cmd_calibrate(const RunConfig &config);
int cmd_ensemble(const RunConfig &config);
int cmd_verify(const RunConfig &config);
int cmd_reproduce(const RunConfig &config, const std::string &figure);

/// 0 success, 1 usage or configuration error, 2 convergence or data-quality failure.
int exit_code_for(qr_status status);

} // namespace qrcli
