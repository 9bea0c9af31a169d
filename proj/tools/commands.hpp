#pragma once

#include <stdexcept>

#include "runconfig.hpp"

namespace tseg::cli {

/// Bad invocation (missing flag, incompatible flag combination); exits with code 2.
struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

int cmd_gen(const RunConfig& cfg);
int cmd_train(const RunConfig& cfg);
int cmd_eval(const RunConfig& cfg);
int cmd_infer(const RunConfig& cfg);
int cmd_gates(const RunConfig& cfg);

}  // namespace tseg::cli
