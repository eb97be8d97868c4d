#pragma once

// JSON run configs and reports behind the C interface.

#include <stdexcept>
#include <string>

#include "json.hpp"

namespace getzler::reports {

using json = nlohmann::json;

// bad config or precondition; exit code 1
struct UsageError : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

// fills defaults, validates types and ranges; throws UsageError
json normalize_config(const json& in);
// canonical text of a normalized config
std::string canonical(const json& cfg);

enum class Status { Ok = 0, Negative = 2 };

struct Outcome {
  json report;
  Status status = Status::Ok;
};

// cfg must be normalized. Throws UsageError, std::domain_error (truncation or
// depth shortfall) or other exceptions for internal failures.
Outcome run(const json& cfg);

int thread_cap();

}  // namespace getzler::reports
