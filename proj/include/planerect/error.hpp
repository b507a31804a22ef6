#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace planerect {

enum class ErrorKind {
    NoRealRoot,
    NearVanishingLine,
    Collinear,
    NoRealLocus,
    DegenerateSample,
    TrackingFailure,
    EmptySystem,
    RetryExhausted,
    NoFeasibleModel,
    GroundTruthZero,
    InvalidArgument,
    Io,
    Parse,
};

std::string_view to_string(ErrorKind kind);

// Process exit code used by the command-line tool for each category.
int exit_code(ErrorKind kind);

class Error : public std::runtime_error {
  public:
    Error(ErrorKind kind, const std::string &what) : std::runtime_error(what), kind_(kind) {}

    ErrorKind kind() const noexcept { return kind_; }

  private:
    ErrorKind kind_;
};

} // namespace planerect
