#include "planerect/error.hpp"

namespace planerect {

std::string_view to_string(ErrorKind kind) {
    switch (kind) {
    case ErrorKind::NoRealRoot:
        return "NoRealRoot";
    case ErrorKind::NearVanishingLine:
        return "NearVanishingLine";
    case ErrorKind::Collinear:
        return "Collinear";
    case ErrorKind::NoRealLocus:
        return "NoRealLocus";
    case ErrorKind::DegenerateSample:
        return "DegenerateSample";
    case ErrorKind::TrackingFailure:
        return "TrackingFailure";
    case ErrorKind::EmptySystem:
        return "EmptySystem";
    case ErrorKind::RetryExhausted:
        return "RetryExhausted";
    case ErrorKind::NoFeasibleModel:
        return "NoFeasibleModel";
    case ErrorKind::GroundTruthZero:
        return "GroundTruthZero";
    case ErrorKind::InvalidArgument:
        return "InvalidArgument";
    case ErrorKind::Io:
        return "Io";
    case ErrorKind::Parse:
        return "Parse";
    }
    return "Unknown";
}

int exit_code(ErrorKind kind) {
    switch (kind) {
    case ErrorKind::InvalidArgument:
        return 2;
    case ErrorKind::Io:
        return 3;
    case ErrorKind::Parse:
        return 4;
    case ErrorKind::NoFeasibleModel:
        return 5;
    case ErrorKind::DegenerateSample:
        return 6;
    case ErrorKind::TrackingFailure:
    case ErrorKind::EmptySystem:
        return 7;
    case ErrorKind::RetryExhausted:
        return 8;
    default:
        return 10;
    }
}

} // namespace planerect
