#pragma once

#include <stdexcept>
#include <string>

namespace echorec {

enum class ErrorCode {
    ZeroAbsorption,
    DivisionByZero,
    NonPositiveFrequency,
    SampleRateMismatch,
    UnknownSourceKind,
    TooShort,
    ShapeMismatch,
    MissingModality,
    InvalidDistribution,
    EmptyDataset,
    LabelOutOfRange,
    UnsupportedVersion,
    ParseError,
    EmptyResult,
    Degenerate,
    PreconditionViolated,
    EmptyTrainSet,
    EmptyTestSet,
    EmptyPartition,
    UnknownMaterial,
    MissingIR,
    InvalidConfig,
    IoError,
};

const char* error_code_name(ErrorCode code);

class Error : public std::runtime_error {
  public:
    Error(ErrorCode code, const std::string& message)
        : std::runtime_error(message), code_(code) {}

    ErrorCode code() const noexcept { return code_; }

  private:
    ErrorCode code_;
};

[[noreturn]] inline void raise(ErrorCode code, const std::string& message) {
    throw Error(code, message);
}

}  // namespace echorec
