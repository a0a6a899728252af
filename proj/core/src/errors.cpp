#include "echorec/errors.hpp"

namespace echorec {

const char* error_code_name(ErrorCode code) {
    switch (code) {
        case ErrorCode::ZeroAbsorption: return "ZeroAbsorption";
        case ErrorCode::DivisionByZero: return "DivisionByZero";
        case ErrorCode::NonPositiveFrequency: return "NonPositiveFrequency";
        case ErrorCode::SampleRateMismatch: return "SampleRateMismatch";
        case ErrorCode::UnknownSourceKind: return "UnknownSourceKind";
        case ErrorCode::TooShort: return "TooShort";
        case ErrorCode::ShapeMismatch: return "ShapeMismatch";
        case ErrorCode::MissingModality: return "MissingModality";
        case ErrorCode::InvalidDistribution: return "InvalidDistribution";
        case ErrorCode::EmptyDataset: return "EmptyDataset";
        case ErrorCode::LabelOutOfRange: return "LabelOutOfRange";
        case ErrorCode::UnsupportedVersion: return "UnsupportedVersion";
        case ErrorCode::ParseError: return "ParseError";
        case ErrorCode::EmptyResult: return "EmptyResult";
        case ErrorCode::Degenerate: return "Degenerate";
        case ErrorCode::PreconditionViolated: return "PreconditionViolated";
        case ErrorCode::EmptyTrainSet: return "EmptyTrainSet";
        case ErrorCode::EmptyTestSet: return "EmptyTestSet";
        case ErrorCode::EmptyPartition: return "EmptyPartition";
        case ErrorCode::UnknownMaterial: return "UnknownMaterial";
        case ErrorCode::MissingIR: return "MissingIR";
        case ErrorCode::InvalidConfig: return "InvalidConfig";
        case ErrorCode::IoError: return "IoError";
    }
    return "Unknown";
}

}  // namespace echorec
