#include "swei/error.hpp"

namespace swei {

std::string_view to_string(Errc code) noexcept {
  switch (code) {
    case Errc::BadMagic: return "BadMagic";
    case Errc::TruncatedFile: return "TruncatedFile";
    case Errc::UnsupportedVersion: return "UnsupportedVersion";
    case Errc::NonFiniteData: return "NonFiniteData";
    case Errc::IoError: return "IoError";
    case Errc::DuplicateName: return "DuplicateName";
    case Errc::SizeMismatch: return "SizeMismatch";
    case Errc::MalformedCsv: return "MalformedCsv";
    case Errc::InvalidArgument: return "InvalidArgument";
    case Errc::DegenerateWave: return "DegenerateWave";
    case Errc::TooShort: return "TooShort";
    case Errc::BadKind: return "BadKind";
    case Errc::OutOfRange: return "OutOfRange";
    case Errc::TooFewTracks: return "TooFewTracks";
    case Errc::NoConsensus: return "NoConsensus";
    case Errc::Degenerate: return "Degenerate";
    case Errc::LabelUnavailable: return "LabelUnavailable";
    case Errc::BadConfig: return "BadConfig";
    case Errc::BadShape: return "BadShape";
    case Errc::BadLabel: return "BadLabel";
    case Errc::BadStep: return "BadStep";
    case Errc::NanLoss: return "NanLoss";
    case Errc::EmptyInput: return "EmptyInput";
    case Errc::BadSample: return "BadSample";
    case Errc::TooFewSamples: return "TooFewSamples";
    case Errc::EmptyGroup: return "EmptyGroup";
    case Errc::EmptyEnsemble: return "EmptyEnsemble";
    case Errc::TooFew: return "TooFew";
  }
  return "Unknown";
}

int exit_code_for(Errc code) noexcept {
  switch (code) {
    case Errc::InvalidArgument:
    case Errc::BadConfig:
    case Errc::BadStep:
      return 2;
    case Errc::NanLoss:
      return 4;
    default:
      return 3;
  }
}

}  // namespace swei
