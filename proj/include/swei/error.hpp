#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace swei {

/// Every failure raised by the toolkit carries one of these codes.
enum class Errc {
  // serialization
  BadMagic,
  TruncatedFile,
  UnsupportedVersion,
  NonFiniteData,
  IoError,
  DuplicateName,
  SizeMismatch,
  MalformedCsv,
  // domain validation
  InvalidArgument,
  DegenerateWave,
  TooShort,
  BadKind,
  // estimators
  OutOfRange,
  TooFewTracks,
  NoConsensus,
  Degenerate,
  LabelUnavailable,
  // network
  BadConfig,
  BadShape,
  BadLabel,
  BadStep,
  NanLoss,
  // uncertainty / calibration
  EmptyInput,
  BadSample,
  TooFewSamples,
  EmptyGroup,
  EmptyEnsemble,
  TooFew,
};

std::string_view to_string(Errc code) noexcept;

/// Process exit-code class of an error: 2 validation, 3 data, 4 numeric.
int exit_code_for(Errc code) noexcept;

class Error : public std::runtime_error {
 public:
  Error(Errc code, const std::string& what)
      : std::runtime_error(std::string(to_string(code)) + ": " + what), code_(code) {}

  Errc code() const noexcept { return code_; }

 private:
  Errc code_;
};

}  // namespace swei
