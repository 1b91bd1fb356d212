#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace fedzip {

enum class Errc {
  BadMagic,
  TruncatedFile,
  DuplicateName,
  ShapeMismatch,
  IoError,
  WrongDtype,
  EmptyInput,
  InvalidBound,
  NonFiniteInput,
  CorruptPayload,
  ChecksumMismatch,
  CorruptStream,
  InvalidArgument,
  UnknownCodec,
  NoBreakeven,
  NoFeasibleCandidate,
  NoFeasibleEpsilon,
  StructureMismatch,
  InvalidConfig,
  LengthMismatch,
};

std::string_view errc_name(Errc code) noexcept;

// Every failure raised by the library carries one of the codes above so
// callers (and the CLI) can map it to an exit status without string matching.
class Error : public std::runtime_error {
 public:
  Error(Errc code, const std::string& message)
      : std::runtime_error(message), code_(code) {}

  Errc code() const noexcept { return code_; }

 private:
  Errc code_;
};

[[noreturn]] inline void fail(Errc code, const std::string& message) {
  throw Error(code, message);
}

}  // namespace fedzip
