#pragma once

#include <stdexcept>
#include <string>

namespace reorient {

/// Broad failure categories. The CLI maps these onto exit codes.
enum class ErrorCode {
  kDomain,       ///< non-finite or out-of-range input
  kSingularity,  ///< parameterization or formula singularity
  kDegenerate,   ///< ill-posed problem definition
  kConfig,       ///< unparseable or inconsistent configuration
  kStructure,    ///< control-structure detection failed
  kSolver,       ///< numerical solver failure
  kIo,           ///< file system failure
};

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what)
      : std::runtime_error(what), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

}  // namespace reorient
