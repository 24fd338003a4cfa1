#pragma once

#include <stdexcept>
#include <string>

namespace refsource {

// Process exit codes used by the CLI.
enum class ExitCode : int {
  ok = 0,
  internal = 1,
  validation = 2,
  missing_artifact = 3,
  provider = 4,
};

class Error : public std::runtime_error {
 public:
  Error(ExitCode code, const std::string& what) : std::runtime_error(what), code_(code) {}
  ExitCode code() const { return code_; }

 private:
  ExitCode code_;
};

struct ValidationError : Error {
  explicit ValidationError(const std::string& what) : Error(ExitCode::validation, what) {}
};

struct MissingArtifactError : Error {
  explicit MissingArtifactError(const std::string& what) : Error(ExitCode::missing_artifact, what) {}
};

struct ProviderError : Error {
  explicit ProviderError(const std::string& what) : Error(ExitCode::provider, what) {}
};

}  // namespace refsource
