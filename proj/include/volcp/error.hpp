#pragma once

#include <stdexcept>
#include <string>

namespace volcp {

/// Broad failure classes. The CLI maps these onto process exit codes.
enum class ErrorKind {
  invalid_input,   ///< non-finite or malformed data handed to a routine
  domain,          ///< parameter outside its admissible set
  degenerate_data, ///< data carries no spread (constant series, zero IQR and sd)
  precondition,    ///< caller broke a size or ordering requirement
  config,          ///< inconsistent or unparseable configuration
  ingestion,       ///< input file could not be read into a price series
  numerical        ///< a numerical routine failed beyond recovery
};

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what) : std::runtime_error(what), kind_(kind) {}
  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

[[noreturn]] inline void fail(ErrorKind kind, const std::string& what) { throw Error(kind, what); }

inline void require(bool ok, ErrorKind kind, const std::string& what) {
  if (!ok) fail(kind, what);
}

}  // namespace volcp
