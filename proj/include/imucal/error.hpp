/*
 * SPDX-License-Identifier: Apache-2.0
 */
#pragma once

#include <stdexcept>
#include <string>

namespace imucal {

/// Error classes surfaced by the library. The CLI maps each class to a
/// distinct exit code, so keep the list stable.
enum class Errc {
  parse_error,
  bad_config,
  insufficient_data,
  underdetermined,
  diverged,
  missing_motion_data,
  inconsistent_parity,
  io_error,
};

const char* errc_name(Errc c);

class Error : public std::runtime_error {
 public:
  Error(Errc code, const std::string& message)
      : std::runtime_error(std::string(errc_name(code)) + ": " + message), code_(code) {}

  Errc code() const { return code_; }

 private:
  Errc code_;
};

[[noreturn]] inline void raise(Errc code, const std::string& message) {
  throw Error(code, message);
}

}  // namespace imucal
