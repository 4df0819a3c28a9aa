// Copyright 2026  The lprobe Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//  http://www.apache.org/licenses/LICENSE-2.0
//
// THIS CODE IS PROVIDED *AS IS* BASIS, WITHOUT WARRANTIES OR CONDITIONS OF ANY
// KIND, EITHER EXPRESS OR IMPLIED, INCLUDING WITHOUT LIMITATION ANY IMPLIED
// WARRANTIES OR CONDITIONS OF TITLE, FITNESS FOR A PARTICULAR PURPOSE,
// MERCHANTABLITY OR NON-INFRINGEMENT.
// See the Apache 2 License for the specific language governing permissions and
// limitations under the License.

#ifndef LPROBE_ERROR_HPP_
#define LPROBE_ERROR_HPP_

#include <stdexcept>
#include <string>

namespace lprobe {

// Numeric values are shared with the C API status codes in lprobe.h.
enum class ErrorCode : int {
  kIo = 1,
  kParse = 2,
  kIntegrity = 3,
  kValidation = 4,
  kFormat = 5,
  kDuplicate = 6,
  kLookup = 7,
  kRange = 8,
  kArgument = 9,
  kInsufficientData = 10,
  kDegenerateData = 11,
  kInput = 12,
  kAlignmentMissing = 13,
  kFold = 14,
  kGap = 15,
  kInternal = 16,
};

const char *ErrorCodeName(ErrorCode code);

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string &what)
      : std::runtime_error(what), code_(code) {}
  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

[[noreturn]] inline void Fail(ErrorCode code, const std::string &what) {
  throw Error(code, what);
}

}  // namespace lprobe

#endif  // LPROBE_ERROR_HPP_
