#pragma once

#include <stdexcept>
#include <string>

namespace veridict {

enum class Label { truth, deception };

inline const char* to_string(Label l) { return l == Label::truth ? "truth" : "deception"; }

// UsageError maps to process exit code 1, ValidationError to exit code 2.
class Error : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

class UsageError : public Error {
public:
  using Error::Error;
};

class ValidationError : public Error {
public:
  using Error::Error;
};

inline Label parse_label(const std::string& s) {
  if (s == "truth") return Label::truth;
  if (s == "deception") return Label::deception;
  throw ValidationError("unknown label '" + s + "' (expected 'truth' or 'deception')");
}

}  // namespace veridict
