#pragma once

#include <stdexcept>
#include <string>
#include <vector>

namespace fuseval {

// Error taxonomy shared by every module. The CLI maps kinds onto exit
// codes: usage/argument -> 1, anything wrong with input data -> 2,
// computation failures -> 3.
enum class ErrorKind {
  Usage,
  Schema,
  Format,
  Data,
  Argument,
  Alignment,
  Computation,
  UndefinedMetric,
  Training,
  Io,
};

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& message)
      : std::runtime_error(message), kind_(kind) {}

  ErrorKind kind() const { return kind_; }

  int exit_code() const {
    switch (kind_) {
      case ErrorKind::Usage:
      case ErrorKind::Argument:
        return 1;
      case ErrorKind::Schema:
      case ErrorKind::Format:
      case ErrorKind::Data:
      case ErrorKind::Alignment:
      case ErrorKind::Io:
        return 2;
      case ErrorKind::Computation:
      case ErrorKind::UndefinedMetric:
      case ErrorKind::Training:
        return 3;
    }
    return 3;
  }

 private:
  ErrorKind kind_;
};

[[noreturn]] inline void raise(ErrorKind kind, const std::string& message) {
  throw Error(kind, message);
}

// Non-fatal diagnostics. Library code appends, callers decide what to do
// (the CLI prints them to stderr).
struct Warnings {
  std::vector<std::string> messages;
  void add(std::string msg) { messages.push_back(std::move(msg)); }
  bool empty() const { return messages.empty(); }
};

inline void warn(Warnings* sink, const std::string& msg) {
  if (sink != nullptr) sink->add(msg);
}

}  // namespace fuseval
