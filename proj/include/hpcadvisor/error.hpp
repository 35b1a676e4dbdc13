#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace hpcadvisor {

// User errors come from bad input (files, flags, data that does not cover a
// request). Internal errors come from backends or numerical breakdown.
enum class ErrorKind { user, internal };

class Error : public std::runtime_error {
 public:
  explicit Error(const std::string& what, ErrorKind kind = ErrorKind::user)
      : std::runtime_error(what), kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

class ParseError : public Error {
 public:
  ParseError(const std::string& source, std::size_t line, const std::string& detail)
      : Error(source + ":" + std::to_string(line) + ": " + detail), line_(line) {}

  std::size_t line() const noexcept { return line_; }

 private:
  std::size_t line_;
};

class ValidationError : public Error {
 public:
  using Error::Error;
};

class NotFoundError : public Error {
 public:
  using Error::Error;
};

class OutOfRangeError : public Error {
 public:
  OutOfRangeError(double value, double lo, double hi)
      : Error("node count " + std::to_string(value) + " outside curve range [" + std::to_string(lo) +
              ", " + std::to_string(hi) + "]"),
        lo_(lo),
        hi_(hi) {}

  double lo() const noexcept { return lo_; }
  double hi() const noexcept { return hi_; }

 private:
  double lo_;
  double hi_;
};

// Raised when the objective returns NaN/inf. Carries the best finite iterate.
class DivergedError : public Error {
 public:
  DivergedError(std::vector<double> best_x, double best_f)
      : Error("objective became non-finite", ErrorKind::internal),
        best_x_(std::move(best_x)),
        best_f_(best_f) {}

  const std::vector<double>& best_x() const noexcept { return best_x_; }
  double best_f() const noexcept { return best_f_; }

 private:
  std::vector<double> best_x_;
  double best_f_;
};

// The plan could not be completed from the runs that succeeded.
class PlannerError : public Error {
 public:
  explicit PlannerError(const std::string& what) : Error(what, ErrorKind::internal) {}
};

}  // namespace hpcadvisor
