#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>

namespace buypred {

// Base for every error the library raises. kind() is a stable machine token;
// the CLI prints it on its one-line failure output.
class Error : public std::runtime_error {
 public:
  Error(std::string kind, const std::string& message)
      : std::runtime_error(message), kind_(std::move(kind)) {}
  const std::string& kind() const { return kind_; }

 private:
  std::string kind_;
};

class IoError : public Error {
 public:
  explicit IoError(const std::string& message) : Error("io_failure", message) {}
};

class MalformedRowError : public Error {
 public:
  MalformedRowError(std::uint64_t line_number, const std::string& reason)
      : Error("malformed_row",
              "line " + std::to_string(line_number) + ": " + reason),
        line_number_(line_number) {}
  std::uint64_t line_number() const { return line_number_; }

 protected:
  MalformedRowError(std::string kind, std::uint64_t line_number,
                    const std::string& reason)
      : Error(std::move(kind),
              "line " + std::to_string(line_number) + ": " + reason),
        line_number_(line_number) {}

 private:
  std::uint64_t line_number_;
};

class NegativeQuantityError : public MalformedRowError {
 public:
  explicit NegativeQuantityError(std::uint64_t line_number)
      : MalformedRowError("negative_quantity", line_number, "quantity < 1") {}
};

class UnsortedInputError : public Error {
 public:
  explicit UnsortedInputError(const std::string& message)
      : Error("unsorted_input", message) {}
};

class NegativeDurationError : public Error {
 public:
  explicit NegativeDurationError(const std::string& message)
      : Error("negative_duration", message) {}
};

class MissingStatsError : public Error {
 public:
  explicit MissingStatsError(const std::string& message)
      : Error("missing_stats", message) {}
};

class IndexOutOfRangeError : public Error {
 public:
  explicit IndexOutOfRangeError(const std::string& message)
      : Error("index_out_of_range", message) {}
};

class UnknownMaskError : public Error {
 public:
  explicit UnknownMaskError(const std::string& name)
      : Error("unknown_mask", "no built-in feature mask named '" + name + "'") {}
};

class EmptyDatasetError : public Error {
 public:
  EmptyDatasetError() : Error("empty_dataset", "dataset has no rows") {}
};

class MissingClassError : public Error {
 public:
  explicit MissingClassError(const std::string& message)
      : Error("missing_class", message) {}
};

class DegenerateWeightsError : public Error {
 public:
  explicit DegenerateWeightsError(const std::string& message)
      : Error("degenerate_weights", message) {}
};

class ArityMismatchError : public Error {
 public:
  explicit ArityMismatchError(const std::string& message)
      : Error("arity_mismatch", message) {}
};

class EmptyEnsembleError : public Error {
 public:
  EmptyEnsembleError()
      : Error("empty_ensemble", "ensemble has no accepted rounds") {}
};

class InsufficientDataError : public Error {
 public:
  explicit InsufficientDataError(const std::string& message)
      : Error("insufficient_data", message) {}
};

class MalformedSolutionError : public Error {
 public:
  MalformedSolutionError(std::uint64_t line_number, const std::string& reason)
      : Error("malformed_solution",
              "line " + std::to_string(line_number) + ": " + reason) {}
};

class DuplicateSessionError : public Error {
 public:
  explicit DuplicateSessionError(std::int64_t session_id)
      : Error("duplicate_session",
              "session " + std::to_string(session_id) + " appears twice") {}
};

class EmptyItemSetError : public Error {
 public:
  explicit EmptyItemSetError(std::int64_t session_id)
      : Error("empty_item_set", "session " + std::to_string(session_id) +
                                    " has an empty predicted item set") {}
};

class BothEmptyError : public Error {
 public:
  BothEmptyError()
      : Error("both_empty", "jaccard of two empty sets is undefined") {}
};

class NoOverlapError : public Error {
 public:
  NoOverlapError()
      : Error("no_overlap",
              "no predicted session is present in the ground truth") {}
};

class ConfigError : public Error {
 public:
  explicit ConfigError(const std::string& message)
      : Error("config", message) {}
};

}  // namespace buypred
