#pragma once

// Error types shared across the library. Recoverable conditions that the
// caller is expected to branch on (absent feature values, validation
// findings) are represented as values, not exceptions; these classes cover
// genuine contract violations and unusable inputs.

#include <stdexcept>
#include <string>
#include <vector>

namespace humanal {

class Error : public std::runtime_error {
public:
  Error(std::string type, const std::string& message)
      : std::runtime_error(message), type_(std::move(type)) {}
  const std::string& type() const { return type_; }

private:
  std::string type_;
};

// A numeric argument outside its documented range.
class DomainError : public Error {
public:
  explicit DomainError(const std::string& message) : Error("DomainError", message) {}
};

// Invalid configuration (file- or programmatically-constructed).
class ConfigError : public Error {
public:
  explicit ConfigError(const std::string& message) : Error("ConfigError", message) {}
};

// A sample lacked a ground-truth entry where one was required.
class MissingTruthError : public Error {
public:
  explicit MissingTruthError(std::vector<std::string> missing)
      : Error("MissingTruth", describe(missing)), missing_(std::move(missing)) {}
  const std::vector<std::string>& missing() const { return missing_; }

private:
  static std::string describe(const std::vector<std::string>& missing) {
    std::string msg = "no ground truth for " + std::to_string(missing.size()) + " sample(s):";
    for (const std::string& id : missing) msg += " " + id;
    return msg;
  }
  std::vector<std::string> missing_;
};

// Prediction was attempted with a feature mask different from training.
class MaskMismatchError : public Error {
public:
  explicit MaskMismatchError(const std::string& message) : Error("MaskMismatch", message) {}
};

// Training data cannot support the requested model (single class, too few rows).
class DegenerateTrainingSetError : public Error {
public:
  explicit DegenerateTrainingSetError(const std::string& message)
      : Error("DegenerateTrainingSet", message) {}
};

// A train/test partition would leave one side empty.
class InsufficientPopulationError : public Error {
public:
  explicit InsufficientPopulationError(const std::string& message)
      : Error("InsufficientPopulation", message) {}
};

// Malformed input file.
class ParseError : public Error {
public:
  explicit ParseError(const std::string& message) : Error("ParseError", message) {}
};

// Filesystem-level failure.
class IoError : public Error {
public:
  explicit IoError(const std::string& message) : Error("IoError", message) {}
};

}  // namespace humanal
