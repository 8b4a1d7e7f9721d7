#pragma once

#include <stdexcept>
#include <string>

namespace ordinal {

// Training reached a persistently non-finite objective.
class TrainingDivergedError : public std::runtime_error {
 public:
  TrainingDivergedError(int epoch, const std::string& what)
      : std::runtime_error(what), epoch_(epoch) {}
  int epoch() const { return epoch_; }

 private:
  int epoch_;
};

// A batch whose truth/prediction marginals make the loss undefined.
class DegenerateBatchError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Training input whose label side is single-class or otherwise unusable.
class DegenerateTrainingError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// A data file that fails validation; carries the first offending line.
class IngestError : public std::runtime_error {
 public:
  IngestError(std::size_t line, const std::string& what)
      : std::runtime_error(what), line_(line) {}
  std::size_t line() const { return line_; }

 private:
  std::size_t line_;
};

}  // namespace ordinal
