#ifndef SEFUN_ERRORS_HPP
#define SEFUN_ERRORS_HPP

#include <stdexcept>
#include <string>
#include <vector>

namespace sefun {

// Base class for every error the library throws on purpose.
class Error : public std::runtime_error {
 public:
  explicit Error(const std::string& msg) : std::runtime_error(msg) {}
};

class UnknownLabelError : public Error {
 public:
  explicit UnknownLabelError(const std::string& label)
      : Error("unknown sentence function label: \"" + label + "\""), label_(label) {}
  const std::string& label() const { return label_; }

 private:
  std::string label_;
};

class EmptyInputError : public Error {
 public:
  explicit EmptyInputError(const std::string& what) : Error(what) {}
};

class ParseError : public Error {
 public:
  explicit ParseError(const std::string& msg) : Error(msg), line_(0) {}
  ParseError(const std::string& msg, std::size_t line)
      : Error(msg + " (line " + std::to_string(line) + ")"), line_(line) {}
  std::size_t line() const { return line_; }  // 0 when no line applies

 private:
  std::size_t line_;
};

class SchemaVersionMismatchError : public Error {
 public:
  explicit SchemaVersionMismatchError(const std::string& msg) : Error(msg) {}
};

class RecordCountMismatchError : public Error {
 public:
  explicit RecordCountMismatchError(const std::string& msg) : Error(msg) {}
};

class SegmentMismatchError : public Error {
 public:
  explicit SegmentMismatchError(const std::string& msg) : Error(msg) {}
};

class InvalidStateError : public Error {
 public:
  explicit InvalidStateError(const std::string& msg) : Error(msg) {}
};

class EmptyCorpusError : public Error {
 public:
  explicit EmptyCorpusError(const std::string& msg) : Error(msg) {}
};

class EmptySequenceError : public Error {
 public:
  explicit EmptySequenceError(const std::string& msg) : Error(msg) {}
};

class ShapeMismatchError : public Error {
 public:
  explicit ShapeMismatchError(const std::string& msg) : Error(msg) {}
};

class NonFiniteInputError : public Error {
 public:
  explicit NonFiniteInputError(const std::string& msg) : Error(msg) {}
};

class UnlabeledSegmentError : public Error {
 public:
  explicit UnlabeledSegmentError(const std::string& msg) : Error(msg) {}
};

class MissingSentenceFunctionError : public Error {
 public:
  explicit MissingSentenceFunctionError(const std::string& msg) : Error(msg) {}
};

class NoCandidatesError : public Error {
 public:
  explicit NoCandidatesError(const std::string& msg) : Error(msg) {}
};

class LengthMismatchError : public Error {
 public:
  explicit LengthMismatchError(const std::string& msg) : Error(msg) {}
};

class InvalidWeightsError : public Error {
 public:
  explicit InvalidWeightsError(const std::string& msg) : Error(msg) {}
};

class CoverageMismatchError : public Error {
 public:
  explicit CoverageMismatchError(const std::string& msg) : Error(msg) {}
};

class MissingGradesError : public Error {
 public:
  MissingGradesError(const std::string& msg, std::vector<std::size_t> rows)
      : Error(msg), rows_(std::move(rows)) {}
  const std::vector<std::size_t>& rows() const { return rows_; }

 private:
  std::vector<std::size_t> rows_;
};

class IoError : public Error {
 public:
  explicit IoError(const std::string& msg) : Error(msg) {}
};

// Pipeline stage failures carry the stage name so the caller can report it.
class StageError : public Error {
 public:
  StageError(const std::string& stage, const std::string& msg)
      : Error("stage '" + stage + "': " + msg), stage_(stage) {}
  const std::string& stage() const { return stage_; }

 private:
  std::string stage_;
};

}  // namespace sefun

#endif  // SEFUN_ERRORS_HPP
