#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace logicforge {

struct Error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Input validation failures. The CLI maps these to exit code 2.
struct ValidationError : Error {
  using Error::Error;
};

struct MalformedLine : ValidationError {
  std::size_t line_no;
  MalformedLine(std::size_t line, const std::string& what)
      : ValidationError("line " + std::to_string(line) + ": " + what),
        line_no(line) {}
};

struct EmptyCorpus : ValidationError {
  EmptyCorpus() : ValidationError("corpus contains no paragraphs") {}
};

struct EmptyGazetteer : ValidationError {
  EmptyGazetteer() : ValidationError("gazetteer contains no entities") {}
};

struct EmptyVocab : ValidationError {
  EmptyVocab() : ValidationError("no token survives the frequency cutoff") {}
};

struct InvalidConfig : ValidationError {
  using ValidationError::ValidationError;
};

struct DonorTooSmall : ValidationError {
  using ValidationError::ValidationError;
};

struct SameDocument : ValidationError {
  SameDocument() : ValidationError("donor paragraph comes from the same document") {}
};

struct EmptyPool : ValidationError {
  EmptyPool() : ValidationError("no eligible sentence in the negative pool") {}
};

// Encoded pair does not fit the context window; callers count the drop.
struct TooLong : Error {
  std::size_t length;
  std::size_t limit;
  TooLong(std::size_t len, std::size_t lim)
      : Error("encoded length " + std::to_string(len) + " exceeds context window " +
              std::to_string(lim)),
        length(len),
        limit(lim) {}
};

struct EmptyDataset : ValidationError {
  using ValidationError::ValidationError;
};

struct SequenceTooLong : Error {
  SequenceTooLong(std::size_t len, std::size_t lim)
      : Error("sequence of " + std::to_string(len) + " tokens exceeds context window " +
              std::to_string(lim)) {}
};

struct AllMaskedOut : Error {
  AllMaskedOut() : Error("no loss targets: every position is masked out") {}
};

struct BadMagic : Error {
  BadMagic() : Error("not a model checkpoint") {}
  explicit BadMagic(const std::string& path) : Error("not a model checkpoint: " + path) {}
};

struct VersionMismatch : Error {
  explicit VersionMismatch(const std::string& got)
      : Error("unsupported checkpoint version " + got) {}
};

struct ShapeMismatch : Error {
  using Error::Error;
};

struct NanLoss : Error {
  using Error::Error;
};

struct NotEnoughPairs : ValidationError {
  NotEnoughPairs(std::size_t have, std::size_t need)
      : ValidationError("have " + std::to_string(have) + " pairs but need at least " +
                        std::to_string(need)) {}
};

struct IoError : Error {
  using Error::Error;
};

}  // namespace logicforge
