#pragma once

#include <stdexcept>
#include <string>

namespace codareg {

/// Error classes, one per failure family. The CLI maps these to process
/// exit codes, so keep the numbering stable.
enum class ErrorCode : int {
  ok = 0,
  generic = 1,
  config = 2,
  missing_column = 3,
  parse = 4,
  invalid_data = 5,
  rank_deficient = 6,
  non_convergence = 7,
  io = 8,
  unknown_target = 9,
  mode_mismatch = 10,
};

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& msg)
      : std::runtime_error(msg), code_(code) {}
  ErrorCode code() const { return code_; }

 private:
  ErrorCode code_;
};

// -- data validation ---------------------------------------------------------

struct NonPositivePart : Error {
  explicit NonPositivePart(int index, const std::string& context = "")
      : Error(ErrorCode::invalid_data,
              "composition part at index " + std::to_string(index) +
                  " is not strictly positive" +
                  (context.empty() ? "" : " (" + context + ")")),
        index(index) {}
  int index;
};

struct TooFewParts : Error {
  explicit TooFewParts(int got)
      : Error(ErrorCode::invalid_data,
              "a composition needs at least 2 parts, got " +
                  std::to_string(got)) {}
};

struct RefIndexOutOfRange : Error {
  RefIndexOutOfRange(int ref, int d)
      : Error(ErrorCode::invalid_data,
              "alr reference index " + std::to_string(ref) +
                  " out of range for D=" + std::to_string(d)) {}
};

struct InconsistentD : Error {
  InconsistentD(int expected, int got, std::size_t row)
      : Error(ErrorCode::invalid_data,
              "row " + std::to_string(row) + " has " + std::to_string(got) +
                  " parts, expected " + std::to_string(expected)) {}
};

struct MissingModerator : Error {
  explicit MissingModerator(std::size_t row)
      : Error(ErrorCode::invalid_data,
              "model requires a moderator but row " + std::to_string(row) +
                  " has none") {}
};

struct MissingOffset : Error {
  explicit MissingOffset(std::size_t row)
      : Error(ErrorCode::invalid_data,
              "model requires an offset but row " + std::to_string(row) +
                  " has none") {}
};

struct MissingTimeKeys : Error {
  MissingTimeKeys()
      : Error(ErrorCode::invalid_data,
              "lagging needs group/time keys on every row") {}
};

struct InvalidModerator : Error {
  explicit InvalidModerator(std::size_t row)
      : Error(ErrorCode::invalid_data,
              "binary moderator must be 0 or 1 (row " + std::to_string(row) +
                  ")") {}
};

struct NotZeroSum : Error {
  explicit NotZeroSum(double sum)
      : Error(ErrorCode::invalid_data,
              "coefficient block does not sum to zero (sum=" +
                  std::to_string(sum) + ")") {}
};

struct NonIntegerCount : Error {
  explicit NonIntegerCount(std::size_t row)
      : Error(ErrorCode::invalid_data,
              "count response must be a nonnegative integer (row " +
                  std::to_string(row) + ")") {}
};

struct NegativeCount : Error {
  explicit NegativeCount(std::size_t row)
      : Error(ErrorCode::invalid_data,
              "count response is negative (row " + std::to_string(row) +
                  ")") {}
};

// -- fitting -----------------------------------------------------------------

struct DimensionMismatch : Error {
  DimensionMismatch(const std::string& what)
      : Error(ErrorCode::invalid_data, "dimension mismatch: " + what) {}
};

struct RankDeficient : Error {
  explicit RankDeficient(const std::string& what)
      : Error(ErrorCode::rank_deficient, "design is rank deficient: " + what) {}
};

struct NonConvergence : Error {
  explicit NonConvergence(const std::string& what)
      : Error(ErrorCode::non_convergence, "optimizer failed to converge: " + what) {}
};

struct SamplerDivergence : Error {
  explicit SamplerDivergence(const std::string& what)
      : Error(ErrorCode::non_convergence, "sampler produced non-finite draw: " + what) {}
};

struct NotSoftMode : Error {
  NotSoftMode() : Error(ErrorCode::mode_mismatch, "prior is not in soft-constraint mode") {}
};

struct NotHardMode : Error {
  NotHardMode() : Error(ErrorCode::mode_mismatch, "prior is not in hard-constraint mode") {}
};

struct UnknownBlock : Error {
  explicit UnknownBlock(const std::string& what)
      : Error(ErrorCode::unknown_target, "no such coefficient block: " + what) {}
};

struct UnknownColumn : Error {
  explicit UnknownColumn(const std::string& what)
      : Error(ErrorCode::unknown_target, "no such coefficient: " + what) {}
};

struct NoModerator : Error {
  NoModerator() : Error(ErrorCode::unknown_target, "fit has no moderator term") {}
};

struct NotLogScale : Error {
  explicit NotLogScale(const std::string& what)
      : Error(ErrorCode::mode_mismatch, "elasticity semantics unavailable: " + what) {}
};

// -- I/O and configuration ---------------------------------------------------

struct MissingColumn : Error {
  explicit MissingColumn(const std::string& name)
      : Error(ErrorCode::missing_column, "input is missing column '" + name + "'") {}
};

struct ParseError : Error {
  ParseError(std::size_t row, const std::string& col, const std::string& what)
      : Error(ErrorCode::parse, "cannot parse row " + std::to_string(row) +
                                    ", column '" + col + "': " + what) {}
};

struct ConfigError : Error {
  explicit ConfigError(const std::string& what)
      : Error(ErrorCode::config, "config: " + what) {}
};

struct IoError : Error {
  explicit IoError(const std::string& what) : Error(ErrorCode::io, what) {}
};

}  // namespace codareg
