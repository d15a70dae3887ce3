#pragma once

#include <gmpxx.h>

#include <stdexcept>
#include <string>
#include <string_view>

namespace yulverify {

// Unbounded mathematical integer; EVM range is asserted, never enforced.
using Word = mpz_class;

struct Span {
  int line = 0;
  int col = 0;

  std::string str() const;
  bool valid() const { return line > 0; }
  friend bool operator==(const Span&, const Span&) = default;
  friend auto operator<=>(const Span&, const Span&) = default;
};

enum class ErrorKind {
  SyntaxError,
  UnknownDirective,
  IllegalDeferred,
  UnboundIdentifier,
  OldOutsidePost,
  ResultOutsidePost,
  UnsupportedConstruct,
  UnsupportedType,
  NoLayout,
  IndexOutOfRange,
  NegativeAddress,
  StackUnderflow,
  OutOfFuel,
  CalleeUnknown,
  WatchedUnbound,
  UnsupportedStmt,
  MissingEcfAnswer,
  MissingInvariant,
  UnsupportedSort,
  SolverError,
  IoError,
  PreconditionViolation,
};

std::string_view to_string(ErrorKind kind);

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& message, Span span = {});

  ErrorKind kind() const { return kind_; }
  const Span& span() const { return span_; }
  const std::string& detail() const { return detail_; }

 private:
  ErrorKind kind_;
  Span span_;
  std::string detail_;
};

Word pow2(unsigned bits);
// Accepts decimal or 0x-prefixed hex; underscores allowed as digit separators.
bool parse_word(std::string_view text, Word& out);
Word parse_word_or_throw(std::string_view text, Span span = {});
std::string hex_slot(const Word& id);

}  // namespace yulverify
