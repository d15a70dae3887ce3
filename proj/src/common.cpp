#include "yulverify/common.hpp"

#include <cctype>
#include <cstdio>

namespace yulverify {

std::string Span::str() const {
  if (!valid()) return "<unknown>";
  return std::to_string(line) + ":" + std::to_string(col);
}

std::string_view to_string(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::SyntaxError: return "SyntaxError";
    case ErrorKind::UnknownDirective: return "UnknownDirective";
    case ErrorKind::IllegalDeferred: return "IllegalDeferred";
    case ErrorKind::UnboundIdentifier: return "UnboundIdentifier";
    case ErrorKind::OldOutsidePost: return "OldOutsidePost";
    case ErrorKind::ResultOutsidePost: return "ResultOutsidePost";
    case ErrorKind::UnsupportedConstruct: return "UnsupportedConstruct";
    case ErrorKind::UnsupportedType: return "UnsupportedType";
    case ErrorKind::NoLayout: return "NoLayout";
    case ErrorKind::IndexOutOfRange: return "IndexOutOfRange";
    case ErrorKind::NegativeAddress: return "NegativeAddress";
    case ErrorKind::StackUnderflow: return "StackUnderflow";
    case ErrorKind::OutOfFuel: return "OutOfFuel";
    case ErrorKind::CalleeUnknown: return "CalleeUnknown";
    case ErrorKind::WatchedUnbound: return "WatchedUnbound";
    case ErrorKind::UnsupportedStmt: return "UnsupportedStmt";
    case ErrorKind::MissingEcfAnswer: return "MissingEcfAnswer";
    case ErrorKind::MissingInvariant: return "MissingInvariant";
    case ErrorKind::UnsupportedSort: return "UnsupportedSort";
    case ErrorKind::SolverError: return "SolverError";
    case ErrorKind::IoError: return "IoError";
    case ErrorKind::PreconditionViolation: return "PreconditionViolation";
  }
  return "Error";
}

namespace {

std::string format_message(ErrorKind kind, const std::string& message, Span span) {
  std::string out(to_string(kind));
  if (span.valid()) out += " at " + span.str();
  if (!message.empty()) out += ": " + message;
  return out;
}

}  // namespace

Error::Error(ErrorKind kind, const std::string& message, Span span)
    : std::runtime_error(format_message(kind, message, span)),
      kind_(kind),
      span_(span),
      detail_(message) {}

Word pow2(unsigned bits) {
  Word out;
  mpz_ui_pow_ui(out.get_mpz_t(), 2, bits);
  return out;
}

bool parse_word(std::string_view text, Word& out) {
  int base = 10;
  if (text.size() > 2 && text[0] == '0' && (text[1] == 'x' || text[1] == 'X')) {
    base = 16;
    text.remove_prefix(2);
  }
  std::string digits;
  for (char c : text) {
    if (c == '_') continue;
    bool ok = base == 16 ? std::isxdigit(static_cast<unsigned char>(c)) != 0
                         : std::isdigit(static_cast<unsigned char>(c)) != 0;
    if (!ok) return false;
    digits.push_back(c);
  }
  if (digits.empty()) return false;
  return out.set_str(digits, base) == 0;
}

Word parse_word_or_throw(std::string_view text, Span span) {
  Word w;
  if (!parse_word(text, w))
    throw Error(ErrorKind::SyntaxError, "malformed literal '" + std::string(text) + "'", span);
  return w;
}

std::string hex_slot(const Word& id) {
  std::string digits = id.get_str(16);
  if (digits.size() < 2) digits.insert(0, 2 - digits.size(), '0');
  return "0x" + digits;
}

}  // namespace yulverify
