#include "vmer/latex.hpp"

#include <cctype>

#include "vmer/errors.hpp"

namespace vmer {

namespace {

constexpr std::string_view kCarryOpen = "\\overset{1}{";

void emit_term(const std::vector<DigitSlot>& term, std::string& out) {
  for (const auto& slot : term) {
    const char d = static_cast<char>('0' + slot.digit);
    if (slot.has_carry) {
      out += kCarryOpen;
      out += d;
      out += '}';
    } else {
      out += d;
    }
  }
}

class Parser {
 public:
  explicit Parser(std::string_view text) : text_(text) {}

  Expression parse() {
    Expression e;
    e.operand_a = term();
    skip_ws();
    if (peek() == '+') {
      e.op = Operator::kPlus;
    } else if (peek() == '-') {
      e.op = Operator::kMinus;
    } else {
      fail("expected '+' or '-'");
    }
    ++pos_;
    e.operand_b = term();
    skip_ws();
    if (peek() != '=') fail("expected '='");
    ++pos_;
    e.result = result_digits();
    skip_ws();
    if (pos_ != text_.size()) fail("unexpected trailing input");
    return e;
  }

 private:
  [[noreturn]] void fail(const std::string& what) const { throw ParseError(what, pos_); }

  char peek() const { return pos_ < text_.size() ? text_[pos_] : '\0'; }

  void skip_ws() {
    while (pos_ < text_.size() && std::isspace(static_cast<unsigned char>(text_[pos_]))) ++pos_;
  }

  bool at_carry() const { return text_.substr(pos_).starts_with("\\overset"); }

  int digit() {
    skip_ws();
    const char c = peek();
    if (c < '0' || c > '9') fail("expected a digit");
    ++pos_;
    return c - '0';
  }

  void expect(char c) {
    skip_ws();
    if (peek() != c) fail(std::string("expected '") + c + "'");
    ++pos_;
  }

  DigitSlot carried_digit() {
    pos_ += std::string_view("\\overset").size();
    expect('{');
    skip_ws();
    if (peek() != '1') fail("carry must be '1'");
    ++pos_;
    expect('}');
    expect('{');
    const int d = digit();
    expect('}');
    return {d, true};
  }

  std::vector<DigitSlot> term() {
    std::vector<DigitSlot> slots;
    for (;;) {
      skip_ws();
      if (at_carry()) {
        slots.push_back(carried_digit());
      } else if (peek() >= '0' && peek() <= '9') {
        slots.push_back({peek() - '0', false});
        ++pos_;
      } else {
        break;
      }
    }
    if (slots.empty()) fail("empty operand");
    return slots;
  }

  std::vector<int> result_digits() {
    std::vector<int> digits;
    for (;;) {
      skip_ws();
      if (at_carry()) fail("carry is not allowed in the result");
      if (peek() < '0' || peek() > '9') break;
      digits.push_back(peek() - '0');
      ++pos_;
    }
    if (digits.empty()) fail("empty result");
    return digits;
  }

  std::string_view text_;
  std::size_t pos_ = 0;
};

void tokenize_term(const std::vector<DigitSlot>& term, TokenSequence& out) {
  for (const auto& slot : term) {
    if (slot.has_carry) out.push_back(SymbolClass::kCarry);
    out.push_back(digit_class(slot.digit));
  }
}

}  // namespace

std::string emit_latex(const Expression& e) {
  validate(e);
  std::string out;
  emit_term(e.operand_a, out);
  out += e.op == Operator::kPlus ? '+' : '-';
  emit_term(e.operand_b, out);
  out += '=';
  for (int d : e.result) out += static_cast<char>('0' + d);
  return out;
}

Expression parse_latex(std::string_view text) { return Parser(text).parse(); }

TokenSequence tokenize(const Expression& e) {
  TokenSequence tokens;
  tokenize_term(e.operand_a, tokens);
  tokens.push_back(operator_class(e.op));
  tokenize_term(e.operand_b, tokens);
  tokens.push_back(SymbolClass::kEquals);
  for (int d : e.result) tokens.push_back(digit_class(d));
  return tokens;
}

}  // namespace vmer
