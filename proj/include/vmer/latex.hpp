#pragma once

// LaTeX markup for vertical expressions.
//
// Grammar (whitespace between tokens is ignored on input, never emitted):
//   expression := term op term '=' digit+
//   term       := ( '\overset{1}{' digit '}' | digit )+
//   op         := '+' | '-'

#include <string>
#include <string_view>
#include <vector>

#include "vmer/core.hpp"

namespace vmer {

/// Tokens share the 14-class alphabet; a carried digit is two tokens.
using TokenSequence = std::vector<SymbolClass>;

/// `\overset{1}{1}5+27=42` for 15 + 27 = 42 with a carry over the 1.
std::string emit_latex(const Expression& e);

/// Inverse of emit_latex. Throws ParseError with the character offset of the
/// first offending character.
Expression parse_latex(std::string_view text);

/// Left-to-right flattening; a carry token precedes the digit it sits on.
TokenSequence tokenize(const Expression& e);

}  // namespace vmer
