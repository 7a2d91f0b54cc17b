// Copyright 2026 The mlmrc Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#ifndef MLMRC_TEXT_H_
#define MLMRC_TEXT_H_

#include <cstddef>
#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

// UTF-8 helpers shared by the tokenizers and the evaluation normalizer.
namespace mlmrc::text {

// Decodes the code point starting at `pos` and advances `pos` past it.
// Invalid sequences decode to U+FFFD and advance by one byte.
char32_t DecodeNext(std::string_view s, size_t& pos);
void AppendUtf8(char32_t cp, std::string& out);

bool IsValidUtf8(std::string_view s);
// True when `offset` does not fall inside a multi-byte sequence.
bool IsCharBoundary(std::string_view s, size_t offset);

bool IsWhitespace(char32_t cp);
// Unicode general category P* (connector, dash, open, close, initial,
// final, other punctuation).
bool IsPunctuation(char32_t cp);
char32_t FoldCase(char32_t cp);

std::string FoldCase(std::string_view s);

struct Token {
  std::string text;  // case-folded
  size_t begin = 0;  // byte range in the source string
  size_t end = 0;
};

// Splits on whitespace and punctuation, case-folds each token. Punctuation
// is dropped, so "George-Washington" yields two tokens.
std::vector<Token> WordTokenize(std::string_view s);

// Byte ranges of whitespace-delimited words.
std::vector<std::pair<size_t, size_t>> SplitWhitespace(std::string_view s);

}  // namespace mlmrc::text

#endif  // MLMRC_TEXT_H_
