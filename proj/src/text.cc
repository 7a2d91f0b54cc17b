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

#include "mlmrc/text.h"

#include <unicode/uchar.h>

namespace mlmrc::text {

char32_t DecodeNext(std::string_view s, size_t& pos) {
  const auto lead = static_cast<unsigned char>(s[pos]);
  if (lead < 0x80) {
    ++pos;
    return lead;
  }
  int extra = 0;
  char32_t cp = 0;
  if ((lead & 0xE0) == 0xC0) {
    extra = 1;
    cp = lead & 0x1F;
  } else if ((lead & 0xF0) == 0xE0) {
    extra = 2;
    cp = lead & 0x0F;
  } else if ((lead & 0xF8) == 0xF0) {
    extra = 3;
    cp = lead & 0x07;
  } else {
    ++pos;
    return 0xFFFD;
  }
  if (pos + extra >= s.size()) {
    ++pos;
    return 0xFFFD;
  }
  for (int i = 1; i <= extra; ++i) {
    const auto c = static_cast<unsigned char>(s[pos + i]);
    if ((c & 0xC0) != 0x80) {
      ++pos;
      return 0xFFFD;
    }
    cp = (cp << 6) | (c & 0x3F);
  }
  // Overlong forms and surrogates are rejected.
  static constexpr char32_t kMin[] = {0, 0x80, 0x800, 0x10000};
  if (cp < kMin[extra] || cp > 0x10FFFF || (cp >= 0xD800 && cp <= 0xDFFF)) {
    ++pos;
    return 0xFFFD;
  }
  pos += extra + 1;
  return cp;
}

void AppendUtf8(char32_t cp, std::string& out) {
  if (cp < 0x80) {
    out.push_back(static_cast<char>(cp));
  } else if (cp < 0x800) {
    out.push_back(static_cast<char>(0xC0 | (cp >> 6)));
    out.push_back(static_cast<char>(0x80 | (cp & 0x3F)));
  } else if (cp < 0x10000) {
    out.push_back(static_cast<char>(0xE0 | (cp >> 12)));
    out.push_back(static_cast<char>(0x80 | ((cp >> 6) & 0x3F)));
    out.push_back(static_cast<char>(0x80 | (cp & 0x3F)));
  } else {
    out.push_back(static_cast<char>(0xF0 | (cp >> 18)));
    out.push_back(static_cast<char>(0x80 | ((cp >> 12) & 0x3F)));
    out.push_back(static_cast<char>(0x80 | ((cp >> 6) & 0x3F)));
    out.push_back(static_cast<char>(0x80 | (cp & 0x3F)));
  }
}

bool IsValidUtf8(std::string_view s) {
  size_t pos = 0;
  while (pos < s.size()) {
    const size_t before = pos;
    const char32_t cp = DecodeNext(s, pos);
    if (cp == 0xFFFD) {
      // A literal U+FFFD is three bytes; anything else is a decode failure.
      if (pos - before != 3) return false;
    }
  }
  return true;
}

bool IsCharBoundary(std::string_view s, size_t offset) {
  if (offset == 0 || offset == s.size()) return true;
  if (offset > s.size()) return false;
  return (static_cast<unsigned char>(s[offset]) & 0xC0) != 0x80;
}

bool IsWhitespace(char32_t cp) {
  return u_isUWhiteSpace(static_cast<UChar32>(cp));
}

bool IsPunctuation(char32_t cp) {
  return u_ispunct(static_cast<UChar32>(cp));
}

char32_t FoldCase(char32_t cp) {
  return static_cast<char32_t>(
      u_foldCase(static_cast<UChar32>(cp), U_FOLD_CASE_DEFAULT));
}

std::string FoldCase(std::string_view s) {
  std::string out;
  out.reserve(s.size());
  size_t pos = 0;
  while (pos < s.size()) AppendUtf8(FoldCase(DecodeNext(s, pos)), out);
  return out;
}

std::vector<Token> WordTokenize(std::string_view s) {
  std::vector<Token> tokens;
  Token current;
  bool open = false;
  size_t pos = 0;
  while (pos < s.size()) {
    const size_t start = pos;
    const char32_t cp = DecodeNext(s, pos);
    if (IsWhitespace(cp) || IsPunctuation(cp)) {
      if (open) {
        current.end = start;
        tokens.push_back(std::move(current));
        current = Token{};
        open = false;
      }
      continue;
    }
    if (!open) {
      current.begin = start;
      open = true;
    }
    AppendUtf8(FoldCase(cp), current.text);
  }
  if (open) {
    current.end = s.size();
    tokens.push_back(std::move(current));
  }
  return tokens;
}

std::vector<std::pair<size_t, size_t>> SplitWhitespace(std::string_view s) {
  std::vector<std::pair<size_t, size_t>> words;
  size_t pos = 0;
  size_t word_start = 0;
  bool open = false;
  while (pos < s.size()) {
    const size_t start = pos;
    const char32_t cp = DecodeNext(s, pos);
    if (IsWhitespace(cp)) {
      if (open) words.emplace_back(word_start, start);
      open = false;
    } else if (!open) {
      word_start = start;
      open = true;
    }
  }
  if (open) words.emplace_back(word_start, s.size());
  return words;
}

}  // namespace mlmrc::text
