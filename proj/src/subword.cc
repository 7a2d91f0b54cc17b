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

#include "mlmrc/subword.h"

#include <algorithm>
#include <fstream>
#include <map>
#include <set>

#include "mlmrc/error.h"
#include "mlmrc/text.h"

namespace mlmrc {

SubwordVocab::SubwordVocab(std::vector<std::string> tokens)
    : tokens_(std::move(tokens)) {
  for (size_t i = 0; i < tokens_.size(); ++i) {
    if (tokens_[i].empty()) {
      throw ValidationError("vocabulary token " + std::to_string(i) +
                            " is empty");
    }
    if (!index_.emplace(tokens_[i], static_cast<TokenId>(i)).second) {
      throw ValidationError("vocabulary token '" + tokens_[i] + "' repeats");
    }
  }
  const auto require = [&](std::string_view special) {
    auto id = Find(special);
    if (!id) {
      throw ValidationError("vocabulary lacks special token " +
                            std::string(special));
    }
    return *id;
  };
  pad_ = require(kPad);
  unk_ = require(kUnk);
  start_ = require(kStart);
  delim_ = require(kDelim);
  mask_ = require(kMask);
  for (TokenId id = 0; id < static_cast<TokenId>(tokens_.size()); ++id) {
    if (!IsSpecial(id)) regular_.push_back(id);
  }
  if (regular_.empty()) {
    throw ValidationError("vocabulary has no regular tokens");
  }
}

SubwordVocab SubwordVocab::Build(std::span<const std::string> corpus,
                                 size_t max_size) {
  if (corpus.empty()) throw ValidationError("cannot build vocab from nothing");
  std::set<std::string> chars;
  std::map<std::string, size_t> counts;
  for (const auto& doc : corpus) {
    for (const auto& [begin, end] : text::SplitWhitespace(doc)) {
      const std::string_view word =
          std::string_view(doc).substr(begin, end - begin);
      size_t pos = 0;
      size_t n_chars = 0;
      while (pos < word.size()) {
        const size_t start = pos;
        text::DecodeNext(word, pos);
        chars.emplace(word.substr(start, pos - start));
        ++n_chars;
      }
      if (n_chars > 1) ++counts[std::string(word)];
    }
  }

  std::vector<std::string> tokens(kSpecials.begin(), kSpecials.end());
  for (const auto& c : chars) tokens.push_back(c);
  for (const auto& c : chars) tokens.push_back(std::string(kContinuation) + c);
  if (max_size < tokens.size()) {
    throw ValidationError("max vocab size " + std::to_string(max_size) +
                          " below the " + std::to_string(tokens.size()) +
                          " specials and character pieces");
  }

  std::vector<std::pair<std::string, size_t>> words(counts.begin(),
                                                    counts.end());
  std::stable_sort(words.begin(), words.end(),
                   [](const auto& a, const auto& b) { return a.second > b.second; });
  std::set<std::string_view> present(tokens.begin(), tokens.end());
  for (const auto& [word, count] : words) {
    if (tokens.size() >= max_size) break;
    if (present.contains(word)) continue;
    tokens.push_back(word);
  }
  return SubwordVocab(std::move(tokens));
}

SubwordVocab SubwordVocab::Load(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open vocab " + path.string());
  std::vector<std::string> tokens;
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    tokens.push_back(line);
  }
  try {
    return SubwordVocab(std::move(tokens));
  } catch (const ValidationError& e) {
    throw ParseError(path.string() + ": " + e.what());
  }
}

void SubwordVocab::Save(const std::filesystem::path& path) const {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot open " + path.string() + " for writing");
  for (const auto& token : tokens_) out << token << '\n';
  if (!out) throw IoError("write failed: " + path.string());
}

std::optional<TokenId> SubwordVocab::Find(std::string_view token) const {
  auto it = index_.find(token);
  if (it == index_.end()) return std::nullopt;
  return it->second;
}

bool SubwordVocab::IsSpecial(TokenId id) const {
  return id == pad_ || id == unk_ || id == start_ || id == delim_ ||
         id == mask_;
}

TokenizedText SubwordVocab::Tokenize(std::string_view text) const {
  TokenizedText out;
  std::string piece;
  for (const auto& [word_begin, word_end] : text::SplitWhitespace(text)) {
    size_t pos = word_begin;
    while (pos < word_end) {
      const size_t prefix = pos > word_begin ? kContinuation.size() : 0;
      std::optional<TokenId> found;
      size_t end = word_end;
      for (; end > pos; --end) {
        if (!text::IsCharBoundary(text, end)) continue;
        piece.assign(prefix ? kContinuation : std::string_view{});
        piece.append(text.substr(pos, end - pos));
        if ((found = Find(piece))) break;
      }
      if (!found) {
        end = pos;
        text::DecodeNext(text, end);
        found = unk_;
      }
      out.ids.push_back(*found);
      out.ranges.emplace_back(pos, end);
      pos = end;
    }
  }
  return out;
}

}  // namespace mlmrc
