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

#ifndef MLMRC_SUBWORD_H_
#define MLMRC_SUBWORD_H_

#include <array>
#include <cstddef>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "mlmrc/corpus.h"

namespace mlmrc {

using TokenId = int;

struct TokenizedText {
  std::vector<TokenId> ids;
  std::vector<ByteRange> ranges;  // one per id, into the source text
};

// Greedy longest-match subword vocabulary. Word-internal pieces carry the
// "##" prefix.
class SubwordVocab {
 public:
  static constexpr std::string_view kPad = "[PAD]";
  static constexpr std::string_view kUnk = "[UNK]";
  static constexpr std::string_view kStart = "[Start]";
  static constexpr std::string_view kDelim = "[Delim]";
  static constexpr std::string_view kMask = "[MASK]";
  static constexpr std::array<std::string_view, 5> kSpecials = {
      kPad, kUnk, kStart, kDelim, kMask};
  static constexpr std::string_view kContinuation = "##";

  // Token strings in id order. Throws ValidationError if a special is
  // missing, a token is empty, or a token repeats.
  explicit SubwordVocab(std::vector<std::string> tokens);

  // Specials, then every character seen (bare and "##" forms, byte order),
  // then whole words by descending frequency (ties by byte order) until
  // `max_size` tokens. Throws ValidationError if `max_size` cannot hold the
  // specials and characters.
  static SubwordVocab Build(std::span<const std::string> corpus,
                            size_t max_size);
  // One token per line; line number (0-based) is the id.
  static SubwordVocab Load(const std::filesystem::path& path);
  void Save(const std::filesystem::path& path) const;

  size_t size() const { return tokens_.size(); }
  const std::string& token(TokenId id) const { return tokens_.at(id); }
  std::optional<TokenId> Find(std::string_view token) const;

  TokenId pad_id() const { return pad_; }
  TokenId unk_id() const { return unk_; }
  TokenId start_id() const { return start_; }
  TokenId delim_id() const { return delim_; }
  TokenId mask_id() const { return mask_; }
  bool IsSpecial(TokenId id) const;
  // Ids eligible as random replacements.
  const std::vector<TokenId>& regular_ids() const { return regular_; }

  // Segments each whitespace-delimited word greedily; a character with no
  // matching piece becomes [UNK] covering that character.
  TokenizedText Tokenize(std::string_view text) const;

  const std::vector<std::string>& tokens() const { return tokens_; }

 private:
  struct Hash {
    using is_transparent = void;
    size_t operator()(std::string_view s) const {
      return std::hash<std::string_view>{}(s);
    }
  };

  std::vector<std::string> tokens_;
  std::unordered_map<std::string, TokenId, Hash, std::equal_to<>> index_;
  std::vector<TokenId> regular_;
  TokenId pad_ = -1, unk_ = -1, start_ = -1, delim_ = -1, mask_ = -1;
};

}  // namespace mlmrc

#endif  // MLMRC_SUBWORD_H_
