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

#include "mlmrc/phrase_miner.h"

#include <algorithm>
#include <fstream>
#include <map>
#include <optional>
#include <unordered_map>

#include "mlmrc/error.h"
#include "mlmrc/parallel.h"
#include "mlmrc/text.h"

namespace mlmrc {

namespace {

std::vector<std::string> TokenTexts(std::string_view s) {
  std::vector<std::string> out;
  for (auto& token : text::WordTokenize(s)) out.push_back(std::move(token.text));
  return out;
}

bool ContainsSequence(const std::vector<std::string>& haystack,
                      const std::vector<std::string>& needle) {
  if (needle.empty() || needle.size() > haystack.size()) return false;
  return std::search(haystack.begin(), haystack.end(), needle.begin(),
                     needle.end()) != haystack.end();
}

std::string Join(const std::vector<std::string>& tokens, size_t begin,
                 size_t end) {
  std::string out;
  for (size_t i = begin; i < end; ++i) {
    if (i > begin) out.push_back(' ');
    out.append(tokens[i]);
  }
  return out;
}

struct IndexedPhrase {
  std::vector<std::string> tokens;
  const std::string* phrase;
};

struct Match {
  size_t begin;
  size_t end;
  size_t tokens;
};

}  // namespace

StopWordList::StopWordList(LanguageCode lang,
                           const std::vector<std::string>& words)
    : lang_(std::move(lang)) {
  for (const auto& word : words) words_.insert(text::FoldCase(word));
}

StopWordList StopWordList::FromFile(const std::filesystem::path& path,
                                    LanguageCode lang) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open stop-word list " + path.string());
  std::vector<std::string> words;
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    const auto first = line.find_first_not_of(" \t");
    if (first == std::string::npos || line[first] == '#') continue;
    const auto last = line.find_last_not_of(" \t");
    words.push_back(line.substr(first, last - first + 1));
  }
  return StopWordList(std::move(lang), words);
}

bool StopWordList::Contains(std::string_view word) const {
  return words_.contains(text::FoldCase(word));
}

void MiningConfig::Validate() const {
  if (ngram_min < 2 || ngram_min > ngram_max || ngram_max > ngram_cap) {
    throw ValidationError("n-gram range " + std::to_string(ngram_min) + ":" +
                          std::to_string(ngram_max) + " outside 2:" +
                          std::to_string(ngram_cap));
  }
  if (!(threshold >= 0.0 && threshold <= 1.0)) {
    throw ValidationError("mining threshold must lie in [0, 1]");
  }
}

void to_json(nlohmann::json& j, const MiningStats& stats) {
  j = nlohmann::json{{"query_count", stats.query_count},
                     {"skipped_records", stats.skipped_records},
                     {"phrase_count", stats.phrase_count},
                     {"occurrence_count", stats.occurrence_count},
                     {"phrases_per_query", stats.phrases_per_query},
                     {"occurrences_per_query", stats.occurrences_per_query}};
}

std::vector<std::string> EnumerateNgrams(std::string_view query,
                                         const MiningConfig& config) {
  const auto tokens = TokenTexts(query);
  std::vector<std::string> out;
  std::unordered_set<std::string> seen;
  for (size_t start = 0; start < tokens.size(); ++start) {
    for (int n = config.ngram_min; n <= config.ngram_max; ++n) {
      if (start + n > tokens.size()) break;
      auto gram = Join(tokens, start, start + n);
      if (seen.insert(gram).second) out.push_back(std::move(gram));
    }
  }
  return out;
}

std::vector<std::string> Candidates(std::string_view query,
                                    const MiningConfig& config,
                                    const StopWordList& stops) {
  std::vector<std::string> out;
  for (auto& gram : EnumerateNgrams(query, config)) {
    const auto first_end = gram.find(' ');
    const auto last_begin = gram.rfind(' ') + 1;
    if (stops.Contains(std::string_view(gram).substr(0, first_end)) ||
        stops.Contains(std::string_view(gram).substr(last_begin))) {
      continue;
    }
    out.push_back(std::move(gram));
  }
  return out;
}

double Score(std::string_view phrase, std::span<const std::string> titles) {
  if (titles.empty()) {
    throw ValidationError("cannot score '" + std::string(phrase) +
                          "' against an empty title list");
  }
  const auto needle = TokenTexts(phrase);
  size_t hits = 0;
  for (const auto& title : titles) {
    if (ContainsSequence(TokenTexts(title), needle)) ++hits;
  }
  return static_cast<double>(hits) / titles.size();
}

MiningResult Mine(std::span<const QueryLogRecord> log,
                  const MiningConfig& config, const StopWordList& stops) {
  config.Validate();
  for (const auto& record : log) {
    if (record.lang != log.front().lang) {
      throw ValidationError("query log mixes languages '" +
                            log.front().lang.str() + "' and '" +
                            record.lang.str() + "'");
    }
  }
  if (!log.empty() && !stops.lang().empty() && stops.lang() != log.front().lang) {
    throw ValidationError("stop-word list is for '" + stops.lang().str() +
                          "' but the log is '" + log.front().lang.str() + "'");
  }

  MiningResult result;
  std::unordered_map<std::string, size_t> position;  // phrase -> index
  for (const auto& record : log) {
    if (record.titles.empty()) {
      ++result.stats.skipped_records;
      continue;
    }
    ++result.stats.query_count;
    std::vector<std::vector<std::string>> titles;
    titles.reserve(record.titles.size());
    for (const auto& title : record.titles) titles.push_back(TokenTexts(title));

    for (auto& candidate : Candidates(record.query, config, stops)) {
      const auto needle = TokenTexts(candidate);
      int hits = 0;
      for (const auto& title : titles) {
        if (ContainsSequence(title, needle)) ++hits;
      }
      const double score = static_cast<double>(hits) / titles.size();
      if (score < config.threshold) continue;
      ++result.stats.occurrence_count;

      KnowledgePhraseEntry entry{candidate, record.lang, score, hits,
                                 static_cast<int>(needle.size())};
      auto [it, inserted] =
          position.try_emplace(std::move(candidate), result.phrases.size());
      if (inserted) {
        result.phrases.push_back(std::move(entry));
      } else if (score > result.phrases[it->second].score) {
        result.phrases[it->second] = std::move(entry);
      }
    }
  }
  auto& stats = result.stats;
  stats.phrase_count = result.phrases.size();
  if (stats.query_count > 0) {
    stats.phrases_per_query =
        static_cast<double>(stats.phrase_count) / stats.query_count;
    stats.occurrences_per_query =
        static_cast<double>(stats.occurrence_count) / stats.query_count;
  }
  return result;
}

std::vector<PassageWithPhrases> AttachPhrases(
    std::span<const Passage> passages,
    std::span<const KnowledgePhraseEntry> phrases, int jobs) {
  // lang -> first token -> phrases starting with it
  std::map<LanguageCode,
           std::unordered_map<std::string, std::vector<IndexedPhrase>>>
      index;
  for (const auto& entry : phrases) {
    auto tokens = TokenTexts(entry.phrase);
    if (tokens.empty()) continue;
    auto& bucket = index[entry.lang][tokens.front()];
    bucket.push_back(IndexedPhrase{std::move(tokens), &entry.phrase});
  }

  std::vector<std::optional<PassageWithPhrases>> results(passages.size());
  ParallelFor(passages.size(), jobs, [&](size_t p) {
    const Passage& passage = passages[p];
    auto lang_it = index.find(passage.lang);
    if (lang_it == index.end()) return;
    const auto tokens = text::WordTokenize(passage.text);

    std::vector<Match> matches;
    for (size_t i = 0; i < tokens.size(); ++i) {
      auto it = lang_it->second.find(tokens[i].text);
      if (it == lang_it->second.end()) continue;
      for (const auto& candidate : it->second) {
        const size_t n = candidate.tokens.size();
        if (i + n > tokens.size()) continue;
        bool equal = true;
        for (size_t k = 1; k < n && equal; ++k) {
          equal = tokens[i + k].text == candidate.tokens[k];
        }
        if (!equal) continue;
        const size_t begin = tokens[i].begin;
        const size_t end = tokens[i + n - 1].end;
        const std::string_view surface =
            std::string_view(passage.text).substr(begin, end - begin);
        if (text::FoldCase(surface) != *candidate.phrase) continue;
        matches.push_back(Match{begin, end, n});
      }
    }
    if (matches.empty()) return;

    std::sort(matches.begin(), matches.end(), [](const Match& a, const Match& b) {
      if (a.tokens != b.tokens) return a.tokens > b.tokens;
      if (a.end - a.begin != b.end - b.begin) {
        return a.end - a.begin > b.end - b.begin;
      }
      return a.begin < b.begin;
    });
    PassageWithPhrases out{passage.text, passage.lang, {}};
    for (const auto& m : matches) {
      const bool overlaps = std::any_of(
          out.phrase_spans.begin(), out.phrase_spans.end(),
          [&](const ByteRange& r) { return m.begin < r.second && r.first < m.end; });
      if (!overlaps) out.phrase_spans.emplace_back(m.begin, m.end);
    }
    std::sort(out.phrase_spans.begin(), out.phrase_spans.end());
    results[p] = std::move(out);
  });

  std::vector<PassageWithPhrases> out;
  for (auto& r : results) {
    if (r) out.push_back(std::move(*r));
  }
  return out;
}

void to_json(nlohmann::json& j, const PhraseCorpusStats& stats) {
  j = nlohmann::json{{"passage_count", stats.passage_count},
                     {"phrase_count", stats.phrase_count},
                     {"unique_phrase_count", stats.unique_phrase_count},
                     {"avg_tokens_per_phrase", stats.avg_tokens_per_phrase},
                     {"avg_phrases_per_passage", stats.avg_phrases_per_passage}};
}

PhraseCorpusStats PhraseStats(std::span<const PassageWithPhrases> corpus) {
  PhraseCorpusStats stats;
  stats.passage_count = corpus.size();
  std::unordered_set<std::string> unique;
  size_t total_tokens = 0;
  for (const auto& passage : corpus) {
    for (const auto& [begin, end] : passage.phrase_spans) {
      const auto surface =
          std::string_view(passage.passage).substr(begin, end - begin);
      total_tokens += text::WordTokenize(surface).size();
      unique.insert(passage.lang.str() + "\t" + text::FoldCase(surface));
      ++stats.phrase_count;
    }
  }
  stats.unique_phrase_count = unique.size();
  if (stats.phrase_count > 0) {
    stats.avg_tokens_per_phrase =
        static_cast<double>(total_tokens) / stats.phrase_count;
  }
  if (stats.passage_count > 0) {
    stats.avg_phrases_per_passage =
        static_cast<double>(stats.phrase_count) / stats.passage_count;
  }
  return stats;
}

}  // namespace mlmrc
