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

#include "mlmrc/corpus.h"

#include <fstream>
#include <unordered_set>

#include "mlmrc/error.h"
#include "mlmrc/text.h"

namespace mlmrc {

using nlohmann::json;

LanguageCode::LanguageCode(std::string_view code) {
  if (!IsValid(code)) {
    throw ValidationError("invalid language code '" + std::string(code) +
                          "': expected two lowercase ASCII letters");
  }
  code_ = std::string(code);
}

bool LanguageCode::IsValid(std::string_view code) {
  return code.size() == 2 && code[0] >= 'a' && code[0] <= 'z' &&
         code[1] >= 'a' && code[1] <= 'z';
}

void ValidateSpan(const AnswerSpan& span, std::string_view passage,
                  std::string_view id) {
  const auto fail = [&](const std::string& what) {
    throw ValidationError("instance '" + std::string(id) + "': " + what);
  };
  if (span.start >= span.end) {
    fail("answer span start " + std::to_string(span.start) +
         " must be < end " + std::to_string(span.end));
  }
  if (span.end > passage.size()) {
    fail("answer span end " + std::to_string(span.end) +
         " exceeds passage length " + std::to_string(passage.size()));
  }
  if (!text::IsCharBoundary(passage, span.start) ||
      !text::IsCharBoundary(passage, span.end)) {
    fail("answer span offsets split a UTF-8 character");
  }
  if (passage.substr(span.start, span.end - span.start) != span.text) {
    fail("passage[" + std::to_string(span.start) + ":" +
         std::to_string(span.end) + "] does not equal answer text '" +
         span.text + "'");
  }
}

void Validate(const QAInstance& instance) {
  if (instance.id.empty()) throw ValidationError("instance with empty id");
  if (instance.lang.empty()) {
    throw ValidationError("instance '" + instance.id + "': missing lang");
  }
  if (instance.answers.empty()) {
    throw ValidationError("instance '" + instance.id + "': no answers");
  }
  for (const auto& span : instance.answers) {
    ValidateSpan(span, instance.passage, instance.id);
  }
}

void to_json(json& j, const LanguageCode& lang) { j = lang.str(); }

void from_json(const json& j, LanguageCode& lang) {
  lang = LanguageCode(j.get<std::string>());
}

void to_json(json& j, const AnswerSpan& span) {
  j = json{{"start", span.start}, {"end", span.end}, {"text", span.text}};
}

void from_json(const json& j, AnswerSpan& span) {
  // Negative offsets would wrap silently through get<size_t>().
  const auto start = j.at("start").get<long long>();
  const auto end = j.at("end").get<long long>();
  if (start < 0 || end < 0) throw ValidationError("negative answer offset");
  span.start = static_cast<size_t>(start);
  span.end = static_cast<size_t>(end);
  span.text = j.at("text").get<std::string>();
}

void to_json(json& j, const QAInstance& instance) {
  j = json{{"id", instance.id},
           {"lang", instance.lang},
           {"question", instance.question},
           {"passage", instance.passage},
           {"answers", instance.answers}};
  if (instance.answer_type) {
    j["answer_type"] = *instance.answer_type;
  } else {
    j["answer_type"] = nullptr;
  }
  if (instance.q_lang) j["q_lang"] = *instance.q_lang;
}

void from_json(const json& j, QAInstance& instance) {
  instance.id = j.at("id").get<std::string>();
  instance.lang = j.at("lang").get<LanguageCode>();
  instance.question = j.at("question").get<std::string>();
  instance.passage = j.at("passage").get<std::string>();
  instance.answers = j.at("answers").get<std::vector<AnswerSpan>>();
  instance.answer_type.reset();
  if (auto it = j.find("answer_type"); it != j.end() && !it->is_null()) {
    instance.answer_type = it->get<std::string>();
  }
  instance.q_lang.reset();
  if (auto it = j.find("q_lang"); it != j.end() && !it->is_null()) {
    instance.q_lang = it->get<LanguageCode>();
  }
}

void to_json(json& j, const QueryLogRecord& record) {
  j = json{{"query", record.query},
           {"lang", record.lang},
           {"titles", record.titles}};
}

void from_json(const json& j, QueryLogRecord& record) {
  record.query = j.at("query").get<std::string>();
  record.lang = j.at("lang").get<LanguageCode>();
  record.titles = j.at("titles").get<std::vector<std::string>>();
}

void to_json(json& j, const KnowledgePhraseEntry& entry) {
  j = json{{"phrase", entry.phrase},
           {"lang", entry.lang},
           {"score", entry.score},
           {"title_hits", entry.title_hits},
           {"token_count", entry.token_count}};
}

void from_json(const json& j, KnowledgePhraseEntry& entry) {
  entry.phrase = j.at("phrase").get<std::string>();
  entry.lang = j.at("lang").get<LanguageCode>();
  entry.score = j.at("score").get<double>();
  entry.title_hits = j.at("title_hits").get<int>();
  entry.token_count = j.at("token_count").get<int>();
  if (entry.score < 0.0 || entry.score > 1.0) {
    throw ValidationError("phrase '" + entry.phrase + "': score outside [0,1]");
  }
}

void to_json(json& j, const PassageWithPhrases& p) {
  json spans = json::array();
  for (const auto& [b, e] : p.phrase_spans) spans.push_back({b, e});
  j = json{{"passage", p.passage}, {"lang", p.lang}, {"phrase_spans", spans}};
}

void from_json(const json& j, PassageWithPhrases& p) {
  p.passage = j.at("passage").get<std::string>();
  p.lang = j.at("lang").get<LanguageCode>();
  p.phrase_spans.clear();
  for (const auto& range : j.at("phrase_spans")) {
    const auto b = range.at(0).get<size_t>();
    const auto e = range.at(1).get<size_t>();
    if (b >= e || e > p.passage.size()) {
      throw ValidationError("phrase span [" + std::to_string(b) + ", " +
                            std::to_string(e) + ") outside passage");
    }
    p.phrase_spans.emplace_back(b, e);
  }
}

void ReadJsonl(const std::filesystem::path& path,
               const std::function<void(const json&, size_t)>& on_line) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  std::string line;
  size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.find_first_not_of(" \t") == std::string::npos) continue;
    json row;
    try {
      row = json::parse(line);
    } catch (const json::exception& e) {
      throw ParseError(path.string() + ":" + std::to_string(line_no) +
                       ": malformed JSON: " + e.what());
    }
    try {
      on_line(row, line_no);
    } catch (const json::exception& e) {
      throw ParseError(path.string() + ":" + std::to_string(line_no) + ": " +
                       e.what());
    } catch (const ValidationError& e) {
      throw ValidationError(path.string() + ":" + std::to_string(line_no) +
                            ": " + e.what());
    }
  }
}

void WriteJsonl(const std::filesystem::path& path,
                std::span<const json> rows) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot open " + path.string() + " for writing");
  for (const auto& row : rows) out << row.dump() << '\n';
  if (!out) throw IoError("write failed: " + path.string());
}

namespace {

template <typename T>
std::vector<json> ToRows(std::span<const T> items) {
  std::vector<json> rows;
  rows.reserve(items.size());
  for (const auto& item : items) rows.emplace_back(item);
  return rows;
}

}  // namespace

std::vector<QAInstance> LoadDataset(const std::filesystem::path& path,
                                    std::optional<LanguageCode> expected_lang) {
  std::vector<QAInstance> instances;
  std::unordered_set<std::string> seen;
  ReadJsonl(path, [&](const json& row, size_t) {
    auto instance = row.get<QAInstance>();
    Validate(instance);
    if (expected_lang && instance.lang != *expected_lang) {
      throw ValidationError("instance '" + instance.id + "' has lang '" +
                            instance.lang.str() + "', expected '" +
                            expected_lang->str() + "'");
    }
    if (!seen.insert(instance.id).second) {
      throw ValidationError("duplicate id '" + instance.id + "'");
    }
    instances.push_back(std::move(instance));
  });
  return instances;
}

size_t SaveDataset(std::span<const QAInstance> instances,
                   const std::filesystem::path& path) {
  std::unordered_set<std::string_view> seen;
  for (const auto& instance : instances) {
    Validate(instance);
    if (!seen.insert(instance.id).second) {
      throw ValidationError("duplicate id '" + instance.id + "'");
    }
  }
  const auto rows = ToRows(instances);
  WriteJsonl(path, rows);
  return instances.size();
}

std::optional<size_t> CodePointToByteOffset(std::string_view s,
                                            size_t code_points) {
  size_t pos = 0;
  for (size_t i = 0; i < code_points; ++i) {
    if (pos >= s.size()) return std::nullopt;
    text::DecodeNext(s, pos);
  }
  return pos;
}

std::vector<QAInstance> ImportSquad(const std::filesystem::path& path,
                                    const LanguageCode& lang) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  json doc;
  try {
    doc = json::parse(in);
  } catch (const json::exception& e) {
    throw ParseError(path.string() + ": malformed JSON: " + e.what());
  }
  std::vector<QAInstance> instances;
  std::unordered_set<std::string> seen;
  try {
    for (const auto& article : doc.at("data")) {
      for (const auto& paragraph : article.at("paragraphs")) {
        const auto context = paragraph.at("context").get<std::string>();
        for (const auto& qa : paragraph.at("qas")) {
          QAInstance instance;
          instance.id = qa.at("id").get<std::string>();
          instance.lang = lang;
          instance.question = qa.at("question").get<std::string>();
          instance.passage = context;
          for (const auto& answer : qa.at("answers")) {
            AnswerSpan span;
            span.text = answer.at("text").get<std::string>();
            const auto cp_start = answer.at("answer_start").get<size_t>();
            const auto start = CodePointToByteOffset(context, cp_start);
            if (!start) {
              throw ValidationError("instance '" + instance.id +
                                    "': answer_start beyond context");
            }
            span.start = *start;
            span.end = span.start + span.text.size();
            instance.answers.push_back(std::move(span));
          }
          if (instance.answers.empty()) continue;
          Validate(instance);
          if (!seen.insert(instance.id).second) {
            throw ValidationError("duplicate id '" + instance.id + "'");
          }
          instances.push_back(std::move(instance));
        }
      }
    }
  } catch (const json::exception& e) {
    throw ParseError(path.string() + ": unexpected SQuAD layout: " + e.what());
  }
  return instances;
}

std::vector<QueryLogRecord> LoadQueryLog(const std::filesystem::path& path) {
  std::vector<QueryLogRecord> records;
  ReadJsonl(path, [&](const json& row, size_t) {
    records.push_back(row.get<QueryLogRecord>());
  });
  return records;
}

std::vector<KnowledgePhraseEntry> LoadPhrases(
    const std::filesystem::path& path) {
  std::vector<KnowledgePhraseEntry> phrases;
  ReadJsonl(path, [&](const json& row, size_t) {
    phrases.push_back(row.get<KnowledgePhraseEntry>());
  });
  return phrases;
}

void SavePhrases(std::span<const KnowledgePhraseEntry> phrases,
                 const std::filesystem::path& path) {
  const auto rows = ToRows(phrases);
  WriteJsonl(path, rows);
}

std::vector<Passage> LoadPassages(const std::filesystem::path& path) {
  std::vector<Passage> passages;
  ReadJsonl(path, [&](const json& row, size_t) {
    passages.push_back(Passage{row.at("passage").get<std::string>(),
                               row.at("lang").get<LanguageCode>()});
  });
  return passages;
}

std::vector<PassageWithPhrases> LoadPhraseCorpus(
    const std::filesystem::path& path) {
  std::vector<PassageWithPhrases> corpus;
  ReadJsonl(path, [&](const json& row, size_t) {
    corpus.push_back(row.get<PassageWithPhrases>());
  });
  return corpus;
}

void SavePhraseCorpus(std::span<const PassageWithPhrases> corpus,
                      const std::filesystem::path& path) {
  const auto rows = ToRows(corpus);
  WriteJsonl(path, rows);
}

}  // namespace mlmrc
