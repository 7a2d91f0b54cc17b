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

#include "mlmrc/synth.h"

#include <algorithm>
#include <cctype>
#include <fstream>

#include "mlmrc/error.h"
#include "mlmrc/random.h"
#include "mlmrc/span_translate.h"

namespace mlmrc::synth {

namespace {

const std::vector<std::string> kFillers = {
    "river",  "city",    "market", "garden", "station", "morning", "window",
    "bridge", "letter",  "village", "forest", "winter", "harbor",  "school",
    "engine", "valley",  "castle", "island", "mountain", "road",   "field",
    "house",  "tower",   "lake",   "paper",  "stone",   "music",   "table",
    "summer", "train",   "cherry", "tree",   "green"};

const std::vector<std::string> kNumbers = {
    "two",    "three",  "four",     "five",   "seven", "eight",
    "nine",   "eleven", "twelve",   "thirteen", "twenty", "forty"};

const std::vector<std::string> kNames = {"Anna",  "Boris", "Clara", "David",
                                         "Elena", "Felix", "Greta", "Hugo",
                                         "Irene", "Jonas", "Karla", "Leon"};

const std::vector<std::string> kEnglishStops = {
    "the", "a",   "of",   "in",   "on",   "at",   "to",   "is",
    "was", "and", "when", "how",  "who",  "what", "many", "with",
    "for", "down", "made", "by",  "were", "had",  "near"};

const std::vector<std::string> kPhrases = {
    "george washington", "cherry tree",   "stone bridge", "winter harbor",
    "river city",        "green valley castle", "summer music", "paper tower"};

const std::map<std::string, std::string> kGerman = {
    {"the", "die"},     {"a", "ein"},       {"of", "von"},     {"in", "in"},
    {"on", "auf"},      {"at", "bei"},      {"to", "zu"},      {"is", "ist"},
    {"was", "war"},     {"and", "und"},     {"when", "wann"},  {"how", "wie"},
    {"who", "wer"},     {"what", "was"},    {"many", "viele"}, {"with", "mit"},
    {"for", "für"},     {"down", "ab"},     {"made", "gemacht"}, {"by", "durch"},
    {"were", "waren"},  {"had", "hatte"},   {"near", "nahe"},  {"visited", "besuchte"},
    {"two", "zwei"},    {"three", "drei"},  {"four", "vier"},  {"five", "fünf"},
    {"seven", "sieben"}, {"eight", "acht"}, {"nine", "neun"},  {"eleven", "elf"},
    {"twelve", "zwölf"}, {"thirteen", "dreizehn"}, {"twenty", "zwanzig"},
    {"forty", "vierzig"}};

const std::map<std::string, std::string> kFrench = {
    {"the", "le"},      {"a", "un"},        {"of", "de"},      {"in", "dans"},
    {"on", "sur"},      {"at", "chez"},     {"to", "vers"},    {"is", "est"},
    {"was", "était"},   {"and", "et"},      {"when", "quand"}, {"how", "comment"},
    {"who", "qui"},     {"what", "quoi"},   {"many", "combien"}, {"with", "avec"},
    {"for", "pour"},    {"down", "bas"},    {"made", "fait"},  {"by", "par"},
    {"were", "étaient"}, {"had", "avait"},  {"near", "près"},  {"visited", "visita"},
    {"two", "deux"},    {"three", "trois"}, {"four", "quatre"}, {"five", "cinq"},
    {"seven", "sept"},  {"eight", "huit"},  {"nine", "neuf"},  {"eleven", "onze"},
    {"twelve", "douze"}, {"thirteen", "treize"}, {"twenty", "vingt"},
    {"forty", "quarante"}};

template <typename T>
const T& Pick(const std::vector<T>& items, Rng& rng) {
  return items[rng.UniformInt(items.size())];
}

std::string Join(const std::vector<std::string>& words) {
  std::string out;
  for (const auto& w : words) {
    if (!out.empty()) out.push_back(' ');
    out.append(w);
  }
  return out;
}

std::string TranslateWords(const std::string& text, const LanguageCode& lang) {
  if (lang == LanguageCode("en")) return text;
  const DictionaryTranslator dict(Lexicon(lang));
  return dict.Translate(text, LanguageCode("en"), lang);
}

void WriteLines(const std::filesystem::path& path,
                const std::vector<std::string>& lines) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot open " + path.string() + " for writing");
  for (const auto& line : lines) out << line << '\n';
}

}  // namespace

std::vector<QAInstance> MrcDataset(const MrcOptions& options) {
  Rng rng(options.seed);
  std::vector<QAInstance> out;
  out.reserve(options.count);
  for (size_t i = 0; i < options.count; ++i) {
    const size_t filler_count =
        options.min_filler +
        rng.UniformInt(options.max_filler - options.min_filler + 1);
    std::vector<std::string> words;
    for (size_t k = 0; k < filler_count; ++k) {
      words.push_back(rng.Uniform01() < 0.2 ? Pick(kEnglishStops, rng)
                                            : Pick(kFillers, rng));
    }
    const std::string number = Pick(kNumbers, rng);
    const std::string name = Pick(kNames, rng);
    const size_t number_at = rng.UniformInt(words.size() + 1);
    words.insert(words.begin() + number_at, number);
    size_t name_at = words.size();
    if (options.two_types) {
      name_at = rng.UniformInt(words.size() + 1);
      words.insert(words.begin() + name_at, name);
    }
    const bool ask_person = options.two_types && rng.Uniform01() < 0.5;
    const bool collide = rng.Uniform01() < options.marker_collision_rate;

    // Locate the answer by rebuilding with byte offsets.
    const std::string& answer = ask_person ? name : number;
    const size_t answer_at =
        ask_person ? name_at : (number_at + (options.two_types && name_at <= number_at ? 1 : 0));
    std::string passage;
    size_t start = 0;
    for (size_t k = 0; k < words.size(); ++k) {
      if (k > 0) passage.push_back(' ');
      if (k == answer_at) start = passage.size();
      passage.append(words[k]);
    }
    if (collide) passage.append(" ([see notes])");
    passage.push_back('.');

    QAInstance instance;
    instance.id = options.id_prefix + std::to_string(i);
    instance.lang = LanguageCode("en");
    if (ask_person) {
      instance.question = "who visited the " + Pick(kFillers, rng);
      instance.answer_type = "person";
    } else {
      instance.question = "how many " + Pick(kFillers, rng) + " were in the " +
                          Pick(kFillers, rng);
      instance.answer_type = "numeric";
    }
    instance.passage = std::move(passage);
    instance.answers.push_back(AnswerSpan{start, start + answer.size(), answer});
    Validate(instance);
    out.push_back(std::move(instance));
  }
  return out;
}

std::map<std::string, std::string> Lexicon(const LanguageCode& target) {
  std::map<std::string, std::string> out;
  std::string suffix;
  if (target == LanguageCode("de")) {
    out = kGerman;
    suffix = "ung";
  } else if (target == LanguageCode("fr")) {
    out = kFrench;
    suffix = "eau";
  } else {
    throw ValidationError("no synthetic lexicon for '" + target.str() + "'");
  }
  for (const auto& w : kFillers) out.emplace(w, w + suffix);
  return out;
}

std::vector<PassageWithPhrases> PhrasePassages(
    const PhraseCorpusOptions& options) {
  Rng rng(options.seed);
  std::vector<PassageWithPhrases> out;
  out.reserve(options.count);
  for (size_t i = 0; i < options.count; ++i) {
    const size_t n_words =
        options.min_words + rng.UniformInt(options.max_words - options.min_words + 1);
    std::vector<std::string> words;
    for (size_t k = 0; k < n_words; ++k) {
      words.push_back(rng.Uniform01() < 0.3 ? Pick(kEnglishStops, rng)
                                            : Pick(kFillers, rng));
    }
    // Phrase insertion points, as word indices in the final sequence.
    const size_t n_phrases = 1 + rng.UniformInt(options.max_phrases);
    std::vector<std::pair<size_t, std::string>> inserts;
    for (size_t p = 0; p < n_phrases; ++p) {
      inserts.emplace_back(rng.UniformInt(words.size() + 1), Pick(kPhrases, rng));
    }
    std::sort(inserts.begin(), inserts.end());
    std::vector<std::string> pieces;
    std::vector<bool> is_phrase;
    size_t next = 0;
    for (const auto& [at, phrase] : inserts) {
      for (; next < at; ++next) {
        pieces.push_back(words[next]);
        is_phrase.push_back(false);
      }
      pieces.push_back(phrase);
      is_phrase.push_back(true);
    }
    for (; next < words.size(); ++next) {
      pieces.push_back(words[next]);
      is_phrase.push_back(false);
    }
    PassageWithPhrases passage;
    passage.lang = LanguageCode("en");
    for (size_t k = 0; k < pieces.size(); ++k) {
      if (k > 0) passage.passage.push_back(' ');
      const size_t begin = passage.passage.size();
      passage.passage.append(pieces[k]);
      if (is_phrase[k]) passage.phrase_spans.emplace_back(begin, passage.passage.size());
    }
    out.push_back(std::move(passage));
  }
  return out;
}

std::vector<std::string> KnowledgePhrases(const LanguageCode& lang) {
  std::vector<std::string> out;
  for (const auto& p : kPhrases) out.push_back(TranslateWords(p, lang));
  return out;
}

std::vector<std::string> StopWords(const LanguageCode& lang) {
  std::vector<std::string> out;
  for (const auto& w : kEnglishStops) out.push_back(TranslateWords(w, lang));
  std::sort(out.begin(), out.end());
  out.erase(std::unique(out.begin(), out.end()), out.end());
  return out;
}

std::vector<QueryLogRecord> QueryLog(const LanguageCode& lang, size_t count,
                                     uint64_t seed) {
  Rng rng(seed);
  std::vector<QueryLogRecord> out;
  for (size_t i = 0; i < count; ++i) {
    const std::string phrase = Pick(kPhrases, rng);
    const std::string distractor = Pick(kFillers, rng) + " " + Pick(kFillers, rng);
    QueryLogRecord record;
    record.lang = lang;
    record.query = TranslateWords(
        "when is the " + phrase + " near " + distractor + " made", lang);
    if (i % 20 != 19) {
      const size_t n_titles = 3 + rng.UniformInt(3);
      for (size_t t = 0; t < n_titles; ++t) {
        std::vector<std::string> words{Pick(kFillers, rng), phrase};
        if (rng.Uniform01() < 0.5) words.push_back(distractor);
        words.push_back(Pick(kFillers, rng));
        std::string title = Join(words);
        title[0] = static_cast<char>(std::toupper(static_cast<unsigned char>(title[0])));
        record.titles.push_back(TranslateWords(title, lang));
      }
    }
    out.push_back(std::move(record));
  }
  return out;
}

void WritePipelineFixture(const std::filesystem::path& dir, size_t source_count,
                          uint64_t seed) {
  std::filesystem::create_directories(dir);
  const LanguageCode en("en"), de("de"), fr("fr");

  MrcOptions train;
  train.count = source_count;
  train.seed = seed;
  train.id_prefix = "train-";
  train.marker_collision_rate = 0.03;
  SaveDataset(MrcDataset(train), dir / "source_en.jsonl");

  MrcOptions dev_options;
  dev_options.count = 30;
  dev_options.seed = seed + 100;
  dev_options.id_prefix = "dev-";
  auto dev = MrcDataset(dev_options);
  const MarkerScheme scheme;
  std::vector<QAInstance> dev_all = dev;
  for (const auto& target : {de, fr}) {
    const DictionaryTranslator dict(Lexicon(target));
    auto translated = TranslateDataset(dev, target, dict, scheme);
    for (auto& instance : translated.instances) {
      instance.id += "-" + target.str();
      dev_all.push_back(std::move(instance));
    }
  }
  SaveDataset(dev_all, dir / "dev.jsonl");

  for (const auto& target : {de, fr}) {
    std::vector<std::string> lines;
    for (const auto& [src, tgt] : Lexicon(target)) lines.push_back(src + "\t" + tgt);
    WriteLines(dir / ("lexicon_" + target.str() + ".tsv"), lines);
  }

  std::vector<nlohmann::json> passages;
  uint64_t log_seed = seed + 200;
  for (const auto& lang : {en, de, fr}) {
    const auto log = QueryLog(lang, 60, log_seed++);
    std::vector<nlohmann::json> rows(log.begin(), log.end());
    WriteJsonl(dir / ("querylog_" + lang.str() + ".jsonl"), rows);
    WriteLines(dir / ("stops_" + lang.str() + ".txt"), StopWords(lang));

    PhraseCorpusOptions corpus_options;
    corpus_options.count = 40;
    corpus_options.seed = log_seed++;
    corpus_options.min_words = 20;
    corpus_options.max_words = 40;
    for (const auto& p : PhrasePassages(corpus_options)) {
      passages.push_back({{"passage", TranslateWords(p.passage, lang)},
                          {"lang", lang.str()}});
    }
  }
  WriteJsonl(dir / "passages.jsonl", passages);

  const nlohmann::json config = {
      {"seed", seed},
      {"jobs", 1},
      {"pivot", "en"},
      {"languages", {"en", "de", "fr"}},
      {"out_dir", "out"},
      {"source", "source_en.jsonl"},
      {"translators", {{"de", "dict:lexicon_de.tsv"}, {"fr", "dict:lexicon_fr.tsv"}}},
      {"markers", {{"open", "(["}, {"close", "])"}}},
      {"mix_mode", "pivot"},
      {"query_logs",
       {{"en", "querylog_en.jsonl"}, {"de", "querylog_de.jsonl"}, {"fr", "querylog_fr.jsonl"}}},
      {"stop_words", {{"en", "stops_en.txt"}, {"de", "stops_de.txt"}, {"fr", "stops_fr.txt"}}},
      {"passages", "passages.jsonl"},
      {"mining", {{"threshold", 0.7}, {"ngram_min", 2}, {"ngram_max", 4}}},
      {"vocab_size", 400},
      {"mask_ratio", 0.15},
      {"encoder",
       {{"embed_dim", 16}, {"layers", 1}, {"heads", 2}, {"max_len_mrc", 64},
        {"max_len_lakm", 64}}},
      {"train",
       {{"learning_rate", 0.01}, {"batch_size", 8}, {"max_steps", 150},
        {"tasks", {"main", "mix", "lakm"}}}},
      {"dev", "dev.jsonl"}};
  std::ofstream out(dir / "pipeline.json", std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot write pipeline config in " + dir.string());
  out << config.dump(2) << '\n';
}

}  // namespace mlmrc::synth
