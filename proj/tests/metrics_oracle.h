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

// Reference EM/F1 for ASCII text, written in the style of the original
// SQuAD scorer, plus a generator of random (prediction, golds) pairs.

#ifndef MLMRC_TESTS_METRICS_ORACLE_H_
#define MLMRC_TESTS_METRICS_ORACLE_H_

#include <algorithm>
#include <cctype>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "mlmrc/random.h"

namespace testing_oracle {

// ASCII characters in the Unicode punctuation categories.
inline bool IsAsciiPunct(char c) {
  static const std::string kPunct = "!\"#%&'()*,-./:;?@[\\]_{}";
  return kPunct.find(c) != std::string::npos;
}

inline std::vector<std::string> Words(const std::string& s) {
  std::vector<std::string> out;
  std::istringstream in(s);
  std::string w;
  while (in >> w) out.push_back(w);
  return out;
}

inline std::string Normalize(const std::string& s) {
  std::string lowered;
  for (char c : s) {
    if (IsAsciiPunct(c)) continue;
    lowered.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(c))));
  }
  std::string joined;
  for (const auto& w : Words(lowered)) {
    if (w == "a" || w == "an" || w == "the") continue;
    if (!joined.empty()) joined.push_back(' ');
    joined += w;
  }
  return joined;
}

inline int Em(const std::string& pred, const std::vector<std::string>& golds) {
  for (const auto& g : golds) {
    if (Normalize(pred) == Normalize(g)) return 1;
  }
  return 0;
}

inline double F1One(const std::string& pred, const std::string& gold) {
  const auto p = Words(Normalize(pred));
  const auto g = Words(Normalize(gold));
  if (p.empty() || g.empty()) return p.empty() && g.empty() ? 1.0 : 0.0;
  std::map<std::string, int> pc, gc;
  for (const auto& w : p) ++pc[w];
  for (const auto& w : g) ++gc[w];
  int common = 0;
  for (const auto& [w, n] : pc) {
    if (auto it = gc.find(w); it != gc.end()) common += std::min(n, it->second);
  }
  if (common == 0) return 0.0;
  const double precision = 1.0 * common / p.size();
  const double recall = 1.0 * common / g.size();
  return (2 * precision * recall) / (precision + recall);
}

inline double F1(const std::string& pred, const std::vector<std::string>& golds) {
  double best = 0.0;
  for (const auto& g : golds) best = std::max(best, F1One(pred, g));
  return best;
}

// Short strings over a small vocabulary so collisions and partial overlaps
// are common.
inline std::string RandomAnswer(mlmrc::Rng& rng) {
  static const std::vector<std::string> kWords = {
      "The", "the", "a", "An", "king", "King", "David", "david", "100", "mg",
      "50", "to", "x", "theory", "and", "tree"};
  static const std::vector<std::string> kSeps = {" ", "  ", "\t", ", ", ". ",
                                                 " - ", "'", "\n"};
  std::string s;
  const int n = static_cast<int>(rng.UniformInt(6));
  for (int i = 0; i < n; ++i) {
    if (i > 0 || rng.UniformInt(4) == 0) s += kSeps[rng.UniformInt(kSeps.size())];
    s += kWords[rng.UniformInt(kWords.size())];
  }
  if (rng.UniformInt(3) == 0) s += kSeps[rng.UniformInt(kSeps.size())];
  return s;
}

}  // namespace testing_oracle

#endif  // MLMRC_TESTS_METRICS_ORACLE_H_
