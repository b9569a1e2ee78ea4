// Copyright 2026 The t2seg Authors
// SPDX-License-Identifier: Apache-2.0

#include <algorithm>
#include <array>
#include <cctype>

#include <json.hpp>

#include "t2seg/dataio.hpp"

namespace t2seg::dataio {

namespace {

constexpr std::array<std::string_view, 28> kAbbreviations = {
    "e.g", "i.e", "etc", "vs", "dr", "mr", "mrs", "ms", "prof", "st", "jr", "sr", "no", "fig",
    "approx", "ca", "cf", "al", "inc", "ltd", "z.b", "bzw", "nr", "vgl", "u.a", "d.h", "sog", "jh"};

bool is_space(char c) { return c == ' ' || c == '\t' || c == '\r' || c == '\n' || c == '\f' || c == '\v'; }

// Uppercase ASCII, digit, Latin-1 uppercase in UTF-8 (C3 80..9E), or an
// opening quote/parenthesis.
bool opens_sentence(std::string_view text, std::size_t k) {
  const auto c = static_cast<unsigned char>(text[k]);
  if ((c >= 'A' && c <= 'Z') || (c >= '0' && c <= '9') || c == '"' || c == '(') return true;
  if (c == 0xC3 && k + 1 < text.size()) {
    const auto c2 = static_cast<unsigned char>(text[k + 1]);
    return c2 >= 0x80 && c2 <= 0x9E;
  }
  return false;
}

bool is_abbreviation(std::string_view text, std::size_t dot) {
  std::size_t b = dot;
  while (b > 0 && !is_space(text[b - 1]) && text[b - 1] != '(') --b;
  std::string word(text.substr(b, dot - b));
  for (auto& ch : word) ch = static_cast<char>(std::tolower(static_cast<unsigned char>(ch)));
  if (word.size() == 1 && std::isalpha(static_cast<unsigned char>(word[0]))) return true;
  return std::find(kAbbreviations.begin(), kAbbreviations.end(), word) != kAbbreviations.end();
}

void push_trimmed(std::string_view piece, std::vector<std::string>& out) {
  std::string s;
  bool pending_space = false;
  for (char c : piece) {
    if (is_space(c)) {
      pending_space = !s.empty();
      continue;
    }
    if (pending_space) s.push_back(' ');
    pending_space = false;
    s.push_back(c);
  }
  if (!s.empty()) out.push_back(std::move(s));
}

void split_line(std::string_view line, std::vector<std::string>& out) {
  std::size_t start = 0;
  for (std::size_t i = 0; i < line.size(); ++i) {
    const char c = line[i];
    if (c != '.' && c != '!' && c != '?') continue;
    std::size_t j = i + 1;
    while (j < line.size() && (line[j] == '"' || line[j] == '\'' || line[j] == ')')) ++j;
    if (j >= line.size() || !is_space(line[j])) continue;
    std::size_t k = j;
    while (k < line.size() && is_space(line[k])) ++k;
    if (k >= line.size() || !opens_sentence(line, k)) continue;
    if (c == '.' && is_abbreviation(line, i)) continue;
    push_trimmed(line.substr(start, j - start), out);
    start = k;
    i = k - 1;
  }
  push_trimmed(line.substr(start), out);
}

// Byte offset of every UTF-16 code unit index in `text` (plus the end).
std::vector<std::size_t> utf16_to_byte_offsets(std::string_view text) {
  std::vector<std::size_t> offsets;
  offsets.reserve(text.size() + 1);
  std::size_t i = 0;
  while (i < text.size()) {
    const auto c = static_cast<unsigned char>(text[i]);
    std::size_t len = 1;
    int units = 1;
    if (c >= 0xF0) {
      len = 4;
      units = 2;
    } else if (c >= 0xE0) {
      len = 3;
    } else if (c >= 0xC0) {
      len = 2;
    }
    for (int u = 0; u < units; ++u) offsets.push_back(i);
    i += std::min(len, text.size() - i);
  }
  offsets.push_back(text.size());
  return offsets;
}

}  // namespace

std::vector<std::string> split_sentences(std::string_view text) {
  std::vector<std::string> out;
  std::size_t pos = 0;
  while (pos <= text.size()) {
    std::size_t end = text.find('\n', pos);
    if (end == std::string_view::npos) end = text.size();
    split_line(text.substr(pos, end - pos), out);
    pos = end + 1;
  }
  return out;
}

ImportResult import_wikisection(std::string_view json_text, TopicVocabulary& vocab, const ImportOptions& options) {
  nlohmann::json root;
  try {
    root = nlohmann::json::parse(json_text);
  } catch (const nlohmann::json::exception& e) {
    throw DataError(std::string("WikiSection: malformed JSON: ") + e.what());
  }
  if (!root.is_array()) throw DataError("WikiSection: top level must be an array of documents");

  ImportResult result;
  for (std::size_t d = 0; d < root.size(); ++d) {
    const auto& j = root[d];
    std::string id = "doc-" + std::to_string(d);
    if (j.contains("id") && j["id"].is_string()) {
      id = j["id"].get<std::string>();
    } else if (j.contains("title") && j["title"].is_string()) {
      id = j["title"].get<std::string>();
    }
    auto skip = [&](const std::string& why) {
      result.warnings.push_back("document '" + id + "': " + why + "; skipped");
      ++result.skipped;
    };
    if (!j.contains("text") || !j["text"].is_string() || !j.contains("annotations") || !j["annotations"].is_array()) {
      skip("missing text or annotations");
      continue;
    }
    const std::string text = j["text"].get<std::string>();
    const auto offsets = utf16_to_byte_offsets(text);
    const auto units = static_cast<long long>(offsets.size() - 1);

    struct Section {
      long long begin;
      long long length;
      std::string label;
    };
    std::vector<Section> sections;
    bool ok = true;
    for (const auto& a : j["annotations"]) {
      if (!a.contains("begin") || !a.contains("length") || !a.contains("sectionLabel") ||
          !a["begin"].is_number_integer() || !a["length"].is_number_integer() || !a["sectionLabel"].is_string()) {
        skip("annotation lacks begin/length/sectionLabel");
        ok = false;
        break;
      }
      Section s{a["begin"].get<long long>(), a["length"].get<long long>(), a["sectionLabel"].get<std::string>()};
      if (s.begin < 0 || s.length < 0 || s.begin + s.length > units) {
        skip("annotation [" + std::to_string(s.begin) + ", +" + std::to_string(s.length) +
             ") outside text of " + std::to_string(units) + " units");
        ok = false;
        break;
      }
      sections.push_back(std::move(s));
    }
    if (!ok) continue;
    std::stable_sort(sections.begin(), sections.end(),
                     [](const Section& a, const Section& b) { return a.begin < b.begin; });

    Document doc;
    doc.id = id;
    int segments = 0;
    for (const auto& s : sections) {
      if (std::find(options.skip_labels.begin(), options.skip_labels.end(), s.label) != options.skip_labels.end()) {
        continue;
      }
      const std::size_t b0 = offsets[static_cast<std::size_t>(s.begin)];
      const std::size_t b1 = offsets[static_cast<std::size_t>(s.begin + s.length)];
      auto sentences = split_sentences(std::string_view(text).substr(b0, b1 - b0));
      if (sentences.empty()) continue;
      std::optional<int> topic = options.grow_vocabulary ? std::optional<int>(vocab.add(s.label)) : vocab.lookup(s.label);
      if (!topic) {
        skip("label '" + s.label + "' unknown and no OOV slot reserved");
        ok = false;
        break;
      }
      ++segments;
      for (std::size_t i = 0; i < sentences.size(); ++i) {
        doc.sentences.push_back(std::move(sentences[i]));
        doc.boundaries.push_back(i == 0 ? 1 : 0);
        doc.topics.push_back(*topic);
      }
    }
    if (!ok) continue;
    if (segments < options.min_segments) {
      ++result.dropped;
      continue;
    }
    doc.validate();
    result.docs.push_back(std::move(doc));
  }
  return result;
}

}  // namespace t2seg::dataio
