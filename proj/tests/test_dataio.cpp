// Copyright 2026 The t2seg Authors
// SPDX-License-Identifier: Apache-2.0

#include <doctest.h>

#include <algorithm>
#include <set>

#include <json.hpp>

#include "t2seg/dataio.hpp"
#include "t2seg/io.hpp"
#include "test_util.hpp"

using namespace t2seg;
using namespace t2seg::dataio;
using t2seg::testing::TempDir;

namespace {

Document doc(std::string id, std::vector<int> boundaries, std::vector<int> topics) {
  Document d;
  d.id = std::move(id);
  for (std::size_t i = 0; i < boundaries.size(); ++i) d.sentences.push_back("S" + std::to_string(i) + ".");
  d.boundaries = std::move(boundaries);
  d.topics = std::move(topics);
  return d;
}

std::string message_of(std::string_view text) {
  try {
    parse_corpus(text);
  } catch (const DataError& e) {
    return e.what();
  }
  return "";
}

// Builds one WikiSection-style record from section texts.
nlohmann::json wiki_doc(const std::string& id, const std::vector<std::pair<std::string, std::string>>& sections) {
  std::string text;
  nlohmann::json ann = nlohmann::json::array();
  for (const auto& [label, body] : sections) {
    // Offsets count UTF-16 units; the test bodies are ASCII apart from
    // 2-byte Latin letters, each a single unit.
    auto units = [](const std::string& s) {
      long n = 0;
      for (unsigned char c : s) n += (c & 0xC0) != 0x80 ? 1 : 0;
      return n;
    };
    ann.push_back({{"begin", units(text)}, {"length", units(body)}, {"sectionLabel", label}});
    text += body + "\n";
  }
  return {{"id", id}, {"title", id}, {"text", text}, {"annotations", ann}};
}

}  // namespace

TEST_CASE("corpus JSONL round trip is byte exact") {
  TempDir dir("corpus");
  std::vector<Document> docs{doc("a", {1, 0, 1}, {0, 0, 1}), doc("b \"quoted\" ü", {1}, {2})};
  docs[1].sentences[0] = "Unicode: Größe, emoji \xF0\x9F\x98\x80, tab\tand \"quotes\".";
  save_corpus(docs, dir.file("c.jsonl"));
  const auto loaded = load_corpus(dir.file("c.jsonl"));
  REQUIRE(loaded.size() == 2);
  CHECK(loaded[1].sentences == docs[1].sentences);
  CHECK(loaded[0].boundaries == docs[0].boundaries);
  CHECK(loaded[0].topics == docs[0].topics);
  save_corpus(loaded, dir.file("d.jsonl"));
  CHECK(io::read_file(dir.file("c.jsonl")) == io::read_file(dir.file("d.jsonl")));
  // Key order is fixed.
  CHECK(io::read_file(dir.file("c.jsonl")).rfind("{\"id\":\"a\",\"sentences\":", 0) == 0);
}

TEST_CASE("corpus invariants are enforced with document id and field") {
  const std::string bad_first = R"({"id":"d7","sentences":["a","b"],"boundaries":[0,1],"topics":[0,0]})";
  const auto m1 = message_of(bad_first);
  CHECK(m1.find("d7") != std::string::npos);
  CHECK(m1.find("boundaries") != std::string::npos);

  const auto m2 = message_of(R"({"id":"d8","sentences":["a","b"],"boundaries":[1,0],"topics":[0,1]})");
  CHECK(m2.find("d8") != std::string::npos);
  CHECK(m2.find("topics") != std::string::npos);

  CHECK(message_of(R"({"id":"d9","sentences":["a"],"boundaries":[1,0],"topics":[0]})").find("d9") !=
        std::string::npos);
  CHECK(message_of("{not json}\n").find("line 1") != std::string::npos);
  CHECK(message_of(R"({"id":"x","sentences":[],"boundaries":[],"topics":[]})").find("x") != std::string::npos);
  CHECK(message_of(R"({"id":"y","sentences":["a"],"boundaries":[1]})").find("y") != std::string::npos);
  CHECK(message_of(R"({"id":"z","sentences":["a"],"boundaries":[2],"topics":[0]})").find("z") != std::string::npos);
  CHECK(message_of("\n\n").empty());
}

TEST_CASE("vocabulary file round trip and OOV slot") {
  TempDir dir("vocab");
  TopicVocabulary v;
  CHECK(v.add("history") == 0);
  CHECK(v.add("symptom") == 1);
  CHECK(v.add("history") == 0);
  CHECK_FALSE(v.oov_id());
  CHECK_FALSE(v.lookup("cure"));
  v.reserve_oov();
  v.reserve_oov();
  CHECK(v.size() == 3);
  CHECK(v.distinct_labels() == 2);
  CHECK(v.oov_id() == 2);
  CHECK(v.lookup("cure") == 2);
  CHECK_THROWS_AS(v.add("cure"), ContractError);
  save_vocabulary(v, dir.file("v.json"));
  const auto back = load_vocabulary(dir.file("v.json"));
  CHECK(back.labels() == v.labels());
  CHECK(back.oov_id() == 2);
  CHECK_THROWS_AS(TopicVocabulary({"a", "a"}), DataError);
}

TEST_CASE("split_corpus") {
  std::vector<Document> docs;
  for (int i = 0; i < 100; ++i) docs.push_back(doc("d" + std::to_string(i), {1}, {0}));
  const auto a = split_corpus(docs, {0.8, 0.1, 0.1}, 5);
  const auto b = split_corpus(docs, {0.8, 0.1, 0.1}, 5);
  CHECK(a.train.size() == 80);
  CHECK(a.validation.size() == 10);
  CHECK(a.test.size() == 10);
  std::vector<std::string> ids_a, ids_b;
  std::multiset<std::string> all;
  for (const auto* part : {&a.train, &a.validation, &a.test})
    for (const auto& d : *part) {
      ids_a.push_back(d.id);
      all.insert(d.id);
    }
  for (const auto* part : {&b.train, &b.validation, &b.test})
    for (const auto& d : *part) ids_b.push_back(d.id);
  CHECK(ids_a == ids_b);
  std::multiset<std::string> input;
  for (const auto& d : docs) input.insert(d.id);
  CHECK(all == input);
  const auto c = split_corpus(docs, {0.8, 0.1, 0.1}, 6);
  CHECK(c.train[0].id + c.train[1].id != a.train[0].id + a.train[1].id);

  std::vector<Document> few(docs.begin(), docs.begin() + 3);
  CHECK_THROWS_AS(split_corpus(few, {0.8, 0.1, 0.1}, 1), ConfigError);
  CHECK_THROWS_AS(split_corpus(docs, {0.8, 0.3, 0.1}, 1), ConfigError);
  CHECK_THROWS_AS(split_corpus(docs, {1.0, 0.0, 0.0}, 1), ConfigError);
}

TEST_CASE("synthetic corpora satisfy document invariants and match their stores") {
  SyntheticOptions o;
  o.n_docs = 50;
  const auto c = generate_synthetic(o);
  CHECK(c.docs.size() == 50);
  CHECK(c.vocab.size() == 4);
  std::size_t boundaries = 0, sentences = 0;
  for (const auto& d : c.docs) {
    CHECK_NOTHROW(d.validate(4));
    CHECK(d.size() == 40);
    CHECK(c.single.rows(d.id).rows() == 40);
    CHECK(c.pairwise.rows(d.id).rows() == 40);
    CHECK(c.single.rows(d.id).cols() == 32);
    boundaries += static_cast<std::size_t>(std::count(d.boundaries.begin(), d.boundaries.end(), 1));
    sentences += d.size();
  }
  // Mean segment length near 8; the last segment of each document is cut.
  const double mean_len = static_cast<double>(sentences) / static_cast<double>(boundaries);
  CHECK(mean_len > 6.0);
  CHECK(mean_len < 9.0);

  const auto again = generate_synthetic(o);
  CHECK(serialize_corpus(again.docs) == serialize_corpus(c.docs));
  CHECK(serialize_embedding_store(again.single) == serialize_embedding_store(c.single));
  o.seed = 2;
  CHECK(serialize_corpus(generate_synthetic(o).docs) != serialize_corpus(c.docs));

  o.num_topics = 1;
  CHECK_THROWS_AS(generate_synthetic(o), ConfigError);
}

TEST_CASE("nearest-centroid classification certifies separability") {
  auto accuracy = [](double separation) {
    SyntheticOptions o;
    o.separation = separation;
    const auto c = generate_synthetic(o);
    // Centroids from the first half, accuracy on the second.
    std::vector<Eigen::VectorXd> sum(4, Eigen::VectorXd::Zero(32));
    std::vector<int> count(4, 0);
    const std::size_t half = c.docs.size() / 2;
    for (std::size_t i = 0; i < half; ++i) {
      const auto& m = c.single.rows(c.docs[i].id);
      for (std::size_t s = 0; s < c.docs[i].size(); ++s) {
        sum[c.docs[i].topics[s]] += m.row(static_cast<Index>(s)).transpose().cast<double>();
        ++count[c.docs[i].topics[s]];
      }
    }
    for (int k = 0; k < 4; ++k) sum[k] /= count[k];
    int right = 0, total = 0;
    for (std::size_t i = half; i < c.docs.size(); ++i) {
      const auto& m = c.single.rows(c.docs[i].id);
      for (std::size_t s = 0; s < c.docs[i].size(); ++s) {
        const Eigen::VectorXd x = m.row(static_cast<Index>(s)).transpose().cast<double>();
        int best = 0;
        for (int k = 1; k < 4; ++k)
          if ((x - sum[k]).squaredNorm() < (x - sum[best]).squaredNorm()) best = k;
        right += best == c.docs[i].topics[s] ? 1 : 0;
        ++total;
      }
    }
    return static_cast<double>(right) / total;
  };
  CHECK(accuracy(3.0) >= 0.95);
  CHECK(accuracy(0.0) < 0.4);
}

TEST_CASE("separation zero makes topic means coincide") {
  SyntheticOptions o;
  o.separation = 0.0;
  o.n_docs = 100;
  const auto c = generate_synthetic(o);
  std::vector<Eigen::VectorXd> sum(4, Eigen::VectorXd::Zero(32));
  std::vector<int> count(4, 0);
  for (const auto& d : c.docs) {
    const auto& m = c.single.rows(d.id);
    for (std::size_t s = 0; s < d.size(); ++s) {
      sum[d.topics[s]] += m.row(static_cast<Index>(s)).transpose().cast<double>();
      ++count[d.topics[s]];
    }
  }
  for (int k = 0; k < 4; ++k) CHECK((sum[k] / count[k]).norm() < 0.5);
}

TEST_CASE("sentence splitter") {
  CHECK(split_sentences("One here. Two there! Three? Four.") ==
        std::vector<std::string>{"One here.", "Two there!", "Three?", "Four."});
  CHECK(split_sentences("Dr. Smith arrived, e.g. at noon. He left.") ==
        std::vector<std::string>{"Dr. Smith arrived, e.g. at noon.", "He left."});
  CHECK(split_sentences("Version 2.5 is out. 3 more follow.") ==
        std::vector<std::string>{"Version 2.5 is out.", "3 more follow."});
  CHECK(split_sentences("J. R. R. Tolkien wrote it. done lowercase. Next") ==
        std::vector<std::string>{"J. R. R. Tolkien wrote it. done lowercase.", "Next"});
  CHECK(split_sentences("He said \"stop.\" Then left.") ==
        std::vector<std::string>{"He said \"stop.\"", "Then left."});
  CHECK(split_sentences("Die Größe ist gut. Übelkeit tritt auf.") ==
        std::vector<std::string>{"Die Größe ist gut.", "Übelkeit tritt auf."});
  CHECK(split_sentences("Heading\nBody text  with   spaces.") ==
        std::vector<std::string>{"Heading", "Body text with spaces."});
  CHECK(split_sentences("").empty());
  CHECK(split_sentences(" \n\n  ").empty());
  for (const auto& s : split_sentences("A. B. . ! ? C.\n\nD"))
    CHECK_FALSE(s.empty());
}

TEST_CASE("WikiSection import builds boundaries and topics") {
  const nlohmann::json release = nlohmann::json::array(
      {wiki_doc("Flu", {{"disease.symptom", "Fever is common. Cough follows. Rest helps."},
                        {"disease.treatment", "Drink water. See a doctor."}})});
  TopicVocabulary vocab;
  const auto r = import_wikisection(release.dump(), vocab);
  REQUIRE(r.docs.size() == 1);
  const auto& d = r.docs[0];
  CHECK(d.id == "Flu");
  CHECK(d.boundaries == std::vector<int>{1, 0, 0, 1, 0});
  CHECK(d.topics == std::vector<int>{0, 0, 0, 1, 1});
  CHECK(d.sentences[3] == "Drink water.");
  CHECK(vocab.labels() == std::vector<std::string>{"disease.symptom", "disease.treatment"});
  CHECK(r.skipped == 0);
}

TEST_CASE("WikiSection import handles non-ASCII offsets, drops, skips and OOV") {
  const nlohmann::json release = nlohmann::json::array({
      wiki_doc("Grippe", {{"krankheit.symptom", "Übelkeit tritt auf. Fieber steigt."},
                          {"krankheit.therapie", "Ruhe hilft."}}),
      wiki_doc("Single", {{"krankheit.symptom", "Only one section."}}),
      wiki_doc("Empty", {{"a", "   "}, {"krankheit.symptom", "Text."}}),
      {{"id", "Broken"}, {"text", "Short."}, {"annotations", {{{"begin", 0}, {"length", 99}, {"sectionLabel", "x"}}}}},
  });
  TopicVocabulary vocab;
  const auto r = import_wikisection(release.dump(), vocab);
  REQUIRE(r.docs.size() == 1);
  CHECK(r.docs[0].sentences ==
        std::vector<std::string>{"Übelkeit tritt auf.", "Fieber steigt.", "Ruhe hilft."});
  CHECK(r.docs[0].boundaries == std::vector<int>{1, 0, 1});
  CHECK(r.dropped == 2);  // one real section each
  CHECK(r.skipped == 1);
  REQUIRE(r.warnings.size() == 1);
  CHECK(r.warnings[0].find("Broken") != std::string::npos);

  // Held-out import: unseen labels map to the reserved top id.
  vocab.reserve_oov();
  ImportOptions held_out;
  held_out.grow_vocabulary = false;
  const nlohmann::json test_release = nlohmann::json::array(
      {wiki_doc("Cold", {{"krankheit.symptom", "Sneezing."}, {"krankheit.prognose", "Recovery is quick."}})});
  const auto t = import_wikisection(test_release.dump(), vocab, held_out);
  REQUIRE(t.docs.size() == 1);
  CHECK(t.docs[0].topics == std::vector<int>{0, *vocab.oov_id()});
  CHECK(*vocab.oov_id() == vocab.size() - 1);

  ImportOptions skip;
  skip.skip_labels = {"krankheit.therapie"};
  TopicVocabulary v2;
  CHECK(import_wikisection(release.dump(), v2, skip).docs.empty());

  CHECK_THROWS_AS(import_wikisection("{", v2), DataError);
  CHECK_THROWS_AS(import_wikisection("{}", v2), DataError);
}

TEST_CASE("import is deterministic") {
  const nlohmann::json release = nlohmann::json::array(
      {wiki_doc("A", {{"x", "One. Two."}, {"y", "Three."}}), wiki_doc("B", {{"y", "Four."}, {"x", "Five. Six."}})});
  TopicVocabulary v1, v2;
  CHECK(serialize_corpus(import_wikisection(release.dump(), v1).docs) ==
        serialize_corpus(import_wikisection(release.dump(), v2).docs));
}
