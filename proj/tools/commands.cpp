// Copyright 2026 The t2seg Authors
// SPDX-License-Identifier: Apache-2.0

#include "commands.hpp"

#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <iostream>
#include <memory>
#include <optional>

#include <CLI11.hpp>
#include <json.hpp>

#include "t2seg/ablation.hpp"
#include "t2seg/checkpoint.hpp"
#include "t2seg/dataio.hpp"
#include "t2seg/io.hpp"
#include "t2seg/plot.hpp"
#include "t2seg/trainer.hpp"

namespace t2seg::cli {

namespace {

using nlohmann::json;
namespace fs = std::filesystem;

constexpr std::array<double, 3> kSplitRatios{0.8, 0.1, 0.1};

struct EmbeddingFlags {
  std::string single_path;
  std::string pairwise_path;
  std::string provider = "file";
  int dim = 128;
};

void add_embedding_flags(CLI::App* cmd, EmbeddingFlags& f) {
  cmd->add_option("--single-embeddings", f.single_path, "T2EMB store of single-sentence embeddings");
  cmd->add_option("--pairwise-embeddings", f.pairwise_path, "T2EMB store of pairwise embeddings");
  cmd->add_option("--provider", f.provider, "Embedding source: file or hash")
      ->check(CLI::IsMember({"file", "hash"}));
  cmd->add_option("--dim", f.dim, "Hash encoder width")->check(CLI::Range(8, 1 << 20));
}

struct Providers {
  std::optional<EmbeddingProvider> single;
  std::optional<EmbeddingProvider> pairwise;
  json description = json::object();

  const EmbeddingProvider* single_ptr() const { return single ? &*single : nullptr; }
  const EmbeddingProvider* pairwise_ptr() const { return pairwise ? &*pairwise : nullptr; }
};

Providers resolve_providers(const EmbeddingFlags& f, bool want_single, bool want_pairwise, std::uint64_t seed) {
  Providers p;
  p.description["provider"] = f.provider;
  if (f.provider == "hash") {
    if (want_single) p.single = EmbeddingProvider::hashed(EmbeddingKind::kSingle, {f.dim, seed});
    if (want_pairwise) p.pairwise = EmbeddingProvider::hashed(EmbeddingKind::kPairwise, {f.dim, seed});
    p.description["dim"] = f.dim;
    p.description["seed"] = seed;
  } else {
    if (want_single && !f.single_path.empty()) {
      p.single = EmbeddingProvider::from_store(std::make_shared<const EmbeddingStore>(
          load_embedding_store(f.single_path, EmbeddingKind::kSingle)));
      p.description["single"] = f.single_path;
    }
    if (want_pairwise && !f.pairwise_path.empty()) {
      p.pairwise = EmbeddingProvider::from_store(std::make_shared<const EmbeddingStore>(
          load_embedding_store(f.pairwise_path, EmbeddingKind::kPairwise)));
      p.description["pairwise"] = f.pairwise_path;
    }
  }
  if (!p.single && !p.pairwise) {
    throw ConfigError("no embeddings enabled: pass --single-embeddings/--pairwise-embeddings or --provider hash");
  }
  return p;
}

json read_json_file(const std::string& path) {
  try {
    return json::parse(io::read_file(path));
  } catch (const json::exception& e) {
    throw ConfigError(path + ": " + e.what());
  }
}

std::string pct(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.1f", 100.0 * v);
  return buf;
}

int num_topics_for(const std::vector<Document>& docs, const std::optional<TopicVocabulary>& vocab) {
  if (vocab) return vocab->size();
  int k = 0;
  for (const auto& d : docs) {
    for (int t : d.topics) k = std::max(k, t + 1);
  }
  return std::max(k, 2);
}

std::string csv_field(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out.push_back('"');
    out.push_back(c);
  }
  return out + "\"";
}

// ---------------------------------------------------------------- commands

struct ImportArgs {
  std::string input, output, vocab;
  std::vector<std::string> skip_labels;
  int min_segments = 2;
};

int cmd_import(const ImportArgs& a) {
  TopicVocabulary vocab;
  dataio::ImportOptions opts;
  opts.skip_labels = a.skip_labels;
  opts.min_segments = a.min_segments;
  const bool frozen = !a.vocab.empty() && fs::exists(a.vocab);
  if (frozen) {
    vocab = dataio::load_vocabulary(a.vocab);
    vocab.reserve_oov();
    opts.grow_vocabulary = false;
  }
  auto result = dataio::import_wikisection(io::read_file(a.input), vocab, opts);
  for (const auto& w : result.warnings) std::cerr << a.input << ": " << w << "\n";
  dataio::save_corpus(result.docs, a.output);
  if (!frozen && !a.vocab.empty()) {
    vocab.reserve_oov();
    dataio::save_vocabulary(vocab, a.vocab);
  }
  std::cerr << "imported " << result.docs.size() << " documents, " << vocab.distinct_labels() << " topic labels, "
            << result.skipped << " skipped, " << result.dropped << " single-segment dropped\n";
  return kOk;
}

struct SynthArgs {
  std::string output, single_path, pairwise_path, config, vocab;
  std::uint64_t seed = 1;
};

int cmd_synth(const SynthArgs& a) {
  dataio::SyntheticOptions opts;
  if (!a.config.empty()) {
    const json j = read_json_file(a.config);
    for (auto it = j.begin(); it != j.end(); ++it) {
      const auto& k = it.key();
      if (k == "n_docs") opts.n_docs = it->get<int>();
      else if (k == "sentences_per_doc") opts.sentences_per_doc = it->get<int>();
      else if (k == "num_topics") opts.num_topics = it->get<int>();
      else if (k == "mean_segment_len") opts.mean_segment_len = it->get<double>();
      else if (k == "embed_dim") opts.embed_dim = it->get<int>();
      else if (k == "separation") opts.separation = it->get<double>();
      else throw ConfigError(a.config + ": unknown synthetic option '" + k + "'");
    }
  }
  opts.seed = a.seed;
  const auto corpus = dataio::generate_synthetic(opts);
  dataio::save_corpus(corpus.docs, a.output);
  if (!a.single_path.empty()) save_embedding_store(corpus.single, a.single_path);
  if (!a.pairwise_path.empty()) save_embedding_store(corpus.pairwise, a.pairwise_path);
  if (!a.vocab.empty()) dataio::save_vocabulary(corpus.vocab, a.vocab);
  std::cerr << "wrote " << corpus.docs.size() << " synthetic documents to " << a.output << "\n";
  return kOk;
}

struct EmbedArgs {
  std::string corpus, output, input, kind = "single", provider = "hash";
  int dim = 128;
  std::uint64_t seed = 1;
};

int cmd_embed(const EmbedArgs& a) {
  const auto docs = dataio::load_corpus(a.corpus);
  const EmbeddingKind kind = a.kind == "single" ? EmbeddingKind::kSingle : EmbeddingKind::kPairwise;
  EmbeddingProvider provider = a.provider == "hash" ? EmbeddingProvider::hashed(kind, {a.dim, a.seed}) : [&] {
    if (a.input.empty()) throw ConfigError("embed --provider file needs --input");
    return EmbeddingProvider::from_store(std::make_shared<const EmbeddingStore>(load_embedding_store(a.input, kind)));
  }();
  EmbeddingStore store(kind, provider.dim());
  for (const auto& d : docs) store.add(d.id, provider.encode(d));
  save_embedding_store(store, a.output);
  std::cerr << "wrote " << to_string(kind) << " embeddings (dim " << store.dim() << ") for " << store.size()
            << " documents to " << a.output << "\n";
  return kOk;
}

struct TrainArgs {
  std::string corpus, validation, checkpoint, log, config, vocab;
  EmbeddingFlags emb;
  std::uint64_t seed = 1;
  std::optional<int> epochs, batch_size, patience;
  bool no_single = false, no_pairwise = false, no_topic_loss = false, no_seg_loss = false;
};

struct ResolvedTraining {
  ModelConfig model;
  TrainConfig train;
};

ResolvedTraining resolve_training(const std::string& config_path, std::uint64_t seed, std::optional<int> epochs,
                                  std::optional<int> batch_size, std::optional<int> patience) {
  ResolvedTraining r;
  if (!config_path.empty()) {
    const json j = read_json_file(config_path);
    for (auto it = j.begin(); it != j.end(); ++it) {
      if (it.key() == "model") r.model = model_config_from_json(*it, r.model);
      else if (it.key() == "train") r.train = train_config_from_json(*it, r.train);
      else throw ConfigError(config_path + ": unknown section '" + it.key() + "'");
    }
  }
  r.train.seed = seed;
  if (epochs) r.train.max_epochs = *epochs;
  if (batch_size) r.train.batch_size = *batch_size;
  if (patience) r.train.patience = *patience;
  r.train.validate();
  return r;
}

int cmd_train(const TrainArgs& a) {
  auto cfg = resolve_training(a.config, a.seed, a.epochs, a.batch_size, a.patience);
  cfg.model.use_topic_loss = cfg.model.use_topic_loss && !a.no_topic_loss;
  cfg.model.use_seg_loss = cfg.model.use_seg_loss && !a.no_seg_loss;
  const Providers providers = resolve_providers(a.emb, !a.no_single, !a.no_pairwise, a.seed);

  std::optional<TopicVocabulary> vocab;
  if (!a.vocab.empty()) vocab = dataio::load_vocabulary(a.vocab);
  auto docs = dataio::load_corpus(a.corpus);
  std::vector<Document> train_docs, val_docs;
  if (!a.validation.empty()) {
    train_docs = std::move(docs);
    val_docs = dataio::load_corpus(a.validation);
  } else {
    auto split = dataio::split_corpus(std::move(docs), kSplitRatios, a.seed);
    train_docs = std::move(split.train);
    val_docs = std::move(split.validation);
  }
  std::vector<Document> all = train_docs;
  all.insert(all.end(), val_docs.begin(), val_docs.end());
  cfg.model.num_topics = num_topics_for(all, vocab);
  const EmbeddingLayout layout = layout_of(providers.single_ptr(), providers.pairwise_ptr());
  cfg.model.d_in = layout.width();
  cfg.model.validate();

  const auto cap = static_cast<std::size_t>(cfg.model.max_len);
  const auto train_prep = prepare_documents(train_docs, providers.single_ptr(), providers.pairwise_ptr(), cap);
  const auto val_prep = prepare_documents(val_docs, providers.single_ptr(), providers.pairwise_ptr(), cap);

  std::string log_text;
  TrainHooks hooks;
  hooks.on_epoch = [&](const EpochRecord& r) {
    log_text += r.to_json().dump() + "\n";
    std::cerr << "epoch " << r.epoch << "  loss " << r.train_loss << "  val Pk " << pct(r.val_pk) << "%  ("
              << r.seconds << " s)\n";
  };
  const TrainResult result = train(train_prep, val_prep, cfg.model, cfg.train, hooks);

  Checkpoint ckpt;
  ckpt.config = cfg.model;
  ckpt.vocab = vocab ? *vocab : TopicVocabulary{};
  if (!vocab) {
    for (int k = 0; k < cfg.model.num_topics; ++k) ckpt.vocab.add("topic_" + std::to_string(k));
  }
  ckpt.layout = layout;
  ckpt.params = result.best_params;
  ckpt.training = json{{"train", to_json(cfg.train)},
                       {"embeddings", providers.description},
                       {"corpus", a.corpus},
                       {"best_epoch", result.best_epoch},
                       {"best_val_pk", result.best_val_pk}};
  save_checkpoint(ckpt, a.checkpoint);
  if (!a.log.empty()) io::write_file_atomic(a.log, log_text);
  std::cerr << "best epoch " << result.best_epoch << ", validation Pk " << pct(result.best_val_pk) << "%\n";
  return kOk;
}

// Providers matching the checkpoint's column layout.
Providers providers_for(const Checkpoint& ckpt, const EmbeddingFlags& flags) {
  std::uint64_t seed = 1;
  if (ckpt.training.contains("embeddings") && ckpt.training["embeddings"].contains("seed")) {
    seed = ckpt.training["embeddings"]["seed"].get<std::uint64_t>();
  }
  Providers p = resolve_providers(flags, ckpt.layout.single_dim > 0, ckpt.layout.pairwise_dim > 0, seed);
  const EmbeddingLayout got = layout_of(p.single_ptr(), p.pairwise_ptr());
  if (got.single_dim != ckpt.layout.single_dim || got.pairwise_dim != ckpt.layout.pairwise_dim) {
    throw DimensionError("embedding widths single=" + std::to_string(got.single_dim) + " pairwise=" +
                         std::to_string(got.pairwise_dim) + " do not match checkpoint single=" +
                         std::to_string(ckpt.layout.single_dim) + " pairwise=" +
                         std::to_string(ckpt.layout.pairwise_dim));
  }
  return p;
}

struct EvalArgs {
  std::string checkpoint, corpus, output, split = "all";
  EmbeddingFlags emb;
  std::uint64_t seed = 1;
  std::optional<double> threshold;
};

int cmd_eval(const EvalArgs& a) {
  const Checkpoint ckpt = load_checkpoint(a.checkpoint);
  const Providers providers = providers_for(ckpt, a.emb);
  auto docs = dataio::load_corpus(a.corpus);
  if (a.split != "all") {
    auto split = dataio::split_corpus(std::move(docs), kSplitRatios, a.seed);
    docs = a.split == "train" ? std::move(split.train)
           : a.split == "validation" ? std::move(split.validation)
                                     : std::move(split.test);
  }
  const auto prepared = prepare_documents(docs, providers.single_ptr(), providers.pairwise_ptr(),
                                          static_cast<std::size_t>(ckpt.config.max_len));
  const EvalReport report = evaluate_model(ckpt.params, ckpt.config, prepared, ckpt.vocab.oov_id(), a.threshold);
  json j = report.to_json();
  j["config"] = json{{"model", to_json(ckpt.config)},
                     {"embedding_layout", to_json(ckpt.layout)},
                     {"embeddings", providers.description},
                     {"checkpoint", a.checkpoint},
                     {"corpus", a.corpus},
                     {"split", a.split},
                     {"seed", a.seed},
                     {"threshold", a.threshold.value_or(ckpt.config.boundary_threshold)},
                     {"decode", ckpt.config.use_seg_loss ? "threshold" : "topic-change"}};
  if (a.output.empty()) {
    std::cout << j.dump(2) << "\n";
  } else {
    io::write_file_atomic(a.output, j.dump(2) + "\n");
  }
  std::cerr << "Pk " << pct(report.corpus_pk) << "%  topic accuracy " << pct(report.topic_accuracy) << "%  over "
            << report.docs.size() << " documents\n";
  return kOk;
}

struct PredictArgs {
  std::string checkpoint, corpus, doc_id, csv, plot;
  EmbeddingFlags emb;
  std::optional<double> threshold;
};

int cmd_predict(const PredictArgs& a) {
  const Checkpoint ckpt = load_checkpoint(a.checkpoint);
  const Providers providers = providers_for(ckpt, a.emb);
  const auto docs = dataio::load_corpus(a.corpus);
  auto it = std::find_if(docs.begin(), docs.end(), [&](const Document& d) { return d.id == a.doc_id; });
  if (it == docs.end()) throw DataError(a.corpus + ": no document with id '" + a.doc_id + "'");
  const auto full = compose_document_matrix(*it, providers.single_ptr(), providers.pairwise_ptr(), it->size());
  // Documents longer than max_len are scored in consecutive windows.
  std::vector<Matrix<float>> windows;
  const Index cap = ckpt.config.max_len;
  for (Index start = 0; start < full.rows(); start += cap) {
    windows.push_back(full.values.middleRows(start, std::min(cap, full.rows() - start)));
  }
  const auto preds = predict(ckpt.params, ckpt.config, std::span<const Matrix<float>>(windows), a.threshold);
  std::vector<double> seg_prob;
  std::vector<int> topics;
  for (const auto& p : preds) {
    seg_prob.insert(seg_prob.end(), p.seg_prob.begin(), p.seg_prob.end());
    topics.insert(topics.end(), p.topics.begin(), p.topics.end());
  }
  std::string csv = "index,seg_prob,gold_boundary,predicted_topic\n";
  char buf[64];
  for (std::size_t i = 0; i < seg_prob.size(); ++i) {
    std::snprintf(buf, sizeof buf, "%zu,%.6f,%d,", i, seg_prob[i], it->boundaries[i]);
    csv += buf;
    const int t = topics[i];
    csv += csv_field(t < ckpt.vocab.size() ? ckpt.vocab.label(t) : std::to_string(t)) + "\n";
  }
  if (a.csv.empty()) {
    std::cout << csv;
  } else {
    io::write_file_atomic(a.csv, csv);
  }
  if (!a.plot.empty()) {
    io::write_file_atomic(a.plot, boundary_plot_svg(seg_prob, it->boundaries, "Boundary probabilities: " + a.doc_id));
  }
  return kOk;
}

struct AblateArgs {
  std::string corpus, output, config, vocab;
  EmbeddingFlags emb;
  std::uint64_t seed = 1;
  std::optional<int> epochs, batch_size, patience;
};

int cmd_ablate(const AblateArgs& a) {
  auto cfg = resolve_training(a.config, a.seed, a.epochs, a.batch_size, a.patience);
  const Providers providers = resolve_providers(a.emb, true, true, a.seed);
  if (!providers.single || !providers.pairwise) {
    throw ConfigError("ablate needs both single and pairwise embeddings");
  }
  std::optional<TopicVocabulary> vocab;
  if (!a.vocab.empty()) vocab = dataio::load_vocabulary(a.vocab);
  auto docs = dataio::load_corpus(a.corpus);
  cfg.model.num_topics = num_topics_for(docs, vocab);
  auto split = dataio::split_corpus(std::move(docs), kSplitRatios, a.seed);
  const auto rows = run_ablation(split, *providers.single, *providers.pairwise, cfg.model, cfg.train,
                                 vocab ? vocab->oov_id() : std::nullopt,
                                 [](const AblationVariant& v, const EpochRecord& r) {
                                   std::cerr << v.key << " epoch " << r.epoch << "  val Pk " << pct(r.val_pk)
                                             << "%\n";
                                 });
  const std::string md = ablation_markdown(rows, fs::path(a.corpus).filename().string());
  if (a.output.empty()) {
    std::cout << md;
  } else {
    io::write_file_atomic(a.output, md);
  }
  return kOk;
}

}  // namespace

int run(const std::vector<std::string>& args) {
  CLI::App app{"Two-level neural text segmentation toolkit", "t2seg"};
  app.require_subcommand(1);

  ImportArgs imp;
  auto* c_import = app.add_subcommand("import-wikisection", "Convert a WikiSection JSON file to corpus JSONL");
  c_import->add_option("--input", imp.input, "WikiSection JSON file")->required()->check(CLI::ExistingFile);
  c_import->add_option("--output", imp.output, "Corpus JSONL to write")->required();
  c_import->add_option("--vocab", imp.vocab, "Topic vocabulary JSON: reused if it exists, written otherwise");
  c_import->add_option("--skip-label", imp.skip_labels, "Drop sections with this label (repeatable)");
  c_import->add_option("--min-segments", imp.min_segments, "Drop documents with fewer segments")
      ->check(CLI::PositiveNumber);

  SynthArgs syn;
  auto* c_synth = app.add_subcommand("synth", "Generate a synthetic corpus with matching embedding stores");
  c_synth->add_option("--output", syn.output, "Corpus JSONL to write")->required();
  c_synth->add_option("--single-embeddings", syn.single_path, "Single-sentence T2EMB to write");
  c_synth->add_option("--pairwise-embeddings", syn.pairwise_path, "Pairwise T2EMB to write");
  c_synth->add_option("--vocab", syn.vocab, "Topic vocabulary JSON to write");
  c_synth->add_option("--config", syn.config, "JSON generator options")->check(CLI::ExistingFile);
  c_synth->add_option("--seed", syn.seed, "Random seed");

  EmbedArgs emb;
  auto* c_embed = app.add_subcommand("embed", "Write a T2EMB store for a corpus");
  c_embed->add_option("--corpus", emb.corpus, "Corpus JSONL")->required()->check(CLI::ExistingFile);
  c_embed->add_option("--output", emb.output, "T2EMB file to write")->required();
  c_embed->add_option("--provider", emb.provider, "hash or file")->check(CLI::IsMember({"file", "hash"}));
  c_embed->add_option("--kind", emb.kind, "single or pairwise")->check(CLI::IsMember({"single", "pairwise"}));
  c_embed->add_option("--input", emb.input, "Source T2EMB for --provider file")->check(CLI::ExistingFile);
  c_embed->add_option("--dim", emb.dim, "Hash encoder width")->check(CLI::Range(8, 1 << 20));
  c_embed->add_option("--seed", emb.seed, "Hash key");

  TrainArgs tr;
  auto* c_train = app.add_subcommand("train", "Train the segmentation model");
  c_train->add_option("--corpus", tr.corpus, "Corpus JSONL (split 80/10/10 unless --validation)")
      ->required()
      ->check(CLI::ExistingFile);
  c_train->add_option("--validation", tr.validation, "Separate validation corpus JSONL")->check(CLI::ExistingFile);
  c_train->add_option("--checkpoint", tr.checkpoint, "Checkpoint to write")->required();
  c_train->add_option("--output", tr.log, "JSON-lines training log to write");
  c_train->add_option("--config", tr.config, "JSON with \"model\" and \"train\" overrides")->check(CLI::ExistingFile);
  c_train->add_option("--vocab", tr.vocab, "Topic vocabulary JSON")->check(CLI::ExistingFile);
  c_train->add_option("--seed", tr.seed, "Seed for split, init, masks and dropout");
  c_train->add_option("--epochs", tr.epochs, "Maximum epochs")->check(CLI::PositiveNumber);
  c_train->add_option("--batch-size", tr.batch_size, "Documents per batch")->check(CLI::PositiveNumber);
  c_train->add_option("--patience", tr.patience, "Early-stopping patience")->check(CLI::PositiveNumber);
  c_train->add_flag("--no-single", tr.no_single, "Drop single-sentence embeddings");
  c_train->add_flag("--no-pairwise", tr.no_pairwise, "Drop pairwise embeddings");
  c_train->add_flag("--no-topic-loss", tr.no_topic_loss, "Train without the topic loss");
  c_train->add_flag("--no-seg-loss", tr.no_seg_loss, "Train without the segmentation loss");
  add_embedding_flags(c_train, tr.emb);

  EvalArgs ev;
  auto* c_eval = app.add_subcommand("eval", "Evaluate a checkpoint and write a JSON report");
  c_eval->add_option("--checkpoint", ev.checkpoint, "Checkpoint")->required()->check(CLI::ExistingFile);
  c_eval->add_option("--corpus", ev.corpus, "Corpus JSONL")->required()->check(CLI::ExistingFile);
  c_eval->add_option("--output", ev.output, "Report JSON (stdout when omitted)");
  c_eval->add_option("--split", ev.split, "all, train, validation or test")
      ->check(CLI::IsMember({"all", "train", "validation", "test"}));
  c_eval->add_option("--seed", ev.seed, "Seed used for the split");
  c_eval->add_option("--threshold", ev.threshold, "Boundary probability threshold");
  add_embedding_flags(c_eval, ev.emb);

  PredictArgs pr;
  auto* c_predict = app.add_subcommand("predict", "Per-sentence predictions for one document");
  c_predict->add_option("--checkpoint", pr.checkpoint, "Checkpoint")->required()->check(CLI::ExistingFile);
  c_predict->add_option("--corpus", pr.corpus, "Corpus JSONL")->required()->check(CLI::ExistingFile);
  c_predict->add_option("--doc-id", pr.doc_id, "Document id")->required();
  c_predict->add_option("--csv", pr.csv, "CSV to write (stdout when omitted)");
  c_predict->add_option("--plot", pr.plot, "SVG plot to write");
  c_predict->add_option("--threshold", pr.threshold, "Boundary probability threshold");
  add_embedding_flags(c_predict, pr.emb);

  AblateArgs ab;
  auto* c_ablate = app.add_subcommand("ablate", "Run the component ablation grid and print a Markdown table");
  c_ablate->add_option("--corpus", ab.corpus, "Corpus JSONL")->required()->check(CLI::ExistingFile);
  c_ablate->add_option("--output", ab.output, "Markdown file (stdout when omitted)");
  c_ablate->add_option("--config", ab.config, "JSON with \"model\" and \"train\" overrides")->check(CLI::ExistingFile);
  c_ablate->add_option("--vocab", ab.vocab, "Topic vocabulary JSON")->check(CLI::ExistingFile);
  c_ablate->add_option("--seed", ab.seed, "Seed");
  c_ablate->add_option("--epochs", ab.epochs, "Maximum epochs")->check(CLI::PositiveNumber);
  c_ablate->add_option("--batch-size", ab.batch_size, "Documents per batch")->check(CLI::PositiveNumber);
  c_ablate->add_option("--patience", ab.patience, "Early-stopping patience")->check(CLI::PositiveNumber);
  add_embedding_flags(c_ablate, ab.emb);

  try {
    std::vector<std::string> rev(args.rbegin(), args.rend() - (args.empty() ? 0 : 1));
    app.parse(rev);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kOk : kUsage;
  }

  try {
    if (*c_import) return cmd_import(imp);
    if (*c_synth) return cmd_synth(syn);
    if (*c_embed) return cmd_embed(emb);
    if (*c_train) return cmd_train(tr);
    if (*c_eval) return cmd_eval(ev);
    if (*c_predict) return cmd_predict(pr);
    if (*c_ablate) return cmd_ablate(ab);
  } catch (const ConfigError& e) {
    std::cerr << "t2seg: " << e.what() << "\n";
    return kUsage;
  } catch (const TrainingError& e) {
    std::cerr << "t2seg: training diverged: " << e.what() << "\n";
    return kDiverged;
  } catch (const Error& e) {
    std::cerr << "t2seg: " << e.what() << "\n";
    return kDataError;
  } catch (const nlohmann::json::exception& e) {
    std::cerr << "t2seg: " << e.what() << "\n";
    return kDataError;
  }
  return kUsage;
}

}  // namespace t2seg::cli
