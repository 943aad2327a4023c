#include "rankae/cli.hpp"

#include <algorithm>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>

#include "CLI11.hpp"
#include "rankae/checkpoint.hpp"
#include "rankae/config.hpp"
#include "rankae/dataset.hpp"
#include "rankae/metrics.hpp"
#include "rankae/model.hpp"
#include "rankae/noise.hpp"
#include "rankae/parallel.hpp"

namespace rankae::cli {

namespace {

struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct CapabilityError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

void require_file(const std::string& path, const char* what) {
  if (path.empty()) throw UsageError(std::string("missing ") + what + " path");
  if (!std::filesystem::exists(path))
    throw UsageError(std::string(what) + " file not found: " + path);
}

int resolve_threads(int flag_value) {
  if (flag_value > 0) return flag_value;
  if (const char* env = std::getenv("RANK_AE_THREADS")) {
    const int n = std::atoi(env);
    if (n > 0) return n;
  }
  return ThreadPool::resolve_threads(0);
}

std::string format_value(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

/// Atomic-ish text output: write next to the target, rename into place.
void write_text_file(const std::string& path, const std::string& content) {
  const std::string tmp = path + ".tmp";
  {
    std::ofstream out(tmp);
    if (!out) throw std::runtime_error("cannot open output file: " + tmp);
    out << content;
    if (!out.flush()) throw std::runtime_error("write failed: " + tmp);
  }
  std::filesystem::rename(tmp, path);
}

std::string metrics_csv(const MetricsReport& report) {
  std::string csv = "metric,k,value\n";
  for (std::size_t i = 0; i < report.ks.size(); ++i)
    csv += "P@k," + std::to_string(report.ks[i]) + "," +
           format_value(report.p_at_k[i]) + "\n";
  for (std::size_t i = 0; i < report.ks.size(); ++i)
    csv += "nDCG@k," + std::to_string(report.ks[i]) + "," +
           format_value(report.ndcg_at_k[i]) + "\n";
  return csv;
}

void print_metrics_table(std::ostream& out, const MetricsReport& report) {
  char buf[64];
  out << "metric    k    value\n";
  for (std::size_t i = 0; i < report.ks.size(); ++i) {
    std::snprintf(buf, sizeof(buf), "P@k     %3d    %.4f\n", report.ks[i],
                  report.p_at_k[i]);
    out << buf;
  }
  for (std::size_t i = 0; i < report.ks.size(); ++i) {
    std::snprintf(buf, sizeof(buf), "nDCG@k  %3d    %.4f\n", report.ks[i],
                  report.ndcg_at_k[i]);
    out << buf;
  }
}

/// Feature-only input for predict/attention: one instance per line,
/// "f:v f:v ...". Accepts a full dataset file too (detected by its header),
/// in which case labels are ignored.
std::vector<SparseVector> read_feature_lines(const std::string& path,
                                             int num_features, bool one_based) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open input file: " + path);

  std::string first;
  if (!std::getline(in, first)) return {};
  {
    std::istringstream probe(first);
    long n, v, l;
    std::string rest;
    if (probe >> n >> v >> l && !(probe >> rest)) {
      in.close();
      Dataset d = read_xmc_file(path, {.one_based = one_based});
      if (d.num_features != num_features)
        throw std::runtime_error("input declares V=" +
                                 std::to_string(d.num_features) +
                                 " but the model expects V=" +
                                 std::to_string(num_features));
      std::vector<SparseVector> rows;
      rows.reserve(d.instances.size());
      for (auto& inst : d.instances) rows.push_back(std::move(inst.features));
      return rows;
    }
  }

  // Plain feature lines: reuse the dataset parser through a synthetic
  // header and a leading space (empty label list) per line.
  std::ostringstream text;
  std::vector<std::string> lines;
  lines.push_back(first);
  std::string line;
  while (std::getline(in, line)) lines.push_back(line);
  text << lines.size() << ' ' << num_features << " 1\n";
  for (const auto& l : lines) text << ' ' << l << '\n';
  std::istringstream wrapped(text.str());
  Dataset d;
  try {
    d = read_xmc(wrapped, {.one_based = one_based});
  } catch (const std::runtime_error& e) {
    throw std::runtime_error(path + ": " + e.what());
  }
  std::vector<SparseVector> rows;
  rows.reserve(d.instances.size());
  for (auto& inst : d.instances) rows.push_back(std::move(inst.features));
  return rows;
}

struct TrainArgs {
  RunConfig run;
  std::string config_path;
  std::string out_path = "model.ckpt";
  std::string report_path = "report.csv";
};

void add_model_flags(CLI::App* cmd, RunConfig& run) {
  cmd->add_option("--embed-dim", run.model.embed_dim, "word embedding size C");
  cmd->add_option("--latent-dim", run.model.latent_dim, "common latent size h");
  cmd->add_option("--reduction", run.model.reduction, "attention reduction ratio r");
  cmd->add_option("--hidden-dim", run.model.hidden_dim,
                  "encoder/decoder hidden width g (0 = 2h)");
  cmd->add_option("--lambda", run.model.lambda, "ranking loss weight");
  cmd->add_option("--margin", run.model.margin, "ranking margin m in [0,1]");
  cmd->add_option("--loss", [&run](const std::vector<std::string>& v) {
        run.model.loss = loss_kind_from_name(v.back());
        return true;
      },
      "loss kind: rank or bce")->expected(1);
  cmd->add_option("--epochs", run.model.epochs, "training epochs");
  cmd->add_option("--batch-size", run.model.batch_size, "minibatch size");
  cmd->add_option("--seed", run.model.seed, "RNG seed");
  cmd->add_option("--lr", run.model.lr, "Adam learning rate");
  cmd->add_option("--weight-decay", run.model.weight_decay,
                  "decoupled weight decay");
  cmd->add_flag("--no-attention", run.model.no_attention,
                "bypass channel attention (pool weighted embeddings directly)");
  cmd->add_flag("--deterministic", run.model.deterministic,
                "fixed-order reductions for reproducible runs");
}

int cmd_train(const TrainArgs& args_in) {
  TrainArgs args = args_in;
  RunConfig& run = args.run;

  require_file(run.train_path, "training data");
  if (!run.valid_path.empty()) require_file(run.valid_path, "validation data");
  if (!run.vocab_path.empty()) require_file(run.vocab_path, "vocabulary");
  if (!run.embeddings_path.empty())
    require_file(run.embeddings_path, "embeddings");
  if (run.valid_fraction <= 0.0 || run.valid_fraction >= 1.0)
    throw UsageError("valid fraction must be in (0,1)");
  if (!run.embeddings_path.empty() && run.vocab_path.empty())
    throw UsageError(
        "pretrained embeddings require a vocabulary file (--vocab)");

  const ParseOptions popts{.one_based = run.one_based};
  Dataset full = read_xmc_file(run.train_path, popts);
  if (run.tfidf) full = counts_to_tfidf(full);

  Dataset train_set, valid_set;
  if (!run.valid_path.empty()) {
    train_set = std::move(full);
    valid_set = read_xmc_file(run.valid_path, popts);
    if (run.tfidf) valid_set = counts_to_tfidf(valid_set);
    if (valid_set.num_features != train_set.num_features ||
        valid_set.num_labels != train_set.num_labels)
      throw std::runtime_error("validation dimensions do not match training data");
  } else {
    std::tie(train_set, valid_set) =
        split_dataset(full, 1.0 - run.valid_fraction, run.model.seed);
  }

  ModelConfig cfg = run.model;
  cfg.num_features = train_set.num_features;
  cfg.num_labels = train_set.num_labels;
  cfg.validate();

  std::optional<EmbeddingTable> pretrained;
  if (!run.embeddings_path.empty()) {
    const std::vector<std::string> vocab = read_vocab_file(run.vocab_path);
    if (int(vocab.size()) != cfg.num_features)
      throw std::runtime_error("vocabulary has " + std::to_string(vocab.size()) +
                               " tokens, dataset has V=" +
                               std::to_string(cfg.num_features));
    std::ifstream in(run.embeddings_path);
    if (!in)
      throw std::runtime_error("cannot open embeddings: " + run.embeddings_path);
    Rng rng(cfg.seed);
    EmbeddingLoadResult loaded =
        load_word_embeddings(in, vocab, cfg.embed_dim, rng);
    std::cout << "pretrained embeddings: " << loaded.found << "/" << vocab.size()
              << " tokens covered\n";
    pretrained = std::move(loaded.table);
  }

  ThreadPool pool(resolve_threads(run.threads));
  auto [params, report] =
      train<float>(train_set, valid_set, cfg, pool,
                   pretrained ? &*pretrained : nullptr, &std::cout);

  save_checkpoint(args.out_path, params);
  std::ostringstream csv;
  write_train_report_csv(csv, report);
  write_text_file(args.report_path, csv.str());
  std::cout << "best epoch " << report.best_epoch << " (val P@1 "
            << report.best_val_p1 << "); checkpoint written to " << args.out_path
            << "\n";
  return kOk;
}

struct EvaluateArgs {
  std::string model_path;
  std::string data_path;
  std::string csv_path;
  std::vector<int> ks;
  bool one_based = false;
  bool tfidf = false;
  int threads = 0;
};

int cmd_evaluate(const EvaluateArgs& args) {
  require_file(args.model_path, "model");
  require_file(args.data_path, "test data");

  ModelParams<float> params = load_checkpoint(args.model_path);
  Dataset test = read_xmc_file(args.data_path, {.one_based = args.one_based});
  if (args.tfidf) test = counts_to_tfidf(test);
  if (test.num_features != params.cfg.num_features ||
      test.num_labels != params.cfg.num_labels)
    throw std::runtime_error(
        "test set dimensions (V=" + std::to_string(test.num_features) +
        ", L=" + std::to_string(test.num_labels) + ") do not match model (V=" +
        std::to_string(params.cfg.num_features) +
        ", L=" + std::to_string(params.cfg.num_labels) + ")");

  std::vector<int> ks = args.ks.empty() ? std::vector<int>{1, 3, 5} : args.ks;
  for (int k : ks)
    if (k < 1 || k > params.cfg.num_labels)
      throw std::runtime_error("k=" + std::to_string(k) + " out of range");

  ThreadPool pool(resolve_threads(args.threads));
  MetricsReport report = evaluate(params, test, ks, pool);
  print_metrics_table(std::cout, report);
  if (!args.csv_path.empty()) write_text_file(args.csv_path, metrics_csv(report));
  return kOk;
}

struct PredictArgs {
  std::string model_path;
  std::string input_path;
  std::string out_path;
  int k = 5;
  bool one_based = false;
};

int cmd_predict(const PredictArgs& args) {
  require_file(args.model_path, "model");
  require_file(args.input_path, "input");
  if (args.k < 1) throw UsageError("k must be >= 1");

  ModelParams<float> params = load_checkpoint(args.model_path);
  if (args.k > params.cfg.num_labels)
    throw std::runtime_error("k exceeds the number of labels (" +
                             std::to_string(params.cfg.num_labels) + ")");
  std::vector<SparseVector> rows =
      read_feature_lines(args.input_path, params.cfg.num_features, args.one_based);

  std::ostringstream out;
  char buf[48];
  for (const SparseVector& x : rows) {
    auto top = predict(x, params, args.k);
    for (std::size_t i = 0; i < top.size(); ++i) {
      std::snprintf(buf, sizeof(buf), "%s%d:%.6g", i ? " " : "", top[i].first,
                    double(top[i].second));
      out << buf;
    }
    out << '\n';
  }
  if (args.out_path.empty())
    std::cout << out.str();
  else
    write_text_file(args.out_path, out.str());
  return kOk;
}

struct PerturbArgs {
  std::string data_path;
  std::string out_path;
  std::string valid_out_path;
  std::string mode = "missing";
  double rate = 0.0;
  double valid_fraction = 0.2;
  std::uint64_t seed = 0;
  bool one_based = false;
};

int cmd_perturb(const PerturbArgs& args) {
  require_file(args.data_path, "input data");
  if (args.out_path.empty()) throw UsageError("missing --out path");
  NoiseSpec spec;
  if (args.mode == "missing")
    spec.mode = NoiseMode::missing;
  else if (args.mode == "flip")
    spec.mode = NoiseMode::flip;
  else
    throw UsageError("mode must be 'missing' or 'flip'");
  if (args.rate < 0.0 || args.rate > 1.0)
    throw UsageError("rate must be in [0,1]");
  spec.rate = args.rate;
  spec.seed = args.seed;

  Dataset full = read_xmc_file(args.data_path, {.one_based = args.one_based});

  NoiseStats stats;
  if (!args.valid_out_path.empty()) {
    // Corrupt only the training portion; the held-out part stays clean.
    if (args.valid_fraction <= 0.0 || args.valid_fraction >= 1.0)
      throw UsageError("valid fraction must be in (0,1)");
    auto [train_part, valid_part] =
        split_dataset(full, 1.0 - args.valid_fraction, args.seed);
    Dataset corrupted = inject_noise(train_part, spec, &stats);
    {
      std::ostringstream text;
      write_xmc(text, corrupted);
      write_text_file(args.out_path, text.str());
    }
    {
      std::ostringstream text;
      write_xmc(text, valid_part);
      write_text_file(args.valid_out_path, text.str());
    }
    std::cout << "corrupted " << corrupted.num_instances() << " instances ("
              << valid_part.num_instances() << " clean validation): removed "
              << stats.removed << " labels, added " << stats.added << "\n";
  } else {
    Dataset corrupted = inject_noise(full, spec, &stats);
    std::ostringstream text;
    write_xmc(text, corrupted);
    write_text_file(args.out_path, text.str());
    std::cout << "corrupted " << corrupted.num_instances()
              << " instances: removed " << stats.removed << " labels, added "
              << stats.added << "\n";
  }
  return kOk;
}

struct AttentionArgs {
  std::string model_path;
  std::string input_path;
  std::string vocab_path;
  std::string out_path;
  int top = 10;
  bool one_based = false;
};

int cmd_attention(const AttentionArgs& args) {
  require_file(args.model_path, "model");
  require_file(args.input_path, "input");
  if (!args.vocab_path.empty()) require_file(args.vocab_path, "vocabulary");
  if (args.top < 1) throw UsageError("--top must be >= 1");

  ModelParams<float> params = load_checkpoint(args.model_path);
  if (params.cfg.no_attention)
    throw CapabilityError(
        "this checkpoint was trained with --no-attention; it has no channel "
        "attention to export");

  std::vector<std::string> vocab;
  if (!args.vocab_path.empty()) {
    vocab = read_vocab_file(args.vocab_path);
    if (int(vocab.size()) != params.cfg.num_features)
      throw std::runtime_error("vocabulary has " + std::to_string(vocab.size()) +
                               " tokens, model has V=" +
                               std::to_string(params.cfg.num_features));
  }

  std::vector<SparseVector> rows =
      read_feature_lines(args.input_path, params.cfg.num_features, args.one_based);

  std::ostringstream out;
  out << "instance_id,feature_index,token,mass\n";
  AttentionWorkspace<float> ws;
  char buf[64];
  for (std::size_t i = 0; i < rows.size(); ++i) {
    spatial_weight(rows[i], params.embedding, ws);
    channel_attention(ws, params.attention);
    auto mass = attention_mass(ws);
    const int limit = std::min<int>(args.top, int(mass.size()));
    for (int j = 0; j < limit; ++j) {
      std::snprintf(buf, sizeof(buf), "%.17g", mass[j].second);
      out << i << ',' << mass[j].first << ','
          << (vocab.empty() ? "" : vocab[mass[j].first]) << ',' << buf << '\n';
    }
  }
  if (args.out_path.empty())
    std::cout << out.str();
  else
    write_text_file(args.out_path, out.str());
  return kOk;
}

}  // namespace

int run(const std::vector<std::string>& args) {
  CLI::App app{"Rank-AE: ranking-based autoencoder for extreme multi-label "
               "classification",
               "rank-ae"};
  app.require_subcommand(1);

  TrainArgs train_args;
  auto* train_cmd = app.add_subcommand("train", "train a model");
  train_cmd->add_option("--data", train_args.run.train_path, "training set");
  train_cmd->add_option("--config", train_args.config_path, "run config file");
  train_cmd->add_option("--valid", train_args.run.valid_path,
                        "explicit validation set (default: split from --data)");
  train_cmd->add_option("--valid-fraction", train_args.run.valid_fraction,
                        "validation share when splitting");
  train_cmd->add_option("--vocab", train_args.run.vocab_path,
                        "vocabulary file (token per line)");
  train_cmd->add_option("--embeddings", train_args.run.embeddings_path,
                        "pretrained word embeddings");
  train_cmd->add_option("--out", train_args.out_path, "checkpoint output path");
  train_cmd->add_option("--report", train_args.report_path,
                        "training report CSV path");
  train_cmd->add_flag("--tfidf", train_args.run.tfidf,
                      "reweight raw counts as tf-idf");
  train_cmd->add_flag("--one-based", train_args.run.one_based,
                      "input uses 1-based indices");
  train_cmd->add_option("--threads", train_args.run.threads,
                        "worker threads (default: all cores)");
  add_model_flags(train_cmd, train_args.run);

  EvaluateArgs eval_args;
  auto* eval_cmd = app.add_subcommand("evaluate", "report P@k and nDCG@k");
  eval_cmd->add_option("--model", eval_args.model_path, "checkpoint");
  eval_cmd->add_option("--data", eval_args.data_path, "test set");
  eval_cmd->add_option("--k", eval_args.ks, "cutoffs (default 1 3 5)");
  eval_cmd->add_option("--csv", eval_args.csv_path, "also write metric,k,value CSV");
  eval_cmd->add_flag("--one-based", eval_args.one_based,
                     "input uses 1-based indices");
  eval_cmd->add_flag("--tfidf", eval_args.tfidf, "reweight raw counts as tf-idf");
  eval_cmd->add_option("--threads", eval_args.threads, "worker threads");

  PredictArgs predict_args;
  auto* predict_cmd = app.add_subcommand("predict", "top-k labels per input line");
  predict_cmd->add_option("--model", predict_args.model_path, "checkpoint");
  predict_cmd->add_option("--input", predict_args.input_path,
                          "feature lines (f:v pairs) or a dataset file");
  predict_cmd->add_option("--k", predict_args.k, "labels per instance");
  predict_cmd->add_option("--out", predict_args.out_path,
                          "output path (default stdout)");
  predict_cmd->add_flag("--one-based", predict_args.one_based,
                        "input uses 1-based indices");

  PerturbArgs perturb_args;
  auto* perturb_cmd =
      app.add_subcommand("perturb", "write a label-corrupted copy of a dataset");
  perturb_cmd->add_option("--data", perturb_args.data_path, "input dataset");
  perturb_cmd->add_option("--mode", perturb_args.mode, "missing or flip");
  perturb_cmd->add_option("--rate", perturb_args.rate, "corruption rate in [0,1]");
  perturb_cmd->add_option("--seed", perturb_args.seed, "RNG seed");
  perturb_cmd->add_option("--out", perturb_args.out_path, "corrupted output path");
  perturb_cmd->add_option(
      "--valid-out", perturb_args.valid_out_path,
      "also split off a clean validation set to this path before corrupting");
  perturb_cmd->add_option("--valid-fraction", perturb_args.valid_fraction,
                          "validation share for --valid-out");
  perturb_cmd->add_flag("--one-based", perturb_args.one_based,
                        "input uses 1-based indices");

  AttentionArgs attention_args;
  auto* attention_cmd =
      app.add_subcommand("attention", "export per-feature attention mass");
  attention_cmd->add_option("--model", attention_args.model_path, "checkpoint");
  attention_cmd->add_option("--input", attention_args.input_path,
                            "feature lines or a dataset file");
  attention_cmd->add_option("--vocab", attention_args.vocab_path,
                            "vocabulary for the token column");
  attention_cmd->add_option("--top", attention_args.top,
                            "features per instance (default 10)");
  attention_cmd->add_option("--out", attention_args.out_path,
                            "output path (default stdout)");
  attention_cmd->add_flag("--one-based", attention_args.one_based,
                          "input uses 1-based indices");

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kUsage;
  }

  try {
    if (train_cmd->parsed()) {
      // The config file fills defaults; flags given on the command line win.
      if (!train_args.config_path.empty()) {
        require_file(train_args.config_path, "config");
        RunConfig from_file;
        try {
          apply_config_file_path(train_args.config_path, from_file);
        } catch (const std::runtime_error& e) {
          throw UsageError(e.what());
        }
        RunConfig merged = from_file;
        auto keep = [&](const std::string& flag) {
          return train_cmd->count(flag) > 0;
        };
        const RunConfig& cli = train_args.run;
        if (keep("--data")) merged.train_path = cli.train_path;
        if (keep("--valid")) merged.valid_path = cli.valid_path;
        if (keep("--valid-fraction")) merged.valid_fraction = cli.valid_fraction;
        if (keep("--vocab")) merged.vocab_path = cli.vocab_path;
        if (keep("--embeddings")) merged.embeddings_path = cli.embeddings_path;
        if (keep("--tfidf")) merged.tfidf = cli.tfidf;
        if (keep("--one-based")) merged.one_based = cli.one_based;
        if (keep("--threads")) merged.threads = cli.threads;
        if (keep("--embed-dim")) merged.model.embed_dim = cli.model.embed_dim;
        if (keep("--latent-dim")) merged.model.latent_dim = cli.model.latent_dim;
        if (keep("--reduction")) merged.model.reduction = cli.model.reduction;
        if (keep("--hidden-dim")) merged.model.hidden_dim = cli.model.hidden_dim;
        if (keep("--lambda")) merged.model.lambda = cli.model.lambda;
        if (keep("--margin")) merged.model.margin = cli.model.margin;
        if (keep("--loss")) merged.model.loss = cli.model.loss;
        if (keep("--epochs")) merged.model.epochs = cli.model.epochs;
        if (keep("--batch-size")) merged.model.batch_size = cli.model.batch_size;
        if (keep("--seed")) merged.model.seed = cli.model.seed;
        if (keep("--lr")) merged.model.lr = cli.model.lr;
        if (keep("--weight-decay"))
          merged.model.weight_decay = cli.model.weight_decay;
        if (keep("--no-attention"))
          merged.model.no_attention = cli.model.no_attention;
        if (keep("--deterministic"))
          merged.model.deterministic = cli.model.deterministic;
        train_args.run = merged;
      }
      return cmd_train(train_args);
    }
    if (eval_cmd->parsed()) return cmd_evaluate(eval_args);
    if (predict_cmd->parsed()) return cmd_predict(predict_args);
    if (perturb_cmd->parsed()) return cmd_perturb(perturb_args);
    if (attention_cmd->parsed()) return cmd_attention(attention_args);
    std::cerr << "no subcommand given\n";
    return kUsage;
  } catch (const UsageError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kUsage;
  } catch (const CapabilityError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kCapability;
  } catch (const std::invalid_argument& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kUsage;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kData;
  }
}

}  // namespace rankae::cli
