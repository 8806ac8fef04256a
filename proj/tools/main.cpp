#include <filesystem>
#include <fstream>
#include <iostream>
#include <unordered_map>

#include "CLI11.hpp"
#include "lexhmm/checkpoint.hpp"
#include "lexhmm/corpus.hpp"
#include "lexhmm/eval.hpp"
#include "lexhmm/inference.hpp"
#include "lexhmm/model.hpp"

namespace {

using namespace lexhmm;

struct CommonCorpusOpts {
  std::string path;
  std::string format = "conllx";
  bool use_postag = false;
};

void add_corpus_opts(CLI::App* cmd, CommonCorpusOpts* opts, const std::string& flag,
                     const std::string& help) {
  cmd->add_option(flag, opts->path, help)->required();
  cmd->add_option("--format", opts->format, "Corpus format: conllx or vertical")
      ->check(CLI::IsMember({"conllx", "vertical"}));
  cmd->add_flag("--postag", opts->use_postag, "Use the POSTAG column instead of CPOSTAG");
}

Corpus load_corpus(const CommonCorpusOpts& opts) {
  if (opts.format == "vertical") return Corpus::read_vertical(opts.path);
  return Corpus::read_conllx(opts.path, opts.use_postag);
}

std::vector<std::vector<std::string>> tag_strings(const Model& model) {
  std::vector<std::vector<std::string>> out;
  out.reserve(model.tags.size());
  for (const auto& sent : model.tags) {
    std::vector<std::string> row;
    row.reserve(sent.size());
    for (TagId t : sent) row.push_back(std::to_string(t));
    out.push_back(std::move(row));
  }
  return out;
}

void write_lexicon_tsv(const std::string& path, const Model& model) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path);
  out << "word\tclass\n";
  const Corpus& corpus = model.corpus();
  for (WordId w = 0; w < corpus.num_types(); ++w) {
    out << corpus.type(w).surface << '\t';
    const auto& tags = model.classes.tags(model.lexicon.class_of(w));
    for (std::size_t i = 0; i < tags.size(); ++i) {
      if (i > 0) out << ',';
      out << tags[i];
    }
    out << '\n';
  }
}

// Reads a vertical tag file and returns its labels interned to dense ids,
// checking surface-by-surface alignment with `corpus`.
std::vector<std::uint32_t> aligned_labels(const Corpus& tagged, const Corpus& corpus,
                                          const std::string& what) {
  if (tagged.num_sentences() != corpus.num_sentences() ||
      tagged.num_tokens() != corpus.num_tokens()) {
    throw std::runtime_error(what + " does not align with the corpus");
  }
  if (!tagged.has_gold()) throw std::runtime_error(what + " is missing its tag column");
  for (std::size_t s = 0; s < corpus.num_sentences(); ++s) {
    if (tagged.sentence(s).size() != corpus.sentence(s).size()) {
      throw std::runtime_error(what + " does not align with the corpus");
    }
    for (std::size_t i = 0; i < corpus.sentence(s).size(); ++i) {
      if (tagged.type(tagged.sentence(s)[i]).surface != corpus.type(corpus.sentence(s)[i]).surface) {
        throw std::runtime_error(what + ": token mismatch against the corpus");
      }
    }
  }
  return tagged.gold_flat();
}

int cmd_train(const CommonCorpusOpts& corpus_opts, SamplerConfig config, std::string sampler,
              std::string emission, std::uint32_t tags_opt, const std::string& out_prefix,
              const std::string& resume_path) {
  const Corpus corpus = load_corpus(corpus_opts);
  if (config.kind == SamplerKind::kLocal && emission == "charlm") {
    std::cerr << "note: the token-level sampler is known to mix poorly with the character LM\n";
  }
  std::uint32_t num_tags = tags_opt;
  if (num_tags == 0) {
    if (!corpus.has_gold()) {
      std::cerr << "error: --tags is required when the corpus has no gold column\n";
      return 1;
    }
    num_tags = static_cast<std::uint32_t>(corpus.num_gold_tags());
  }
  config.kind = sampler == "lex"   ? SamplerKind::kLex
                : sampler == "local" ? SamplerKind::kLocal
                                     : SamplerKind::kPypType;
  config.emission = emission == "charlm" ? EmissionMode::kCharLm : EmissionMode::kUniform;
  if (config.checkpoint_path.empty()) config.checkpoint_path = out_prefix + ".ckpt";

  std::unique_ptr<Model> model;
  std::uint32_t total_iterations = config.iterations;
  if (!resume_path.empty()) {
    model = load_checkpoint(resume_path, corpus, &config, nullptr);
    if (model->tagset().size != num_tags) {
      throw std::runtime_error("checkpoint tag count does not match the requested run");
    }
  } else {
    model = std::make_unique<Model>(corpus, num_tags, config.emission, config.lexicon_enabled(),
                                    config.p_geom);
    model->rng = Rng(config.seed);
    model->init_assignment(model->rng);
  }
  if (model->iteration >= total_iterations) {
    std::cerr << "note: checkpoint already at iteration " << model->iteration << "\n";
  }
  config.iterations = total_iterations > model->iteration
                          ? static_cast<std::uint32_t>(total_iterations - model->iteration)
                          : 0;

  std::ofstream diag(out_prefix + ".diag", resume_path.empty() ? std::ios::out : std::ios::app);
  if (!diag) throw std::runtime_error("cannot write " + out_prefix + ".diag");
  run_training(*model, config, [&](const IterationDiagnostics& d) {
    const std::string line = format_diagnostics(d);
    diag << line << '\n';
    diag.flush();
    std::cerr << line << '\n';
  });

  corpus.write_vertical(out_prefix + ".tags", tag_strings(*model));
  write_lexicon_tsv(out_prefix + ".lexicon.tsv", *model);
  config.iterations = total_iterations;
  save_checkpoint(config.checkpoint_path, *model, config);
  return 0;
}

int cmd_eval(const std::string& pred_path, const CommonCorpusOpts& gold_opts,
             const std::string& out_path) {
  const Corpus gold_corpus = load_corpus(gold_opts);
  if (!gold_corpus.has_gold()) throw std::runtime_error("gold corpus has no tag column");
  const Corpus pred_corpus = Corpus::read_vertical(pred_path);
  const std::vector<std::uint32_t> pred = aligned_labels(pred_corpus, gold_corpus, pred_path);
  const std::vector<std::uint32_t> gold = gold_corpus.gold_flat();

  std::ostringstream report;
  report << "tokens " << gold.size() << '\n';
  report << "m1 " << many_to_one(pred, gold) << '\n';
  report << "v_measure " << v_measure(pred, gold) << '\n';
  const auto pred_classes = extract_classes(
      [&] {
        std::vector<std::vector<std::uint32_t>> shaped;
        std::size_t k = 0;
        for (const auto& sent : gold_corpus.sentences()) {
          std::vector<std::uint32_t> row;
          for (std::size_t i = 0; i < sent.size(); ++i) row.push_back(pred[k++]);
          shaped.push_back(std::move(row));
        }
        return shaped;
      }(),
      gold_corpus);
  const auto zt = zipf_table(pred_classes);
  double mean_size = 0.0;
  for (const auto& c : pred_classes) mean_size += static_cast<double>(c.size());
  mean_size /= static_cast<double>(pred_classes.size());
  report << "pred_classes " << zt.size() << '\n';
  report << "pred_mean_class_size " << mean_size << '\n';
  std::cout << report.str();
  if (!out_path.empty()) {
    std::ofstream out(out_path);
    if (!out) throw std::runtime_error("cannot write " + out_path);
    out << report.str();
  }
  return 0;
}

int cmd_analyze(const std::string& assignment_path, const CommonCorpusOpts& corpus_opts,
                const std::string& out_prefix) {
  const Corpus corpus = load_corpus(corpus_opts);
  const Corpus tagged = Corpus::read_vertical(assignment_path);
  aligned_labels(tagged, corpus, assignment_path);

  std::vector<std::vector<std::uint32_t>> shaped;
  for (std::size_t s = 0; s < tagged.num_sentences(); ++s) shaped.push_back(tagged.gold()[s]);
  const auto classes = extract_classes(shaped, corpus);
  const auto rows = class_report(classes, corpus);
  const auto zt = zipf_table(classes);
  const LogLogFit fit = fit_log_log(zt);

  const std::string report_path = out_prefix + ".classes.tsv";
  std::ofstream report(report_path);
  if (!report) throw std::runtime_error("cannot write " + report_path);
  report << format_class_report(rows, tagged.gold_tag_names(), corpus.gold_tag_names());

  const std::string zipf_path = out_prefix + ".zipf.tsv";
  std::ofstream zipf(zipf_path);
  if (!zipf) throw std::runtime_error("cannot write " + zipf_path);
  zipf << "rank\ttype_count\n";
  for (const ZipfRow& row : zt) zipf << row.rank << '\t' << row.type_count << '\n';

  double mean_size = 0.0;
  for (const auto& c : classes) mean_size += static_cast<double>(c.size());
  mean_size /= static_cast<double>(classes.size());
  std::cout << "classes " << zt.size() << '\n'
            << "mean_class_size " << mean_size << '\n'
            << "zipf_slope " << fit.slope << '\n'
            << "zipf_r2 " << fit.r_squared << '\n';
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Unsupervised part-of-speech induction with a Pitman-Yor lexicon HMM"};
  app.require_subcommand(1);

  // train
  auto* train = app.add_subcommand("train", "Train a tagger and write its artifacts");
  train->set_config("--config", "", "Key=value configuration file; flags override it");
  CommonCorpusOpts train_corpus;
  add_corpus_opts(train, &train_corpus, "--corpus", "Training corpus");
  SamplerConfig config;
  std::string sampler = "lex";
  std::string emission = "uniform";
  std::uint32_t num_tags = 0;
  std::string out_prefix = "run";
  std::string resume_path;
  train->add_option("--tags", num_tags, "Number of induced tags (default: gold tag count)");
  train->add_option("--sampler", sampler, "lex, pyp-type, or local")
      ->check(CLI::IsMember({"lex", "pyp-type", "local"}));
  train->add_option("--emission", emission, "uniform or charlm")
      ->check(CLI::IsMember({"uniform", "charlm"}));
  train->add_option("--particles", config.particles, "Particle count (incl. the conditional one)")
      ->check(CLI::PositiveNumber);
  train->add_option("--iterations", config.iterations, "Training iterations")
      ->check(CLI::PositiveNumber);
  train->add_option("--seed", config.seed, "Random seed; all randomness flows from it");
  train->add_option("--p-geom", config.p_geom, "Geometric parameter of the class-size base")
      ->check(CLI::Range(1e-9, 1.0));
  train->add_option("--resample-threshold", config.resample_threshold,
                    "ESS fraction that triggers particle resampling (0 disables)")
      ->check(CLI::Range(0.0, 1.0));
  train->add_option("--hyper-cadence", config.hyper_cadence,
                    "Resample hyperparameters every N iterations (0 disables)");
  train->add_option("--threads", config.threads, "Worker threads for particle propagation")
      ->check(CLI::PositiveNumber);
  train->add_option("--checkpoint", config.checkpoint_path,
                    "Checkpoint path (default: <out>.ckpt)");
  train->add_option("--checkpoint-interval", config.checkpoint_interval,
                    "Checkpoint every N iterations (0: only at the end)");
  train->add_option("--resume", resume_path, "Resume from a checkpoint");
  train->add_option("--out", out_prefix, "Output prefix for .tags/.lexicon.tsv/.diag/.ckpt");

  // eval
  auto* eval = app.add_subcommand("eval", "Score a predicted tagging against gold");
  std::string pred_path;
  CommonCorpusOpts gold_opts;
  std::string eval_out;
  eval->add_option("--pred", pred_path, "Predicted tags (vertical format)")->required();
  add_corpus_opts(eval, &gold_opts, "--gold", "Gold corpus");
  eval->add_option("--out", eval_out, "Also write the metrics to this file");

  // analyze
  auto* analyze = app.add_subcommand("analyze", "Extract and rank ambiguity classes");
  std::string assignment_path;
  CommonCorpusOpts analyze_corpus;
  std::string analyze_out = "analysis";
  analyze->add_option("--assignment", assignment_path, "Tag assignment (vertical format)")
      ->required();
  add_corpus_opts(analyze, &analyze_corpus, "--corpus", "Corpus the assignment tags");
  analyze->add_option("--out", analyze_out, "Output prefix for .classes.tsv/.zipf.tsv");

  CLI11_PARSE(app, argc, argv);

  try {
    if (train->parsed()) {
      return cmd_train(train_corpus, config, sampler, emission, num_tags, out_prefix, resume_path);
    }
    if (eval->parsed()) return cmd_eval(pred_path, gold_opts, eval_out);
    if (analyze->parsed()) return cmd_analyze(assignment_path, analyze_corpus, analyze_out);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
