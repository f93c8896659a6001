#include <chrono>
#include <filesystem>
#include <fstream>
#include <memory>
#include <set>
#include <sstream>
#include <string>

#include "CLI11.hpp"

#include "logicforge/augment.hpp"
#include "logicforge/corpus.hpp"
#include "logicforge/dataset.hpp"
#include "logicforge/errors.hpp"
#include "logicforge/eval.hpp"
#include "logicforge/gen.hpp"
#include "logicforge/log.hpp"
#include "logicforge/manifest.hpp"
#include "logicforge/miner.hpp"
#include "logicforge/model.hpp"
#include "logicforge/rng.hpp"
#include "logicforge/train.hpp"
#include "logicforge/version.hpp"

namespace fs = std::filesystem;
using nlohmann::ordered_json;
using namespace logicforge;

namespace {

// Runs a command body and writes manifest-<name>.json beside its outputs.
struct ManifestScope {
  RunManifest manifest;
  fs::path out_dir;
  std::chrono::system_clock::time_point wall_start = std::chrono::system_clock::now();
  std::chrono::steady_clock::time_point tick_start = std::chrono::steady_clock::now();

  explicit ManifestScope(std::string command, fs::path dir)
      : out_dir(std::move(dir)) {
    manifest.command = std::move(command);
  }
  void finish() {
    const double secs =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - tick_start).count();
    write_manifest(out_dir, manifest, wall_start, secs);
  }
};

std::string path_str(const fs::path& p) { return p.string(); }

struct GenArgs {
  std::string out_dir;
  std::uint64_t seed = 0;
  int docs = 100;
  int entities = 5;
  int sentences = 7;
  int entity_pool = 0;
};

void run_gen(const GenArgs& a) {
  ManifestScope scope("gen-corpus", a.out_dir);
  corpus::GenConfig cfg;
  cfg.seed = a.seed;
  cfg.n_docs = a.docs;
  cfg.n_entities = a.entities;
  cfg.n_sentences = a.sentences;
  cfg.entity_pool = a.entity_pool;

  corpus::Synthetic synth = corpus::gen_synthetic_corpus(cfg);

  const fs::path out(a.out_dir);
  corpus::save_corpus(synth.corpus, out / "corpus.jsonl");
  corpus::save_gazetteer(synth.gazetteer, out / "gazetteer.json");
  miner::save_pairs(synth.truth, out / "truth_pairs.jsonl");

  log_info("gen-corpus: " + std::to_string(synth.corpus.size()) + " paragraphs, " +
                             std::to_string(synth.truth.size()) + " reference pairs");

  scope.manifest.seed = a.seed;
  scope.manifest.config = {{"seed", a.seed},
                           {"docs", a.docs},
                           {"entities", a.entities},
                           {"sentences", a.sentences},
                           {"entity_pool", a.entity_pool}};
  scope.manifest.outputs = {path_str(out / "corpus.jsonl"), path_str(out / "gazetteer.json"),
                            path_str(out / "truth_pairs.jsonl")};
  scope.finish();
}

struct MineArgs {
  std::string corpus_path;
  std::string gazetteer_path;
  std::string out_dir;
  int l_max = 4;
  int jobs = 1;
};

void run_mine(const MineArgs& a) {
  ManifestScope scope("mine", a.out_dir);
  corpus::Corpus c = corpus::load_corpus(a.corpus_path);
  const corpus::Gazetteer g = corpus::load_gazetteer(a.gazetteer_path);
  corpus::annotate_corpus(c, g, a.jobs);
  const auto pairs = miner::mine_corpus(c, a.l_max, a.jobs);
  const fs::path out(a.out_dir);
  miner::save_pairs(pairs, out / "pairs.jsonl");

  std::string hist;
  for (const auto& [len, n] : miner::chain_length_histogram(pairs))
    hist += " " + std::to_string(len) + ":" + std::to_string(n);
  log_info("mine: " + std::to_string(pairs.size()) + " pairs, chain lengths" +
                       (hist.empty() ? " none" : hist));

  scope.manifest.config = {{"l_max", a.l_max}, {"jobs", a.jobs}};
  scope.manifest.inputs = {a.corpus_path, a.gazetteer_path};
  scope.manifest.outputs = {path_str(out / "pairs.jsonl")};
  scope.finish();
}

struct AugmentArgs {
  std::string corpus_path;
  std::string gazetteer_path;
  std::string pairs_path;
  std::string out_dir;
  int cf_ratio = 3;
  std::uint64_t seed = 0;
  double holdout_fraction = 0.2;
  int jobs = 1;
};

void run_augment(const AugmentArgs& a) {
  if (a.holdout_fraction < 0.0 || a.holdout_fraction >= 1.0)
    throw ValidationError("--holdout-fraction must be in [0, 1)");
  ManifestScope scope("augment", a.out_dir);
  corpus::Corpus c = corpus::load_corpus(a.corpus_path);
  const corpus::Gazetteer g = corpus::load_gazetteer(a.gazetteer_path);
  corpus::annotate_corpus(c, g, a.jobs);
  const auto pairs = miner::load_pairs(a.pairs_path, c);

  // Hold out whole paragraphs so evaluation text never reaches training, in
  // either the relation rows or the plain language-model rows.
  std::vector<std::pair<std::string, std::string>> keys;
  for (const auto& p : pairs) {
    std::pair<std::string, std::string> key{p.doc_id, p.para_id};
    if (keys.empty() || keys.back() != key) keys.push_back(key);
  }
  std::sort(keys.begin(), keys.end());
  keys.erase(std::unique(keys.begin(), keys.end()), keys.end());

  Rng holdout_rng(derive_seed(a.seed, "holdout"));
  holdout_rng.shuffle(keys);
  const auto n_heldout = static_cast<std::size_t>(
      a.holdout_fraction * static_cast<double>(keys.size()));
  std::set<std::pair<std::string, std::string>> heldout_keys(keys.begin(),
                                                             keys.begin() + n_heldout);

  std::vector<miner::LogicPair> train_pairs, heldout_pairs;
  for (const auto& p : pairs) {
    if (heldout_keys.count(std::pair<std::string, std::string>{p.doc_id, p.para_id}))
      heldout_pairs.push_back(p);
    else
      train_pairs.push_back(p);
  }

  const auto mixed = augment::mix(train_pairs, c, g, a.cf_ratio, a.seed, a.jobs);

  const fs::path out(a.out_dir);
  augment::save_mixed(mixed, out / "augmented.jsonl");
  miner::save_pairs(heldout_pairs, out / "heldout_pairs.jsonl");
  log_info("augment: " + std::to_string(train_pairs.size()) + " train pairs -> " +
                          std::to_string(mixed.size()) + " mixed rows, " +
                          std::to_string(heldout_pairs.size()) + " heldout");

  scope.manifest.seed = a.seed;
  scope.manifest.config = {{"cf_ratio", a.cf_ratio},
                           {"seed", a.seed},
                           {"holdout_fraction", a.holdout_fraction},
                           {"jobs", a.jobs}};
  scope.manifest.inputs = {a.corpus_path, a.gazetteer_path, a.pairs_path};
  scope.manifest.outputs = {path_str(out / "augmented.jsonl"),
                            path_str(out / "heldout_pairs.jsonl")};
  scope.finish();
}

struct BuildDatasetArgs {
  std::string corpus_path;
  std::string gazetteer_path;
  std::string augmented_path;
  std::string heldout_path;
  std::string out_dir;
  int min_freq = 1;
  int context_window = 128;
  int n_negatives = 3;
  std::uint64_t seed = 0;
};

void run_build_dataset(const BuildDatasetArgs& a) {
  ManifestScope scope("build-dataset", a.out_dir);
  corpus::Corpus full = corpus::load_corpus(a.corpus_path);
  const corpus::Gazetteer g = corpus::load_gazetteer(a.gazetteer_path);
  corpus::annotate_corpus(full, g);
  const corpus::Vocab vocab = corpus::build_vocab(full, a.min_freq);

  std::set<std::pair<std::string, std::string>> excluded;
  if (!a.heldout_path.empty())
    for (const auto& p : miner::load_pairs(a.heldout_path, full))
      excluded.insert({p.doc_id, p.para_id});

  corpus::Corpus train_side;
  for (const auto& p : full) {
    const std::pair<std::string, std::string> key{p.doc_id, p.para_id};
    if (!excluded.count(key)) train_side.push_back(p);
  }
  if (train_side.empty()) throw ValidationError("holdout excluded every paragraph");

  const auto mixed = augment::load_mixed(a.augmented_path, full);

  dataset::EncodeReport logic_report, lm_report;
  const auto logic = dataset::build_logic_dataset(mixed, vocab, a.context_window, &logic_report);
  const auto lm = dataset::build_lm_dataset(train_side, vocab, a.context_window, &lm_report);

  const auto pool = augment::build_negative_pool(train_side);
  const auto cands =
      train::build_candidate_sets(mixed, pool, vocab, a.n_negatives, a.context_window, a.seed);

  const fs::path out(a.out_dir);
  corpus::save_vocab(vocab, out / "vocab.json");
  dataset::save_logic_dataset(logic, out / "logic.jsonl");
  dataset::save_lm_dataset(lm, out / "lm.jsonl");
  train::save_candidate_sets(out / "candidates.jsonl", cands.sets);

  log_info("build-dataset: vocab " + std::to_string(vocab.size()) + ", logic rows " +
               std::to_string(logic.examples.size()) + " (dropped " +
               std::to_string(logic_report.dropped) + "), lm rows " +
               std::to_string(lm.examples.size()) + " (dropped " +
               std::to_string(lm_report.dropped) + "), candidate sets " +
               std::to_string(cands.sets.size()) + " (dropped " +
               std::to_string(cands.dropped) + ")");

  scope.manifest.seed = a.seed;
  scope.manifest.config = {{"min_freq", a.min_freq},
                           {"context_window", a.context_window},
                           {"n_negatives", a.n_negatives},
                           {"seed", a.seed}};
  scope.manifest.inputs = {a.corpus_path, a.gazetteer_path, a.augmented_path};
  if (!a.heldout_path.empty()) scope.manifest.inputs.push_back(a.heldout_path);
  scope.manifest.outputs = {path_str(out / "vocab.json"), path_str(out / "logic.jsonl"),
                            path_str(out / "lm.jsonl"), path_str(out / "candidates.jsonl")};
  scope.finish();
}

struct TrainArgs {
  std::string config_path;
  std::string logic_path;
  std::string lm_path;
  std::string vocab_path;
  std::string candidates_path;
  std::string out_dir;
  std::uint64_t seed = 0;
  bool seed_set = false;
};

ordered_json train_config_json(const train::TrainConfig& cfg) {
  return {{"steps", cfg.steps},
          {"batch_size", cfg.batch_size},
          {"lr", cfg.lr},
          {"cf_ratio", cfg.cf_ratio},
          {"objective", train::to_string(cfg.objective)},
          {"seed", cfg.seed},
          {"eval_every", cfg.eval_every},
          {"checkpoint_dir", cfg.checkpoint_dir},
          {"context_window", cfg.context_window},
          {"d_model", cfg.d_model},
          {"n_layers", cfg.n_layers},
          {"n_heads", cfg.n_heads}};
}

void run_train(const TrainArgs& a) {
  ManifestScope scope("train", a.out_dir);
  train::TrainConfig cfg = train::parse_train_config(a.config_path);
  if (a.seed_set) cfg.seed = a.seed;

  const fs::path out(a.out_dir);
  if (fs::path(cfg.checkpoint_dir).is_relative())
    cfg.checkpoint_dir = (out / cfg.checkpoint_dir).string();

  train::TrainInputs inputs;
  const corpus::Vocab vocab = corpus::load_vocab(a.vocab_path);
  inputs.vocab_size = static_cast<int>(vocab.size());
  inputs.logic = dataset::load_logic_dataset(a.logic_path);
  inputs.lm = dataset::load_lm_dataset(a.lm_path);
  if (cfg.objective == train::Objective::Contrastive) {
    if (a.candidates_path.empty())
      throw ValidationError("the contrastive objective needs --candidates");
    inputs.candidates = train::load_candidate_sets(a.candidates_path);
  }

  const train::TrainResult result = train::train_loop(cfg, inputs);
  train::write_metrics_csv(out / "metrics.csv", result.metrics);

  log_info("train: final probe loss " + std::to_string(result.metrics.back().total_nll) +
                        " after " + std::to_string(cfg.steps) + " steps");

  scope.manifest.seed = cfg.seed;
  scope.manifest.config = train_config_json(cfg);
  scope.manifest.inputs = {a.config_path, a.logic_path, a.lm_path, a.vocab_path};
  if (!a.candidates_path.empty()) scope.manifest.inputs.push_back(a.candidates_path);
  scope.manifest.outputs = {path_str(out / "metrics.csv")};
  for (const auto& ckpt : result.checkpoints) scope.manifest.outputs.push_back(path_str(ckpt));
  scope.finish();
}

struct EvalProbeArgs {
  std::string checkpoint_path;
  std::string vocab_path;
  std::string corpus_path;
  std::string gazetteer_path;
  std::string pairs_path;
  std::string out_dir;
  std::string style = "reclor";
  int n_distractors = 3;
  std::uint64_t seed = 0;
  bool raw_scores = false;
};

void run_eval_probe(const EvalProbeArgs& a) {
  ManifestScope scope("eval-probe", a.out_dir);
  const auto params = model::load_checkpoint(a.checkpoint_path);
  const auto vocab = corpus::load_vocab(a.vocab_path);
  auto c = corpus::load_corpus(a.corpus_path);
  const auto gazetteer = corpus::load_gazetteer(a.gazetteer_path);
  corpus::annotate_corpus(c, gazetteer);
  const auto pairs = miner::load_pairs(a.pairs_path, c);
  const auto style = eval::prompt_style_from_string(a.style);

  const auto items = eval::build_probe_benchmark(pairs, gazetteer, a.n_distractors, a.seed);
  const auto result = eval::evaluate(params, vocab, items, style, !a.raw_scores);

  const fs::path out(a.out_dir);
  eval::save_mcq_items(out / "probe_items.jsonl", items);
  eval::write_eval_report(out / "probe_report.json", result);
  log_info("eval-probe: accuracy " + std::to_string(result.accuracy) + " over " +
                             std::to_string(result.n_scored) + " items (" +
                             std::to_string(result.n_skipped) + " skipped)");

  scope.manifest.seed = a.seed;
  scope.manifest.config = {{"style", a.style},
                           {"n_distractors", a.n_distractors},
                           {"seed", a.seed},
                           {"length_normalize", !a.raw_scores}};
  scope.manifest.inputs = {a.checkpoint_path, a.vocab_path, a.corpus_path, a.gazetteer_path,
                           a.pairs_path};
  scope.manifest.outputs = {path_str(out / "probe_items.jsonl"),
                            path_str(out / "probe_report.json")};
  scope.finish();
}

struct EvalRobustnessArgs {
  std::string checkpoint_path;
  std::string vocab_path;
  std::string items_path;
  std::string out_dir;
  std::string style = "reclor";
  int k = 5;
  std::uint64_t seed = 0;
  bool raw_scores = false;
};

void run_eval_robustness(const EvalRobustnessArgs& a) {
  ManifestScope scope("eval-robustness", a.out_dir);
  const auto params = model::load_checkpoint(a.checkpoint_path);
  const auto vocab = corpus::load_vocab(a.vocab_path);
  const auto items = eval::load_mcq_items(a.items_path);
  const auto style = eval::prompt_style_from_string(a.style);

  const auto result =
      eval::shuffle_robustness(params, vocab, items, style, a.k, a.seed, !a.raw_scores);
  const fs::path out(a.out_dir);
  eval::write_robustness_report(out / "robustness_report.json", result);
  log_info("eval-robustness: accuracy mean " + std::to_string(result.mean_accuracy) + " spread [" +
               std::to_string(result.min_accuracy) + ", " +
               std::to_string(result.max_accuracy) + "] over " + std::to_string(a.k) + " runs");

  scope.manifest.seed = a.seed;
  scope.manifest.config = {{"style", a.style},
                           {"k", a.k},
                           {"seed", a.seed},
                           {"length_normalize", !a.raw_scores}};
  scope.manifest.inputs = {a.checkpoint_path, a.vocab_path, a.items_path};
  scope.manifest.outputs = {path_str(out / "robustness_report.json")};
  scope.finish();
}

struct EvalGapArgs {
  std::string checkpoint_path;
  std::string vocab_path;
  std::string corpus_path;
  std::string gazetteer_path;
  std::string pairs_path;
  std::string out_dir;
  std::uint64_t seed = 0;
};

void run_eval_gap(const EvalGapArgs& a) {
  ManifestScope scope("eval-gap", a.out_dir);
  const auto params = model::load_checkpoint(a.checkpoint_path);
  const auto vocab = corpus::load_vocab(a.vocab_path);
  auto c = corpus::load_corpus(a.corpus_path);
  corpus::annotate_corpus(c, corpus::load_gazetteer(a.gazetteer_path));
  const auto pairs = miner::load_pairs(a.pairs_path, c);

  const auto pool = augment::build_negative_pool(c);
  const auto sets =
      eval::build_gap_sets(pairs, pool, vocab, params.config.context_window, a.seed);
  const auto result = eval::consistency_gap(params, sets);

  const fs::path out(a.out_dir);
  eval::write_gap_report(out / "gap_report.json", result);
  log_info("eval-gap: gap " + std::to_string(result.gap) + " (consistent " +
                           std::to_string(result.nll_consistent) + ", inconsistent " +
                           std::to_string(result.nll_inconsistent) + ")");

  scope.manifest.seed = a.seed;
  scope.manifest.config = {{"seed", a.seed}};
  scope.manifest.inputs = {a.checkpoint_path, a.vocab_path, a.corpus_path, a.gazetteer_path,
                           a.pairs_path};
  scope.manifest.outputs = {path_str(out / "gap_report.json")};
  scope.finish();
}

struct ReportArgs {
  std::string run_dir;
};

void run_report(const ReportArgs& a) {
  ManifestScope scope("report", a.run_dir);
  const fs::path dir(a.run_dir);
  ordered_json combined = ordered_json::object();
  std::vector<std::string> inputs;

  auto read_json = [&](const char* name) -> ordered_json {
    const fs::path p = dir / name;
    if (!fs::exists(p)) return nullptr;
    std::ifstream in(p);
    if (!in) throw IoError("cannot open: " + p.string());
    inputs.push_back(p.string());
    return ordered_json::parse(in);
  };

  combined["probe"] = read_json("probe_report.json");
  combined["robustness"] = read_json("robustness_report.json");
  combined["gap"] = read_json("gap_report.json");

  const fs::path metrics_path = dir / "metrics.csv";
  combined["train"] = nullptr;
  if (fs::exists(metrics_path)) {
    std::ifstream in(metrics_path);
    if (!in) throw IoError("cannot open: " + metrics_path.string());
    inputs.push_back(metrics_path.string());
    std::string line, last;
    std::getline(in, line);
    if (line != "step,logic_nll,lm_nll,total_nll,examples_seen")
      throw ValidationError("unexpected metrics header in " + metrics_path.string());
    long rows = 0;
    while (std::getline(in, line))
      if (!line.empty()) {
        last = line;
        ++rows;
      }
    if (rows > 0) {
      std::istringstream ss(last);
      std::string field;
      std::vector<std::string> fields;
      while (std::getline(ss, field, ',')) fields.push_back(field);
      if (fields.size() != 5)
        throw ValidationError("malformed metrics row in " + metrics_path.string());
      combined["train"] = {{"rows", rows},
                           {"final_step", std::stol(fields[0])},
                           {"final_logic_nll", std::stod(fields[1])},
                           {"final_lm_nll", std::stod(fields[2])},
                           {"final_total_nll", std::stod(fields[3])},
                           {"examples_seen", std::stol(fields[4])}};
    }
  }

  if (inputs.empty())
    throw ValidationError("nothing to report: no run artifacts found in " + a.run_dir);

  {
    std::ofstream out(dir / "report.json");
    if (!out) throw IoError("cannot open for writing: " + (dir / "report.json").string());
    out << combined.dump(2) << '\n';
  }

  // Short human-readable summary on stdout.
  std::ostringstream text;
  if (!combined["probe"].is_null())
    text << "probe accuracy " << combined["probe"]["accuracy"].get<double>() << " over "
         << combined["probe"]["n_scored"].get<long>() << " items\n";
  if (!combined["robustness"].is_null())
    text << "robustness mean " << combined["robustness"]["mean"].get<double>() << " in ["
         << combined["robustness"]["min"].get<double>() << ", "
         << combined["robustness"]["max"].get<double>() << "]\n";
  if (!combined["gap"].is_null())
    text << "consistency gap " << combined["gap"]["gap"].get<double>() << "\n";
  if (!combined["train"].is_null())
    text << "final total nll " << combined["train"]["final_total_nll"].get<double>()
         << " at step " << combined["train"]["final_step"].get<long>() << "\n";
  std::fputs(text.str().c_str(), stdout);

  scope.manifest.inputs = inputs;
  scope.manifest.outputs = {path_str(dir / "report.json")};
  scope.finish();
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"mines logically linked relation pairs from an entity-annotated corpus,\n"
               "augments them with counterfactual entity substitutions, trains a small\n"
               "decoder-only model on them, and evaluates logical consistency"};
  app.set_version_flag("--version", kVersion);
  app.require_subcommand(1);

  auto gen_args = std::make_shared<GenArgs>();
  auto* gen = app.add_subcommand("gen-corpus", "generate a synthetic annotated corpus");
  gen->add_option("--out-dir", gen_args->out_dir, "output directory")->required();
  gen->add_option("--seed", gen_args->seed, "rng seed");
  gen->add_option("--docs", gen_args->docs, "number of documents");
  gen->add_option("--entities", gen_args->entities, "chain entities per paragraph");
  gen->add_option("--sentences", gen_args->sentences, "sentences per paragraph");
  gen->add_option("--entity-pool", gen_args->entity_pool, "global entity pool size (0 = auto)");
  gen->callback([gen_args] { run_gen(*gen_args); });

  auto mine_args = std::make_shared<MineArgs>();
  auto* mine = app.add_subcommand("mine", "mine direct/indirect relation pairs");
  mine->add_option("--corpus", mine_args->corpus_path, "corpus jsonl")
      ->required()
      ->check(CLI::ExistingFile);
  mine->add_option("--gazetteer", mine_args->gazetteer_path, "gazetteer json")
      ->required()
      ->check(CLI::ExistingFile);
  mine->add_option("--out-dir", mine_args->out_dir, "output directory")->required();
  mine->add_option("--l-max", mine_args->l_max, "maximum chain hops");
  mine->add_option("--jobs", mine_args->jobs, "worker threads");
  mine->callback([mine_args] { run_mine(*mine_args); });

  auto aug_args = std::make_shared<AugmentArgs>();
  auto* aug = app.add_subcommand("augment", "hold out eval pairs and add counterfactuals");
  aug->add_option("--corpus", aug_args->corpus_path, "corpus jsonl")
      ->required()
      ->check(CLI::ExistingFile);
  aug->add_option("--gazetteer", aug_args->gazetteer_path, "gazetteer json")
      ->required()
      ->check(CLI::ExistingFile);
  aug->add_option("--pairs", aug_args->pairs_path, "mined pairs jsonl")
      ->required()
      ->check(CLI::ExistingFile);
  aug->add_option("--out-dir", aug_args->out_dir, "output directory")->required();
  aug->add_option("--cf-ratio", aug_args->cf_ratio, "counterfactual variants per pair");
  aug->add_option("--seed", aug_args->seed, "rng seed");
  aug->add_option("--holdout-fraction", aug_args->holdout_fraction,
                  "fraction of paragraphs held out for evaluation");
  aug->add_option("--jobs", aug_args->jobs, "worker threads");
  aug->callback([aug_args] { run_augment(*aug_args); });

  auto bd_args = std::make_shared<BuildDatasetArgs>();
  auto* bd = app.add_subcommand("build-dataset", "encode training rows and candidate sets");
  bd->add_option("--corpus", bd_args->corpus_path, "corpus jsonl")
      ->required()
      ->check(CLI::ExistingFile);
  bd->add_option("--gazetteer", bd_args->gazetteer_path, "gazetteer json")
      ->required()
      ->check(CLI::ExistingFile);
  bd->add_option("--augmented", bd_args->augmented_path, "augmented pairs jsonl")
      ->required()
      ->check(CLI::ExistingFile);
  bd->add_option("--heldout", bd_args->heldout_path,
                 "heldout pairs jsonl; their paragraphs are excluded from the lm rows")
      ->check(CLI::ExistingFile);
  bd->add_option("--out-dir", bd_args->out_dir, "output directory")->required();
  bd->add_option("--min-freq", bd_args->min_freq, "vocabulary frequency cutoff");
  bd->add_option("--context-window", bd_args->context_window, "maximum row length");
  bd->add_option("--n-negatives", bd_args->n_negatives, "negatives per candidate set");
  bd->add_option("--seed", bd_args->seed, "rng seed");
  bd->callback([bd_args] { run_build_dataset(*bd_args); });

  auto train_args = std::make_shared<TrainArgs>();
  auto* tr = app.add_subcommand("train", "train a model from a toml config");
  tr->add_option("--config", train_args->config_path, "toml config")
      ->required()
      ->check(CLI::ExistingFile);
  tr->add_option("--logic", train_args->logic_path, "relation rows jsonl")
      ->required()
      ->check(CLI::ExistingFile);
  tr->add_option("--lm", train_args->lm_path, "language-model rows jsonl")
      ->required()
      ->check(CLI::ExistingFile);
  tr->add_option("--vocab", train_args->vocab_path, "vocab json")
      ->required()
      ->check(CLI::ExistingFile);
  tr->add_option("--candidates", train_args->candidates_path,
                 "candidate sets jsonl (contrastive objective)")
      ->check(CLI::ExistingFile);
  tr->add_option("--out-dir", train_args->out_dir, "output directory")->required();
  auto* seed_opt = tr->add_option("--seed", train_args->seed, "override the config seed");
  tr->callback([train_args, seed_opt] {
    train_args->seed_set = seed_opt->count() > 0;
    run_train(*train_args);
  });

  auto probe_args = std::make_shared<EvalProbeArgs>();
  auto* probe = app.add_subcommand("eval-probe",
                                   "multiple-choice probe for logical consistency");
  probe->add_option("--checkpoint", probe_args->checkpoint_path, "model checkpoint")
      ->required()
      ->check(CLI::ExistingFile);
  probe->add_option("--vocab", probe_args->vocab_path, "vocab json")
      ->required()
      ->check(CLI::ExistingFile);
  probe->add_option("--corpus", probe_args->corpus_path, "corpus jsonl")
      ->required()
      ->check(CLI::ExistingFile);
  probe->add_option("--gazetteer", probe_args->gazetteer_path, "gazetteer json")
      ->required()
      ->check(CLI::ExistingFile);
  probe->add_option("--pairs", probe_args->pairs_path, "heldout pairs jsonl")
      ->required()
      ->check(CLI::ExistingFile);
  probe->add_option("--out-dir", probe_args->out_dir, "output directory")->required();
  probe->add_option("--style", probe_args->style, "prompt style")
      ->check(CLI::IsMember({"reclor", "logiqa", "race", "mmlu"}));
  probe->add_option("--n-distractors", probe_args->n_distractors, "wrong options per item");
  probe->add_option("--seed", probe_args->seed, "rng seed");
  probe->add_flag("--raw-scores", probe_args->raw_scores,
                  "rank by total rather than per-token log-likelihood");
  probe->callback([probe_args] { run_eval_probe(*probe_args); });

  auto rob_args = std::make_shared<EvalRobustnessArgs>();
  auto* rob = app.add_subcommand("eval-robustness", "accuracy under option-order shuffling");
  rob->add_option("--checkpoint", rob_args->checkpoint_path, "model checkpoint")
      ->required()
      ->check(CLI::ExistingFile);
  rob->add_option("--vocab", rob_args->vocab_path, "vocab json")
      ->required()
      ->check(CLI::ExistingFile);
  rob->add_option("--items", rob_args->items_path, "mcq items jsonl")
      ->required()
      ->check(CLI::ExistingFile);
  rob->add_option("--out-dir", rob_args->out_dir, "output directory")->required();
  rob->add_option("--style", rob_args->style, "prompt style")
      ->check(CLI::IsMember({"reclor", "logiqa", "race", "mmlu"}));
  rob->add_option("--k", rob_args->k, "number of evaluation runs");
  rob->add_option("--seed", rob_args->seed, "rng seed");
  rob->add_flag("--raw-scores", rob_args->raw_scores,
                "rank by total rather than per-token log-likelihood");
  rob->callback([rob_args] { run_eval_robustness(*rob_args); });

  auto gap_args = std::make_shared<EvalGapArgs>();
  auto* gap = app.add_subcommand("eval-gap",
                                 "mean NLL gap between inconsistent and consistent pairs");
  gap->add_option("--checkpoint", gap_args->checkpoint_path, "model checkpoint")
      ->required()
      ->check(CLI::ExistingFile);
  gap->add_option("--vocab", gap_args->vocab_path, "vocab json")
      ->required()
      ->check(CLI::ExistingFile);
  gap->add_option("--corpus", gap_args->corpus_path, "corpus jsonl")
      ->required()
      ->check(CLI::ExistingFile);
  gap->add_option("--gazetteer", gap_args->gazetteer_path, "gazetteer json")
      ->required()
      ->check(CLI::ExistingFile);
  gap->add_option("--pairs", gap_args->pairs_path, "heldout pairs jsonl")
      ->required()
      ->check(CLI::ExistingFile);
  gap->add_option("--out-dir", gap_args->out_dir, "output directory")->required();
  gap->add_option("--seed", gap_args->seed, "rng seed");
  gap->callback([gap_args] { run_eval_gap(*gap_args); });

  auto report_args = std::make_shared<ReportArgs>();
  auto* rep = app.add_subcommand("report", "combine run artifacts into report.json");
  rep->add_option("--run-dir", report_args->run_dir, "directory with evaluation outputs")
      ->required()
      ->check(CLI::ExistingDirectory);
  rep->callback([report_args] { run_report(*report_args); });

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  } catch (const ValidationError& e) {
    log_error(e.what());
    return 2;
  } catch (const std::exception& e) {
    log_error(e.what());
    return 1;
  }
  return 0;
}
