#include "logicforge/train.hpp"

#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <set>
#include <sstream>

#include "logicforge/errors.hpp"
#include "logicforge/log.hpp"
#include "logicforge/miner.hpp"
#include "logicforge/rng.hpp"

#include "jsonl_util.hpp"

namespace logicforge::train {

using detail::field;
using detail::ordered_json;

Objective objective_from_string(const std::string& s) {
  if (s == "logic_plus_lm") return Objective::LogicPlusLM;
  if (s == "lm_only") return Objective::LMOnly;
  if (s == "contrastive") return Objective::Contrastive;
  throw InvalidConfig("unknown objective: " + s);
}

std::string to_string(Objective objective) {
  switch (objective) {
    case Objective::LogicPlusLM: return "logic_plus_lm";
    case Objective::LMOnly: return "lm_only";
    case Objective::Contrastive: return "contrastive";
  }
  throw InvalidConfig("bad objective enum value");
}

void TrainConfig::validate() const {
  if (steps < 1) throw InvalidConfig("steps must be at least 1");
  if (batch_size < 1) throw InvalidConfig("batch_size must be at least 1");
  if (!(lr >= 0.0) || !std::isfinite(lr)) throw InvalidConfig("lr must be a finite number >= 0");
  if (cf_ratio < 0) throw InvalidConfig("cf_ratio must be >= 0");
  if (eval_every < 1) throw InvalidConfig("eval_every must be at least 1");
  if (checkpoint_dir.empty()) throw InvalidConfig("checkpoint_dir must not be empty");
  if (context_window < 2) throw InvalidConfig("context_window must be at least 2");
  if (d_model < 1) throw InvalidConfig("d_model must be positive");
  if (n_layers < 1) throw InvalidConfig("n_layers must be positive");
  if (n_heads < 1) throw InvalidConfig("n_heads must be positive");
  if (d_model % n_heads != 0) throw InvalidConfig("d_model must be divisible by n_heads");
}

namespace {

std::string trim(std::string_view s) {
  std::size_t a = 0, b = s.size();
  while (a < b && std::isspace(static_cast<unsigned char>(s[a]))) ++a;
  while (b > a && std::isspace(static_cast<unsigned char>(s[b - 1]))) --b;
  return std::string(s.substr(a, b - a));
}

bool parse_i64(const std::string& s, long long& out) {
  const char* first = s.data();
  const char* last = s.data() + s.size();
  auto [ptr, ec] = std::from_chars(first, last, out);
  return ec == std::errc() && ptr == last;
}

bool parse_u64(const std::string& s, unsigned long long& out) {
  const char* first = s.data();
  const char* last = s.data() + s.size();
  auto [ptr, ec] = std::from_chars(first, last, out);
  return ec == std::errc() && ptr == last;
}

bool parse_f64(const std::string& s, double& out) {
  const char* first = s.data();
  const char* last = s.data() + s.size();
  auto [ptr, ec] = std::from_chars(first, last, out);
  return ec == std::errc() && ptr == last;
}

}  // namespace

TrainConfig parse_train_config_text(const std::string& text) {
  TrainConfig cfg;
  std::istringstream stream(text);
  std::string raw;
  int line_no = 0;
  while (std::getline(stream, raw)) {
    ++line_no;
    auto fail = [&](const std::string& what) {
      throw InvalidConfig("config line " + std::to_string(line_no) + ": " + what);
    };

    bool in_quotes = false;
    std::string line = raw;
    for (std::size_t i = 0; i < line.size(); ++i) {
      if (line[i] == '"') in_quotes = !in_quotes;
      if (line[i] == '#' && !in_quotes) {
        line.resize(i);
        break;
      }
    }
    line = trim(line);
    if (line.empty()) continue;

    const std::size_t eq = line.find('=');
    if (eq == std::string::npos) fail("expected key = value");
    const std::string key = trim(std::string_view(line).substr(0, eq));
    const std::string value = trim(std::string_view(line).substr(eq + 1));
    if (key.empty()) fail("empty key");
    if (value.empty()) fail("empty value for " + key);

    const bool quoted = value.size() >= 2 && value.front() == '"' && value.back() == '"';
    auto string_value = [&]() -> std::string {
      if (!quoted) fail(key + " must be a quoted string");
      return value.substr(1, value.size() - 2);
    };
    auto int_value = [&](long long lo) -> long long {
      long long v = 0;
      if (quoted || !parse_i64(value, v)) fail(key + " must be an integer");
      if (v < lo) fail(key + " must be >= " + std::to_string(lo));
      return v;
    };

    if (key == "steps") {
      cfg.steps = int_value(0);
    } else if (key == "batch_size") {
      cfg.batch_size = static_cast<int>(int_value(0));
    } else if (key == "lr") {
      double v = 0.0;
      if (quoted || !parse_f64(value, v)) fail("lr must be a number");
      cfg.lr = v;
    } else if (key == "cf_ratio") {
      cfg.cf_ratio = static_cast<int>(int_value(0));
    } else if (key == "objective") {
      cfg.objective = objective_from_string(string_value());
    } else if (key == "seed") {
      unsigned long long v = 0;
      if (quoted || !parse_u64(value, v)) fail("seed must be a non-negative integer");
      cfg.seed = v;
    } else if (key == "eval_every") {
      cfg.eval_every = int_value(1);
    } else if (key == "checkpoint_dir") {
      cfg.checkpoint_dir = string_value();
    } else if (key == "context_window") {
      cfg.context_window = static_cast<int>(int_value(2));
    } else if (key == "d_model") {
      cfg.d_model = static_cast<int>(int_value(1));
    } else if (key == "n_layers") {
      cfg.n_layers = static_cast<int>(int_value(1));
    } else if (key == "n_heads") {
      cfg.n_heads = static_cast<int>(int_value(1));
    } else {
      fail("unknown config key: " + key);
    }
  }
  cfg.validate();
  return cfg;
}

TrainConfig parse_train_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open: " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_train_config_text(buf.str());
}

namespace {

void row_slices(const dataset::Batch& batch, std::size_t r, std::vector<int>& tokens,
                std::vector<uint8_t>& mask) {
  const auto len = static_cast<std::ptrdiff_t>(batch.lengths[r]);
  tokens.assign(batch.tokens[r].begin(), batch.tokens[r].begin() + len);
  mask.assign(batch.mask[r].begin(), batch.mask[r].begin() + len);
}

double kind_loss(const model::ModelParams& params, const dataset::Batch& batch,
                 dataset::Batch::RowKind kind, model::ModelParams* grads) {
  long count = 0;
  for (std::size_t r = 0; r < batch.tokens.size(); ++r) {
    if (batch.kinds[r] != kind) continue;
    for (int t = 0; t < batch.lengths[r]; ++t)
      if (batch.mask[r][static_cast<std::size_t>(t)] != 0) ++count;
  }
  if (count == 0) throw AllMaskedOut();

  const double weight = 1.0 / static_cast<double>(count);
  double sum = 0.0;
  std::vector<int> tokens;
  std::vector<uint8_t> mask;
  for (std::size_t r = 0; r < batch.tokens.size(); ++r) {
    if (batch.kinds[r] != kind) continue;
    row_slices(batch, r, tokens, mask);
    sum += model::sequence_nll(params, tokens, mask, grads, weight);
  }
  return sum * weight;
}

}  // namespace

double logic_loss(const model::ModelParams& params, const dataset::Batch& batch,
                  model::ModelParams* grads) {
  return kind_loss(params, batch, dataset::Batch::RowKind::Logic, grads);
}

double lm_loss(const model::ModelParams& params, const dataset::Batch& batch,
               model::ModelParams* grads) {
  return kind_loss(params, batch, dataset::Batch::RowKind::LM, grads);
}

DualLoss dual_loss(const model::ModelParams& params, const dataset::Batch& batch,
                   model::ModelParams* grads) {
  DualLoss out;
  out.logic_nll = kind_loss(params, batch, dataset::Batch::RowKind::Logic, grads);
  out.lm_nll = kind_loss(params, batch, dataset::Batch::RowKind::LM, grads);
  return out;
}

namespace {

struct ScoredSequence {
  std::vector<int> tokens;
  std::vector<uint8_t> mask;
  std::size_t target_len = 0;
};

ScoredSequence continuation_row(const std::vector<int>& condition,
                                const std::vector<int>& candidate) {
  if (candidate.empty()) throw InvalidConfig("cannot score an empty candidate");
  ScoredSequence s;
  s.target_len = candidate.size();
  s.tokens.reserve(condition.size() + candidate.size() + 2);
  s.tokens.push_back(corpus::Vocab::kBos);
  s.tokens.insert(s.tokens.end(), condition.begin(), condition.end());
  s.tokens.push_back(corpus::Vocab::kSep);
  s.tokens.insert(s.tokens.end(), candidate.begin(), candidate.end());
  s.mask.assign(s.tokens.size(), 0);
  for (std::size_t i = condition.size() + 2; i < s.tokens.size(); ++i) s.mask[i] = 1;
  return s;
}

}  // namespace

double token_score(const model::ModelParams& params, const std::vector<int>& condition,
                   const std::vector<int>& candidate) {
  const ScoredSequence s = continuation_row(condition, candidate);
  const double nll = model::sequence_nll(params, s.tokens, s.mask, nullptr, 0.0);
  return -nll / static_cast<double>(s.target_len);
}

CandidateBuildReport build_candidate_sets(const std::vector<augment::MixedPair>& pairs,
                                          const std::vector<augment::PoolSentence>& pool,
                                          const corpus::Vocab& vocab, int n_negatives,
                                          int context_window, std::uint64_t seed) {
  if (n_negatives < 1) throw InvalidConfig("n_negatives must be at least 1");
  CandidateBuildReport report;

  auto encode = [&](const std::string& text) { return vocab.encode(text); };
  auto fits = [&](const std::vector<int>& cond, const std::vector<int>& cand) {
    return static_cast<int>(cond.size() + cand.size() + 2) <= context_window;
  };

  for (std::size_t i = 0; i < pairs.size(); ++i) {
    const auto& p = pairs[i];
    Rng rng(derive_seed(seed, "candset", i));

    // synthesize_negative reads anchors and the direct instance, so feed it
    // the pair's current (possibly counterfactual) surfaces.
    miner::LogicPair shim = augment::base_of(p);
    shim.direct = augment::direct_of(p);
    shim.indirect = augment::indirect_of(p);

    const miner::RelationInstance* sides[2][2] = {{&shim.direct, &shim.indirect},
                                                  {&shim.indirect, &shim.direct}};
    for (const auto& side : sides) {
      CandidateSet set;
      set.condition = encode(side[0]->text);
      set.positive = encode(side[1]->text);
      if (!fits(set.condition, set.positive) || set.positive.empty()) {
        ++report.dropped;
        continue;
      }

      std::set<std::string> seen;
      const int attempts = n_negatives * 10;
      for (int a = 0; a < attempts && static_cast<int>(set.negatives.size()) < n_negatives;
           ++a) {
        miner::RelationInstance neg = augment::synthesize_negative(shim, pool, rng);
        if (neg.text == side[1]->text || !seen.insert(neg.text).second) continue;
        std::vector<int> ids = encode(neg.text);
        if (ids.empty() || !fits(set.condition, ids)) continue;
        set.negatives.push_back(std::move(ids));
      }
      if (set.negatives.empty()) {
        ++report.dropped;
        continue;
      }
      report.sets.push_back(std::move(set));
    }
  }
  return report;
}

void save_candidate_sets(const std::filesystem::path& path,
                         const std::vector<CandidateSet>& sets) {
  auto out = detail::open_output(path);
  for (const auto& set : sets) {
    ordered_json j{{"condition", set.condition},
                   {"positive", set.positive},
                   {"negatives", set.negatives}};
    out << j.dump() << '\n';
  }
}

std::vector<CandidateSet> load_candidate_sets(const std::filesystem::path& path) {
  std::vector<CandidateSet> sets;
  detail::for_each_jsonl(path, [&](std::size_t line_no, const ordered_json& j) {
    CandidateSet set;
    set.condition = field<std::vector<int>>(j, "condition", line_no);
    set.positive = field<std::vector<int>>(j, "positive", line_no);
    set.negatives = field<std::vector<std::vector<int>>>(j, "negatives", line_no);
    if (set.positive.empty()) throw MalformedLine(line_no, "empty positive candidate");
    if (set.negatives.empty()) throw MalformedLine(line_no, "candidate set has no negatives");
    for (const auto& neg : set.negatives)
      if (neg.empty()) throw MalformedLine(line_no, "empty negative candidate");
    sets.push_back(std::move(set));
  });
  return sets;
}

double contrastive_loss(const model::ModelParams& params, const CandidateSet& set,
                        model::ModelParams* grads, double grad_scale) {
  if (set.negatives.empty()) throw InvalidConfig("candidate set has no negatives");

  std::vector<ScoredSequence> rows;
  rows.push_back(continuation_row(set.condition, set.positive));
  for (const auto& neg : set.negatives) rows.push_back(continuation_row(set.condition, neg));

  std::vector<double> scores(rows.size());
  for (std::size_t c = 0; c < rows.size(); ++c) {
    const double nll = model::sequence_nll(params, rows[c].tokens, rows[c].mask, nullptr, 0.0);
    scores[c] = -nll / static_cast<double>(rows[c].target_len);
  }

  const double m = *std::max_element(scores.begin(), scores.end());
  double z = 0.0;
  for (double f : scores) z += std::exp(f - m);
  const double lse = m + std::log(z);
  const double loss = lse - scores[0];

  if (grads != nullptr) {
    for (std::size_t c = 0; c < rows.size(); ++c) {
      const double w = std::exp(scores[c] - lse);
      const double df = w - (c == 0 ? 1.0 : 0.0);  // dL/dscore_c
      // score = -nll / len, so the nll-gradient scale is -df / len.
      const double scale = -df / static_cast<double>(rows[c].target_len) * grad_scale;
      if (scale == 0.0) continue;
      model::sequence_nll(params, rows[c].tokens, rows[c].mask, grads, scale);
    }
  }
  return loss;
}

void write_metrics_csv(const std::filesystem::path& path, const std::vector<MetricsRow>& rows) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path);
  if (!out) throw IoError("cannot open for writing: " + path.string());
  out << "step,logic_nll,lm_nll,total_nll,examples_seen\n";
  char buf[3 * 32];
  for (const auto& row : rows) {
    std::snprintf(buf, sizeof(buf), "%.9f,%.9f,%.9f", row.logic_nll, row.lm_nll, row.total_nll);
    out << row.step << ',' << buf << ',' << row.examples_seen << '\n';
  }
  if (!out) throw IoError("write failed: " + path.string());
}

TrainResult train_loop(const TrainConfig& config, const TrainInputs& inputs) {
  config.validate();
  if (inputs.logic.examples.empty()) throw EmptyDataset("no relation-pair examples");
  if (inputs.lm.examples.empty()) throw EmptyDataset("no language-model examples");
  if (config.objective == Objective::Contrastive && inputs.candidates.empty())
    throw EmptyDataset("contrastive objective needs candidate sets");

  model::ModelConfig mcfg;
  mcfg.vocab_size = inputs.vocab_size;
  mcfg.d_model = config.d_model;
  mcfg.n_layers = config.n_layers;
  mcfg.n_heads = config.n_heads;
  mcfg.context_window = config.context_window;
  mcfg.seed = config.seed;

  TrainResult result;
  result.params = model::init_params(mcfg);
  model::AdamState adam;

  // One fixed probe batch keeps the loss columns comparable across steps and
  // across objectives.
  Rng probe_rng(derive_seed(config.seed, "metrics-batch"));
  const dataset::Batch probe =
      dataset::sample_mixed_batch(inputs.logic, inputs.lm, config.batch_size, probe_rng);

  const std::filesystem::path ckpt_dir(config.checkpoint_dir);
  std::filesystem::create_directories(ckpt_dir);

  long examples_seen = 0;
  auto record = [&](long step) {
    const DualLoss probe_loss = dual_loss(result.params, probe, nullptr);
    result.metrics.push_back(
        {step, probe_loss.logic_nll, probe_loss.lm_nll, probe_loss.total(), examples_seen});
  };
  record(0);

  for (long t = 1; t <= config.steps; ++t) {
    Rng step_rng(derive_seed(config.seed, "step", static_cast<std::uint64_t>(t)));
    model::ModelParams grads = model::zeros_like(result.params);
    double step_loss = 0.0;

    switch (config.objective) {
      case Objective::LogicPlusLM: {
        const dataset::Batch batch =
            dataset::sample_mixed_batch(inputs.logic, inputs.lm, config.batch_size, step_rng);
        step_loss = dual_loss(result.params, batch, &grads).total();
        examples_seen += 2L * config.batch_size;
        break;
      }
      case Objective::LMOnly: {
        // Same sequence budget per step as the dual objective.
        const dataset::Batch batch =
            dataset::sample_lm_batch(inputs.lm, 2 * config.batch_size, step_rng);
        step_loss = lm_loss(result.params, batch, &grads);
        examples_seen += 2L * config.batch_size;
        break;
      }
      case Objective::Contrastive: {
        const double per_set = 1.0 / static_cast<double>(config.batch_size);
        double closs = 0.0;
        for (int j = 0; j < config.batch_size; ++j) {
          const auto& set = inputs.candidates[step_rng.index(inputs.candidates.size())];
          closs += contrastive_loss(result.params, set, &grads, per_set);
          examples_seen += 1 + static_cast<long>(set.negatives.size());
        }
        closs *= per_set;
        const dataset::Batch batch =
            dataset::sample_lm_batch(inputs.lm, config.batch_size, step_rng);
        step_loss = closs + lm_loss(result.params, batch, &grads);
        examples_seen += config.batch_size;
        break;
      }
    }

    if (!std::isfinite(step_loss))
      throw NanLoss("non-finite loss at step " + std::to_string(t) +
                    " (objective " + to_string(config.objective) + ", lr " +
                    std::to_string(config.lr) + ")");
    model::adam_step(result.params, grads, adam, config.lr);

    if (t % config.eval_every == 0 || t == config.steps) {
      record(t);
      log_debug("train step " + std::to_string(t) + " probe total " +
                std::to_string(result.metrics.back().total_nll));
    }
    if (t % config.eval_every == 0) {
      char name[32];
      std::snprintf(name, sizeof(name), "step-%06ld.ckpt", t);
      const auto path = ckpt_dir / name;
      model::save_checkpoint(result.params, path);
      result.checkpoints.push_back(path);
    }
  }

  const auto final_path = ckpt_dir / "final.ckpt";
  model::save_checkpoint(result.params, final_path);
  result.checkpoints.push_back(final_path);
  return result;
}

}  // namespace logicforge::train
