#include "logicforge/dataset.hpp"

#include <algorithm>

#include "jsonl_util.hpp"
#include "logicforge/errors.hpp"

namespace logicforge::dataset {

using detail::field;
using detail::ordered_json;

const char* to_string(Direction d) {
  return d == Direction::DirectToIndirect ? "d2i" : "i2d";
}

Direction direction_from_string(const std::string& s) {
  if (s == "d2i") return Direction::DirectToIndirect;
  if (s == "i2d") return Direction::IndirectToDirect;
  throw InvalidConfig("unknown direction: " + s);
}

TrainingExample encode_pair(const std::string& condition_text, const std::string& target_text,
                            bool is_counterfactual, const corpus::Vocab& vocab,
                            Direction direction, int context_window) {
  TrainingExample ex;
  ex.condition = vocab.encode(condition_text);
  ex.target = vocab.encode(target_text);
  ex.direction = direction;
  ex.is_counterfactual = is_counterfactual;
  std::size_t total = ex.condition.size() + ex.target.size() + 3;  // BOS SEP EOS
  if (total > static_cast<std::size_t>(context_window))
    throw TooLong(total, context_window);
  if (ex.condition.empty() || ex.target.empty())
    throw InvalidConfig("pair with empty condition or target text");
  return ex;
}

std::vector<TrainingExample> encode_pair_both(const augment::MixedPair& pair,
                                              const corpus::Vocab& vocab, int context_window) {
  const std::string& direct = augment::direct_of(pair).text;
  const std::string& indirect = augment::indirect_of(pair).text;
  bool cf = augment::is_counterfactual(pair);
  return {encode_pair(direct, indirect, cf, vocab, Direction::DirectToIndirect, context_window),
          encode_pair(indirect, direct, cf, vocab, Direction::IndirectToDirect, context_window)};
}

LogicDataset build_logic_dataset(const std::vector<augment::MixedPair>& pairs,
                                 const corpus::Vocab& vocab, int context_window,
                                 EncodeReport* report) {
  LogicDataset ds;
  EncodeReport local;
  for (const augment::MixedPair& pair : pairs) {
    const std::string& direct = augment::direct_of(pair).text;
    const std::string& indirect = augment::indirect_of(pair).text;
    bool cf = augment::is_counterfactual(pair);
    struct Side {
      const std::string* cond;
      const std::string* tgt;
      Direction dir;
    };
    for (const Side& side : {Side{&direct, &indirect, Direction::DirectToIndirect},
                             Side{&indirect, &direct, Direction::IndirectToDirect}}) {
      try {
        ds.examples.push_back(
            encode_pair(*side.cond, *side.tgt, cf, vocab, side.dir, context_window));
        ++local.kept;
      } catch (const TooLong&) {
        ++local.dropped;
      }
    }
  }
  if (report != nullptr) *report = local;
  return ds;
}

LMDataset build_lm_dataset(const corpus::Corpus& corpus, const corpus::Vocab& vocab,
                           int context_window, EncodeReport* report) {
  LMDataset ds;
  EncodeReport local;
  for (const corpus::Paragraph& p : corpus) {
    std::vector<int> ids = vocab.encode(p.text);
    if (ids.empty()) {
      ++local.dropped;
      continue;
    }
    if (ids.size() + 2 > static_cast<std::size_t>(context_window)) {
      ++local.dropped;
      continue;
    }
    LMExample ex;
    ex.tokens.reserve(ids.size() + 2);
    ex.tokens.push_back(corpus::Vocab::kBos);
    ex.tokens.insert(ex.tokens.end(), ids.begin(), ids.end());
    ex.tokens.push_back(corpus::Vocab::kEos);
    ds.examples.push_back(std::move(ex));
    ++local.kept;
  }
  if (report != nullptr) *report = local;
  return ds;
}

std::vector<int> logic_row_tokens(const TrainingExample& ex) {
  std::vector<int> row;
  row.reserve(ex.condition.size() + ex.target.size() + 3);
  row.push_back(corpus::Vocab::kBos);
  row.insert(row.end(), ex.condition.begin(), ex.condition.end());
  row.push_back(corpus::Vocab::kSep);
  row.insert(row.end(), ex.target.begin(), ex.target.end());
  row.push_back(corpus::Vocab::kEos);
  return row;
}

std::vector<uint8_t> logic_row_mask(const TrainingExample& ex) {
  std::size_t len = ex.condition.size() + ex.target.size() + 3;
  std::vector<uint8_t> mask(len, 0);
  for (std::size_t i = ex.condition.size() + 2; i < len; ++i) mask[i] = 1;
  return mask;
}

namespace {

void push_row(Batch& batch, std::vector<int> tokens, std::vector<uint8_t> mask,
              Batch::RowKind kind) {
  batch.lengths.push_back(static_cast<int>(tokens.size()));
  batch.tokens.push_back(std::move(tokens));
  batch.mask.push_back(std::move(mask));
  batch.kinds.push_back(kind);
}

void pad_rows(Batch& batch) {
  std::size_t width = 0;
  for (const std::vector<int>& row : batch.tokens) width = std::max(width, row.size());
  for (std::size_t i = 0; i < batch.tokens.size(); ++i) {
    batch.tokens[i].resize(width, corpus::Vocab::kPad);
    batch.mask[i].resize(width, 0);
  }
}

std::vector<uint8_t> lm_row_mask(const LMExample& ex) {
  std::vector<uint8_t> mask(ex.tokens.size(), 1);
  mask[0] = 0;  // BOS is never a target
  return mask;
}

}  // namespace

Batch sample_mixed_batch(const LogicDataset& logic, const LMDataset& lm, int b, Rng& rng) {
  if (b < 1) throw InvalidConfig("batch size must be >= 1");
  if (logic.examples.empty()) throw EmptyDataset("logic dataset is empty");
  if (lm.examples.empty()) throw EmptyDataset("language-model dataset is empty");
  std::vector<std::pair<Batch::RowKind, std::size_t>> draws;
  draws.reserve(2 * b);
  for (int i = 0; i < b; ++i)
    draws.emplace_back(Batch::RowKind::Logic, rng.index(logic.examples.size()));
  for (int i = 0; i < b; ++i)
    draws.emplace_back(Batch::RowKind::LM, rng.index(lm.examples.size()));
  rng.shuffle(draws);
  Batch batch;
  for (const auto& [kind, idx] : draws) {
    if (kind == Batch::RowKind::Logic) {
      const TrainingExample& ex = logic.examples[idx];
      push_row(batch, logic_row_tokens(ex), logic_row_mask(ex), kind);
    } else {
      const LMExample& ex = lm.examples[idx];
      push_row(batch, ex.tokens, lm_row_mask(ex), kind);
    }
  }
  pad_rows(batch);
  return batch;
}

Batch sample_logic_batch(const LogicDataset& logic, int rows, Rng& rng) {
  if (rows < 1) throw InvalidConfig("batch size must be >= 1");
  if (logic.examples.empty()) throw EmptyDataset("logic dataset is empty");
  Batch batch;
  for (int i = 0; i < rows; ++i) {
    const TrainingExample& ex = logic.examples[rng.index(logic.examples.size())];
    push_row(batch, logic_row_tokens(ex), logic_row_mask(ex), Batch::RowKind::Logic);
  }
  pad_rows(batch);
  return batch;
}

Batch sample_lm_batch(const LMDataset& lm, int rows, Rng& rng) {
  if (rows < 1) throw InvalidConfig("batch size must be >= 1");
  if (lm.examples.empty()) throw EmptyDataset("language-model dataset is empty");
  Batch batch;
  for (int i = 0; i < rows; ++i) {
    const LMExample& ex = lm.examples[rng.index(lm.examples.size())];
    push_row(batch, ex.tokens, lm_row_mask(ex), Batch::RowKind::LM);
  }
  pad_rows(batch);
  return batch;
}

void save_logic_dataset(const LogicDataset& ds, const std::filesystem::path& path) {
  std::ofstream out = detail::open_output(path);
  for (const TrainingExample& ex : ds.examples) {
    ordered_json j;
    j["condition"] = ex.condition;
    j["target"] = ex.target;
    j["direction"] = to_string(ex.direction);
    j["is_counterfactual"] = ex.is_counterfactual;
    out << j.dump() << "\n";
  }
}

LogicDataset load_logic_dataset(const std::filesystem::path& path) {
  LogicDataset ds;
  detail::for_each_jsonl(path, [&](std::size_t line_no, const ordered_json& j) {
    TrainingExample ex;
    ex.condition = field<std::vector<int>>(j, "condition", line_no);
    ex.target = field<std::vector<int>>(j, "target", line_no);
    ex.direction = direction_from_string(field<std::string>(j, "direction", line_no));
    ex.is_counterfactual = field<bool>(j, "is_counterfactual", line_no);
    if (ex.condition.empty() || ex.target.empty())
      throw MalformedLine(line_no, "empty condition or target");
    ds.examples.push_back(std::move(ex));
  });
  return ds;
}

void save_lm_dataset(const LMDataset& ds, const std::filesystem::path& path) {
  std::ofstream out = detail::open_output(path);
  for (const LMExample& ex : ds.examples) {
    ordered_json j;
    j["tokens"] = ex.tokens;
    out << j.dump() << "\n";
  }
}

LMDataset load_lm_dataset(const std::filesystem::path& path) {
  LMDataset ds;
  detail::for_each_jsonl(path, [&](std::size_t line_no, const ordered_json& j) {
    LMExample ex;
    ex.tokens = field<std::vector<int>>(j, "tokens", line_no);
    if (ex.tokens.empty()) throw MalformedLine(line_no, "empty token list");
    ds.examples.push_back(std::move(ex));
  });
  return ds;
}

}  // namespace logicforge::dataset
