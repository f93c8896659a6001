#include "logicforge/eval.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>
#include <optional>
#include <set>

#include "logicforge/errors.hpp"
#include "logicforge/rng.hpp"
#include "logicforge/train.hpp"

#include "jsonl_util.hpp"

namespace logicforge::eval {

using detail::field;
using detail::ordered_json;

namespace {

constexpr const char* kProbeQuestion =
    "Which continuation is logically consistent with the context?";

std::string options_block(const std::vector<std::string>& options) {
  if (options.size() > 26) throw InvalidConfig("more than 26 options");
  std::string out;
  for (std::size_t i = 0; i < options.size(); ++i) {
    out += static_cast<char>('A' + i);
    out += ": ";
    out += options[i];
    if (!options[i].ends_with('.')) out += '.';
    out += '\n';
  }
  return out;
}

std::string context_header(PromptStyle style) {
  switch (style) {
    case PromptStyle::Reclor:
      return "Answer the following question with the given context through logical "
             "reasoning:\n\nContext: ";
    case PromptStyle::Logiqa:
      return "Answer the following question with the given context:\n\nContext: ";
    case PromptStyle::Race:
      return "Answer the following question with the given context:\n\nArticle: ";
    case PromptStyle::Mmlu:
      break;
  }
  throw InvalidConfig("bad prompt style enum value");
}

}  // namespace

PromptStyle prompt_style_from_string(const std::string& s) {
  if (s == "reclor") return PromptStyle::Reclor;
  if (s == "logiqa") return PromptStyle::Logiqa;
  if (s == "race") return PromptStyle::Race;
  if (s == "mmlu") return PromptStyle::Mmlu;
  throw InvalidConfig("unknown prompt style: " + s);
}

std::string to_string(PromptStyle style) {
  switch (style) {
    case PromptStyle::Reclor: return "reclor";
    case PromptStyle::Logiqa: return "logiqa";
    case PromptStyle::Race: return "race";
    case PromptStyle::Mmlu: return "mmlu";
  }
  throw InvalidConfig("bad prompt style enum value");
}

std::string format_prompt(const MCQItem& item, PromptStyle style) {
  if (item.options.empty()) throw InvalidConfig("item has no options");
  if (style == PromptStyle::Mmlu)
    return "The following are multiple choice questions (with answers) about " + item.context +
           ".\n\n" + item.question + "\n" + options_block(item.options) + "Answer: ";
  return context_header(style) + item.context + "\nQuestion: " + item.question +
         "\nOptions:\n" + options_block(item.options) + "The answer is ";
}

std::string scoring_condition(const MCQItem& item, PromptStyle style) {
  if (style == PromptStyle::Mmlu)
    return "The following are multiple choice questions (with answers) about " + item.context +
           ".\n\n" + item.question + "\nAnswer: ";
  return context_header(style) + item.context + "\nQuestion: " + item.question +
         "\nThe answer is ";
}

OptionScores score_mcq(const model::ModelParams& params, const corpus::Vocab& vocab,
                       const MCQItem& item, PromptStyle style, bool length_normalize) {
  if (item.options.empty()) throw InvalidConfig("item has no options");
  const std::vector<int> condition =
      vocab.encode(scoring_condition(item, style));

  OptionScores result;
  result.scores.reserve(item.options.size());
  for (const auto& option : item.options) {
    const std::vector<int> candidate = vocab.encode(option);
    if (candidate.empty()) throw InvalidConfig("option tokenizes to nothing: " + option);
    const double mean_logp = train::token_score(params, condition, candidate);
    result.scores.push_back(length_normalize
                                ? mean_logp
                                : mean_logp * static_cast<double>(candidate.size()));
  }
  result.predicted = 0;
  for (std::size_t i = 1; i < result.scores.size(); ++i)
    if (result.scores[i] > result.scores[static_cast<std::size_t>(result.predicted)])
      result.predicted = static_cast<int>(i);
  return result;
}

EvalResult evaluate(const model::ModelParams& params, const corpus::Vocab& vocab,
                    const std::vector<MCQItem>& items, PromptStyle style,
                    bool length_normalize) {
  EvalResult result;
  result.predictions.reserve(items.size());
  for (const auto& item : items) {
    try {
      const OptionScores scores = score_mcq(params, vocab, item, style, length_normalize);
      result.predictions.push_back(scores.predicted);
      ++result.n_scored;
      if (scores.predicted == item.answer_index) ++result.n_correct;
    } catch (const SequenceTooLong&) {
      result.predictions.push_back(-1);
      ++result.n_skipped;
    }
  }
  if (result.n_scored > 0)
    result.accuracy =
        static_cast<double>(result.n_correct) / static_cast<double>(result.n_scored);
  return result;
}

RobustnessResult shuffle_robustness(const model::ModelParams& params, const corpus::Vocab& vocab,
                                    const std::vector<MCQItem>& items, PromptStyle style, int k,
                                    std::uint64_t seed, bool length_normalize) {
  if (k < 1) throw InvalidConfig("k must be at least 1");

  RobustnessResult result;
  for (int run = 0; run < k; ++run) {
    long correct = 0, scored = 0;
    for (std::size_t idx = 0; idx < items.size(); ++idx) {
      MCQItem item = items[idx];
      if (run > 0) {
        std::vector<std::size_t> perm(item.options.size());
        std::iota(perm.begin(), perm.end(), 0);
        Rng rng(derive_seed(derive_seed(seed, "shuffle", static_cast<std::uint64_t>(run)),
                            "item", idx));
        rng.shuffle(perm);
        MCQItem shuffled = item;
        for (std::size_t j = 0; j < perm.size(); ++j) {
          shuffled.options[j] = item.options[perm[j]];
          if (perm[j] == static_cast<std::size_t>(item.answer_index))
            shuffled.answer_index = static_cast<int>(j);
        }
        item = std::move(shuffled);
      }
      try {
        const OptionScores scores = score_mcq(params, vocab, item, style, length_normalize);
        ++scored;
        if (scores.predicted == item.answer_index) ++correct;
      } catch (const SequenceTooLong&) {
      }
    }
    result.runs.push_back(scored > 0 ? static_cast<double>(correct) / static_cast<double>(scored)
                                     : 0.0);
  }

  result.min_accuracy = *std::min_element(result.runs.begin(), result.runs.end());
  result.max_accuracy = *std::max_element(result.runs.begin(), result.runs.end());
  result.mean_accuracy = std::accumulate(result.runs.begin(), result.runs.end(), 0.0) /
                         static_cast<double>(result.runs.size());
  double var = 0.0;
  for (double a : result.runs) var += (a - result.mean_accuracy) * (a - result.mean_accuracy);
  result.stddev = std::sqrt(var / static_cast<double>(result.runs.size()));
  return result;
}

GapSets build_gap_sets(const std::vector<miner::LogicPair>& pairs,
                       const std::vector<augment::PoolSentence>& pool,
                       const corpus::Vocab& vocab, int context_window, std::uint64_t seed) {
  GapSets sets;
  auto encode = [&](const std::string& text) { return vocab.encode(text); };
  auto fits = [&](const std::vector<int>& cond, const std::vector<int>& tgt) {
    return !tgt.empty() &&
           static_cast<int>(cond.size() + tgt.size() + 2) <= context_window;
  };

  for (std::size_t i = 0; i < pairs.size(); ++i) {
    const auto& pair = pairs[i];
    Rng rng(derive_seed(seed, "gap", i));
    const miner::RelationInstance* sides[2][2] = {{&pair.direct, &pair.indirect},
                                                  {&pair.indirect, &pair.direct}};
    for (const auto& side : sides) {
      const std::vector<int> cond = encode(side[0]->text);
      const std::vector<int> tgt = encode(side[1]->text);
      if (!fits(cond, tgt)) continue;
      sets.consistent.push_back({cond, tgt});

      const miner::RelationInstance neg = augment::synthesize_negative(pair, pool, rng);
      const std::vector<int> neg_ids = encode(neg.text);
      if (fits(cond, neg_ids)) sets.inconsistent.push_back({cond, neg_ids});
    }
  }
  return sets;
}

GapResult consistency_gap(const model::ModelParams& params, const GapSets& sets) {
  if (sets.consistent.empty()) throw EmptyDataset("no consistent examples");
  if (sets.inconsistent.empty()) throw EmptyDataset("no inconsistent examples");

  auto mean_nll = [&](const std::vector<GapExample>& examples) {
    double sum = 0.0;
    for (const auto& ex : examples) sum += -train::token_score(params, ex.condition, ex.target);
    return sum / static_cast<double>(examples.size());
  };

  GapResult result;
  result.nll_consistent = mean_nll(sets.consistent);
  result.nll_inconsistent = mean_nll(sets.inconsistent);
  result.gap = result.nll_inconsistent - result.nll_consistent;
  return result;
}

std::vector<MCQItem> build_probe_benchmark(const std::vector<miner::LogicPair>& pairs,
                                           const corpus::Gazetteer& gazetteer, int n_distractors,
                                           std::uint64_t seed) {
  if (n_distractors < 1) throw InvalidConfig("n_distractors must be at least 1");
  if (pairs.size() < static_cast<std::size_t>(n_distractors))
    throw NotEnoughPairs(pairs.size(), static_cast<std::size_t>(n_distractors));

  std::map<std::string, std::string> surface;
  for (const corpus::Entity& e : gazetteer) surface[e.id] = e.canonical;

  // Recover each chain's per-hop verbs from its mention layout (two mentions
  // per hop sentence, in text order), and collect every attested
  // entity-verb-entity triple. Distractors rebuilt from these triples read as
  // fluently as the real chains, so the probe cannot be solved by surface
  // plausibility alone.
  struct ChainShape {
    std::vector<std::string> verbs;
    bool parsed = false;
    bool clean = false;  // parsed and no hop names a location
  };
  std::vector<ChainShape> shapes(pairs.size());
  using Edge = std::pair<std::string, std::string>;
  auto edge_key = [](const std::string& a, const std::string& b) {
    return a < b ? Edge{a, b} : Edge{b, a};
  };
  std::map<Edge, std::set<std::string>> edge_verbs;
  std::map<std::string, std::vector<std::pair<std::string, std::string>>> adjacency;

  for (std::size_t i = 0; i < pairs.size(); ++i) {
    const miner::RelationInstance& inst = pairs[i].indirect;
    const std::size_t hops = inst.entity_chain.size() - 1;
    if (inst.mentions.size() != 2 * hops) continue;
    ChainShape shape;
    shape.clean = true;
    bool ok = true;
    for (std::size_t h = 0; h < hops && ok; ++h) {
      const miner::TextMention& m1 = inst.mentions[2 * h];
      const miner::TextMention& m2 = inst.mentions[2 * h + 1];
      if (std::set<std::string>{m1.entity_id, m2.entity_id} !=
          std::set<std::string>{inst.entity_chain[h], inst.entity_chain[h + 1]}) {
        ok = false;
        break;
      }
      if (m2.start <= m1.end) {
        ok = false;
        break;
      }
      std::string verb = inst.text.substr(m1.end, m2.start - m1.end);
      while (!verb.empty() && verb.front() == ' ') verb.erase(verb.begin());
      while (!verb.empty() && verb.back() == ' ') verb.pop_back();
      if (verb.empty()) {
        ok = false;
        break;
      }
      shape.verbs.push_back(verb);
      const std::size_t seg_end = h + 1 < hops ? inst.mentions[2 * h + 2].start : inst.text.size();
      if (inst.text.substr(m2.end, seg_end - m2.end).find(" in ") != std::string::npos)
        shape.clean = false;
    }
    if (!ok) continue;
    shape.parsed = true;
    for (std::size_t h = 0; h < hops; ++h)
      edge_verbs[edge_key(inst.entity_chain[h], inst.entity_chain[h + 1])].insert(shape.verbs[h]);
    shapes[i] = std::move(shape);
  }
  for (const auto& [edge, verbs] : edge_verbs)
    for (const std::string& v : verbs) {
      adjacency[edge.first].push_back({edge.second, v});
      adjacency[edge.second].push_back({edge.first, v});
    }

  // location-free donor chains grouped by hop count
  std::map<std::size_t, std::vector<std::size_t>> clean_by_hops;
  for (std::size_t i = 0; i < pairs.size(); ++i)
    if (shapes[i].parsed && shapes[i].clean)
      clean_by_hops[shapes[i].verbs.size()].push_back(i);

  // first two distinct chain entities of an instance, in mention order
  auto leading_pair = [](const miner::RelationInstance& inst)
      -> std::optional<std::pair<std::string, std::string>> {
    const std::set<std::string> chain(inst.entity_chain.begin(), inst.entity_chain.end());
    std::vector<std::string> lead;
    for (const auto& m : inst.mentions) {
      if (chain.count(m.entity_id) == 0) continue;
      if (std::find(lead.begin(), lead.end(), m.entity_id) != lead.end()) continue;
      lead.push_back(m.entity_id);
      if (lead.size() == 2) return std::pair{lead[0], lead[1]};
    }
    return std::nullopt;
  };

  std::vector<MCQItem> items;
  for (std::size_t i = 0; i < pairs.size(); ++i) {
    const auto& pair = pairs[i];
    Rng rng(derive_seed(seed, "probe", i));

    const auto a1 = surface.find(pair.anchors.first);
    const auto a2 = surface.find(pair.anchors.second);
    if (a1 == surface.end() || a2 == surface.end()) continue;

    const std::vector<std::string>& chain = pair.indirect.entity_chain;
    const std::string& start_id = chain.front();
    const std::string& end_id = chain.back();

    std::set<std::string> used = {pair.indirect.text};
    std::vector<std::string> distractors;

    // a foreign chain whose own text is free of this item's anchors
    auto foreign = [&]() -> const miner::LogicPair* {
      const std::size_t j = rng.index(pairs.size());
      if (j == i) return nullptr;
      const miner::LogicPair& q = pairs[j];
      if (q.indirect.text.find(a1->second) != std::string::npos) return nullptr;
      if (q.indirect.text.find(a2->second) != std::string::npos) return nullptr;
      return &q;
    };

    // The strongest wrong option: a donor chain re-anchored onto attested
    // relations, so every step really holds, but the walk leaves one anchor
    // and arrives somewhere other than the opposite anchor.
    auto dead_end = [&]() -> std::optional<std::string> {
      const std::size_t hops = chain.size() - 1;
      const auto sources = clean_by_hops.find(hops);
      if (sources == clean_by_hops.end()) return std::nullopt;
      const std::size_t j = sources->second[rng.index(sources->second.size())];
      if (j == i) return std::nullopt;
      const miner::LogicPair& q = pairs[j];
      const std::vector<std::string>& verbs = shapes[j].verbs;
      const bool from_start = rng.index(2) == 0;

      std::vector<std::string> path{from_start ? start_id : end_id};
      for (std::size_t h = 0; h < hops; ++h) {
        const std::string& want = verbs[from_start ? h : hops - 1 - h];
        const auto adj = adjacency.find(path.back());
        if (adj == adjacency.end()) return std::nullopt;
        std::vector<const std::string*> open;
        for (const auto& [nbr, verb] : adj->second) {
          if (verb != want) continue;
          if (std::find(path.begin(), path.end(), nbr) != path.end()) continue;
          open.push_back(&nbr);
        }
        if (open.empty()) return std::nullopt;
        path.push_back(*open[rng.index(open.size())]);
      }
      if (path.back() == start_id || path.back() == end_id) return std::nullopt;
      if (!from_start) std::reverse(path.begin(), path.end());

      augment::CounterfactualMap map;
      for (std::size_t n = 0; n < path.size(); ++n)
        map[q.indirect.entity_chain[n]] = {path[n], surface.at(path[n])};
      return augment::apply_counterfactual_map(q, map).indirect.text;
    };

    // anchors spliced over a foreign chain: same entities, inconsistent relation
    auto spliced = [&]() -> std::optional<std::string> {
      const miner::LogicPair* q = foreign();
      if (q == nullptr) return std::nullopt;
      const auto lead = leading_pair(q->indirect);
      if (!lead) return std::nullopt;
      const bool flip = rng.index(2) == 1;
      const std::string& first_id = flip ? pair.anchors.second : pair.anchors.first;
      const std::string& second_id = flip ? pair.anchors.first : pair.anchors.second;
      const augment::CounterfactualMap map{
          {lead->first, {first_id, surface.at(first_id)}},
          {lead->second, {second_id, surface.at(second_id)}}};
      return augment::apply_counterfactual_map(*q, map).indirect.text;
    };

    // a foreign chain re-told about fresh entities
    auto renamed = [&]() -> std::optional<std::string> {
      const miner::LogicPair* q = foreign();
      if (q == nullptr) return std::nullopt;
      std::set<std::string> blocked(q->indirect.entity_chain.begin(),
                                    q->indirect.entity_chain.end());
      blocked.insert(q->direct.entity_chain.begin(), q->direct.entity_chain.end());
      blocked.insert(pair.anchors.first);
      blocked.insert(pair.anchors.second);
      augment::CounterfactualMap map;
      for (const std::string& src : q->indirect.entity_chain) {
        if (map.count(src) > 0) continue;
        bool found = false;
        for (int t = 0; t < 50 && !found; ++t) {
          const corpus::Entity& e = gazetteer[rng.index(gazetteer.size())];
          if (blocked.count(e.id) > 0) continue;
          map[src] = {e.id, e.canonical};
          blocked.insert(e.id);
          found = true;
        }
        if (!found) return std::nullopt;
      }
      return augment::apply_counterfactual_map(*q, map).indirect.text;
    };

    for (int attempt = 0;
         attempt < 400 && static_cast<int>(distractors.size()) < n_distractors; ++attempt) {
      const auto text = dead_end();
      if (text && used.insert(*text).second) distractors.push_back(*text);
    }
    for (int attempt = 0;
         attempt < 200 && static_cast<int>(distractors.size()) < n_distractors; ++attempt) {
      const auto text = spliced();
      if (text && used.insert(*text).second) distractors.push_back(*text);
    }
    for (int attempt = 0;
         attempt < 200 && static_cast<int>(distractors.size()) < n_distractors; ++attempt) {
      const auto text = renamed();
      if (text && used.insert(*text).second) distractors.push_back(*text);
    }
    if (static_cast<int>(distractors.size()) < n_distractors) continue;

    MCQItem item;
    item.context = pair.direct.text;
    item.question = kProbeQuestion;
    const std::size_t correct_pos = rng.index(distractors.size() + 1);
    for (std::size_t pos = 0, d = 0; pos <= distractors.size(); ++pos) {
      if (pos == correct_pos)
        item.options.push_back(pair.indirect.text);
      else
        item.options.push_back(distractors[d++]);
    }
    item.answer_index = static_cast<int>(correct_pos);
    items.push_back(std::move(item));
  }
  if (items.empty()) throw NotEnoughPairs(pairs.size(), static_cast<std::size_t>(n_distractors));
  return items;
}

void save_mcq_items(const std::filesystem::path& path, const std::vector<MCQItem>& items) {
  auto out = detail::open_output(path);
  for (const auto& item : items) {
    ordered_json j{{"context", item.context},
                   {"question", item.question},
                   {"options", item.options},
                   {"answer_index", item.answer_index}};
    out << j.dump() << '\n';
  }
}

std::vector<MCQItem> load_mcq_items(const std::filesystem::path& path) {
  std::vector<MCQItem> items;
  detail::for_each_jsonl(path, [&](std::size_t line_no, const ordered_json& j) {
    MCQItem item;
    item.context = field<std::string>(j, "context", line_no);
    item.question = field<std::string>(j, "question", line_no);
    item.options = field<std::vector<std::string>>(j, "options", line_no);
    item.answer_index = field<int>(j, "answer_index", line_no);
    if (item.question.empty()) throw MalformedLine(line_no, "empty question");
    if (item.options.size() < 2) throw MalformedLine(line_no, "need at least two options");
    for (const auto& opt : item.options)
      if (opt.empty()) throw MalformedLine(line_no, "empty option");
    if (item.answer_index < 0 ||
        item.answer_index >= static_cast<int>(item.options.size()))
      throw MalformedLine(line_no, "answer_index out of range");
    items.push_back(std::move(item));
  });
  return items;
}

void write_eval_report(const std::filesystem::path& path, const EvalResult& result) {
  auto out = detail::open_output(path);
  ordered_json j{{"accuracy", result.accuracy},
                 {"n_correct", result.n_correct},
                 {"n_scored", result.n_scored},
                 {"n_skipped", result.n_skipped}};
  out << j.dump(2) << '\n';
}

void write_robustness_report(const std::filesystem::path& path,
                             const RobustnessResult& result) {
  auto out = detail::open_output(path);
  ordered_json j{{"accuracy", result.runs.empty() ? 0.0 : result.runs.front()},
                 {"runs", result.runs},
                 {"min", result.min_accuracy},
                 {"max", result.max_accuracy},
                 {"mean", result.mean_accuracy},
                 {"stddev", result.stddev}};
  out << j.dump(2) << '\n';
}

void write_gap_report(const std::filesystem::path& path, const GapResult& result) {
  auto out = detail::open_output(path);
  ordered_json j{{"nll_consistent", result.nll_consistent},
                 {"nll_inconsistent", result.nll_inconsistent},
                 {"gap", result.gap}};
  out << j.dump(2) << '\n';
}

}  // namespace logicforge::eval
