#include "logicforge/augment.hpp"

#include <algorithm>
#include <set>
#include <thread>

#include "jsonl_util.hpp"
#include "logicforge/errors.hpp"

namespace logicforge::augment {

using detail::field;
using detail::ordered_json;

bool is_counterfactual(const MixedPair& p) {
  return std::holds_alternative<AugmentedPair>(p);
}

const miner::RelationInstance& direct_of(const MixedPair& p) {
  if (const auto* a = std::get_if<AugmentedPair>(&p)) return a->direct;
  return std::get<miner::LogicPair>(p).direct;
}

const miner::RelationInstance& indirect_of(const MixedPair& p) {
  if (const auto* a = std::get_if<AugmentedPair>(&p)) return a->indirect;
  return std::get<miner::LogicPair>(p).indirect;
}

const miner::LogicPair& base_of(const MixedPair& p) {
  if (const auto* a = std::get_if<AugmentedPair>(&p)) return a->base;
  return std::get<miner::LogicPair>(p);
}

std::vector<std::string> chain_entities(const miner::LogicPair& pair) {
  std::vector<std::string> chain = pair.indirect.entity_chain;
  for (const std::string& e : pair.direct.entity_chain)
    if (std::find(chain.begin(), chain.end(), e) == chain.end()) chain.push_back(e);
  return chain;
}

namespace {

// Splices replacements (parallel to the instance's mentions; empty string
// keeps the original surface) and recomputes every mention offset.
miner::RelationInstance splice_instance(const miner::RelationInstance& inst,
                                        const std::vector<std::string>& replacements,
                                        const std::vector<std::string>& new_entity_ids) {
  miner::RelationInstance out;
  out.kind = inst.kind;
  out.entity_chain = inst.entity_chain;
  out.sentence_indices = inst.sentence_indices;
  out.is_negative = inst.is_negative;
  std::string text;
  std::size_t cursor = 0;
  for (std::size_t i = 0; i < inst.mentions.size(); ++i) {
    const miner::TextMention& m = inst.mentions[i];
    text.append(inst.text, cursor, m.start - cursor);
    std::size_t new_start = text.size();
    if (replacements[i].empty())
      text.append(inst.text, m.start, m.end - m.start);
    else
      text.append(replacements[i]);
    const std::string& id = new_entity_ids[i].empty() ? m.entity_id : new_entity_ids[i];
    out.mentions.push_back({id, new_start, text.size()});
    cursor = m.end;
  }
  text.append(inst.text, cursor, inst.text.size() - cursor);
  out.text = std::move(text);
  return out;
}

miner::RelationInstance rewrite_with_map(const miner::RelationInstance& inst,
                                         const CounterfactualMap& map) {
  std::vector<std::string> replacements(inst.mentions.size());
  std::vector<std::string> ids(inst.mentions.size());
  for (std::size_t i = 0; i < inst.mentions.size(); ++i) {
    auto it = map.find(inst.mentions[i].entity_id);
    if (it != map.end()) replacements[i] = it->second.surface;
  }
  return splice_instance(inst, replacements, ids);
}

std::string restore_text(const miner::RelationInstance& rewritten,
                         const miner::RelationInstance& base, const CounterfactualMap& map) {
  std::vector<std::string> replacements(rewritten.mentions.size());
  std::vector<std::string> ids(rewritten.mentions.size());
  for (std::size_t i = 0; i < rewritten.mentions.size(); ++i) {
    if (map.count(rewritten.mentions[i].entity_id) == 0) continue;
    const miner::TextMention& b = base.mentions[i];
    replacements[i] = base.text.substr(b.start, b.end - b.start);
  }
  return splice_instance(rewritten, replacements, ids).text;
}

}  // namespace

CounterfactualMap sample_counterfactual_map(const miner::LogicPair& pair,
                                            const corpus::Paragraph& donor,
                                            const corpus::Gazetteer& gazetteer, Rng& rng) {
  if (donor.doc_id == pair.doc_id) throw SameDocument();
  std::vector<std::string> chain = chain_entities(pair);
  std::set<std::string> chain_set(chain.begin(), chain.end());
  std::set<std::string> donor_set;
  for (const corpus::EntityMention& m : donor.mentions)
    if (chain_set.count(m.entity_id) == 0) donor_set.insert(m.entity_id);
  std::vector<std::string> candidates(donor_set.begin(), donor_set.end());
  if (candidates.size() < chain.size())
    throw DonorTooSmall("donor offers " + std::to_string(candidates.size()) +
                        " usable entities, chain needs " + std::to_string(chain.size()));
  std::map<std::string, const corpus::Entity*> by_id;
  for (const corpus::Entity& e : gazetteer) by_id[e.id] = &e;
  std::vector<std::size_t> picks = rng.sample_indices(candidates.size(), chain.size());
  CounterfactualMap map;
  for (std::size_t i = 0; i < chain.size(); ++i) {
    const std::string& donor_id = candidates[picks[i]];
    auto it = by_id.find(donor_id);
    if (it == by_id.end()) throw InvalidConfig("donor entity missing from gazetteer: " + donor_id);
    map[chain[i]] = {donor_id, it->second->canonical};
  }
  return map;
}

AugmentedPair apply_counterfactual_map(const miner::LogicPair& pair,
                                       const CounterfactualMap& map) {
  std::set<std::string> targets;
  for (const auto& [orig, repl] : map) {
    if (!targets.insert(repl.entity_id).second)
      throw InvalidConfig("counterfactual map is not injective");
  }
  AugmentedPair out;
  out.base = pair;
  out.map = map;
  out.direct = rewrite_with_map(pair.direct, map);
  out.indirect = rewrite_with_map(pair.indirect, map);
  return out;
}

AugmentedPair counterfactualize(const miner::LogicPair& pair, const corpus::Paragraph& donor,
                                const corpus::Gazetteer& gazetteer, std::uint64_t seed) {
  Rng rng(seed);
  return apply_counterfactual_map(pair, sample_counterfactual_map(pair, donor, gazetteer, rng));
}

std::pair<std::string, std::string> invert_counterfactual(const AugmentedPair& pair) {
  return {restore_text(pair.direct, pair.base.direct, pair.map),
          restore_text(pair.indirect, pair.base.indirect, pair.map)};
}

std::vector<PoolSentence> build_negative_pool(const corpus::Corpus& corpus) {
  std::vector<PoolSentence> pool;
  for (const corpus::Paragraph& p : corpus) {
    std::map<int, std::vector<const corpus::EntityMention*>> by_sentence;
    for (const corpus::EntityMention& m : p.mentions) by_sentence[m.sentence_index].push_back(&m);
    for (const auto& [index, mentions] : by_sentence) {
      std::set<std::string> distinct;
      for (const corpus::EntityMention* m : mentions) distinct.insert(m->entity_id);
      if (distinct.size() < 2) continue;
      PoolSentence ps;
      ps.doc_id = p.doc_id;
      ps.para_id = p.para_id;
      ps.sentence_index = index;
      ps.text = p.sentences[index].text;
      for (const corpus::EntityMention* m : mentions)
        ps.mentions.push_back({m->entity_id, m->char_start, m->char_end});
      std::sort(ps.mentions.begin(), ps.mentions.end(),
                [](const miner::TextMention& a, const miner::TextMention& b) {
                  return a.start < b.start;
                });
      pool.push_back(std::move(ps));
    }
  }
  return pool;
}

miner::RelationInstance synthesize_negative(const miner::LogicPair& pair,
                                            const std::vector<PoolSentence>& pool, Rng& rng) {
  std::vector<const PoolSentence*> eligible;
  for (const PoolSentence& ps : pool)
    if (ps.doc_id != pair.doc_id || ps.para_id != pair.para_id) eligible.push_back(&ps);
  if (eligible.empty()) throw EmptyPool();

  auto anchor_surface = [&](const std::string& id) {
    for (const miner::TextMention& m : pair.direct.mentions)
      if (m.entity_id == id) return pair.direct.text.substr(m.start, m.end - m.start);
    throw InvalidConfig("direct instance does not mention anchor " + id);
  };

  for (int attempt = 0; attempt < 100; ++attempt) {
    const PoolSentence& chosen = *eligible[rng.index(eligible.size())];

    std::size_t first = 0;
    std::size_t second = chosen.mentions.size();
    for (std::size_t i = 1; i < chosen.mentions.size(); ++i) {
      if (chosen.mentions[i].entity_id != chosen.mentions[first].entity_id) {
        second = i;
        break;
      }
    }
    if (second == chosen.mentions.size()) throw EmptyPool();

    miner::RelationInstance source;
    source.kind = miner::RelationInstance::Kind::Direct;
    source.entity_chain = {pair.anchors.first, pair.anchors.second};
    source.sentence_indices = {chosen.sentence_index};
    source.text = chosen.text;
    source.mentions = chosen.mentions;
    source.is_negative = true;

    std::vector<std::string> replacements(source.mentions.size());
    std::vector<std::string> ids(source.mentions.size());
    replacements[first] = anchor_surface(pair.anchors.first);
    ids[first] = pair.anchors.first;
    replacements[second] = anchor_surface(pair.anchors.second);
    ids[second] = pair.anchors.second;
    miner::RelationInstance neg = splice_instance(source, replacements, ids);
    // it must contradict the pair, not restate either of its sides
    if (neg.text == pair.direct.text || neg.text == pair.indirect.text) continue;
    return neg;
  }
  throw EmptyPool();
}

std::vector<MixedPair> mix(const std::vector<miner::LogicPair>& normals,
                           const corpus::Corpus& corpus, const corpus::Gazetteer& gazetteer,
                           int cf_ratio, std::uint64_t seed, int jobs) {
  if (cf_ratio < 0) throw InvalidConfig("cf_ratio must be >= 0");
  std::vector<MixedPair> out;
  if (cf_ratio == 0) {
    for (const miner::LogicPair& p : normals) out.emplace_back(p);
    return out;
  }

  std::vector<std::set<std::string>> para_entities(corpus.size());
  for (std::size_t i = 0; i < corpus.size(); ++i)
    for (const corpus::EntityMention& m : corpus[i].mentions)
      para_entities[i].insert(m.entity_id);

  std::vector<std::vector<AugmentedPair>> variants(normals.size());
  auto process = [&](std::size_t i) {
    const miner::LogicPair& pair = normals[i];
    std::vector<std::string> chain = chain_entities(pair);
    std::set<std::string> chain_set(chain.begin(), chain.end());
    std::vector<std::size_t> eligible;
    for (std::size_t d = 0; d < corpus.size(); ++d) {
      if (corpus[d].doc_id == pair.doc_id) continue;
      std::size_t usable = 0;
      for (const std::string& e : para_entities[d])
        if (chain_set.count(e) == 0) ++usable;
      if (usable >= chain.size()) eligible.push_back(d);
    }
    if (eligible.size() < static_cast<std::size_t>(cf_ratio))
      throw DonorTooSmall("only " + std::to_string(eligible.size()) +
                          " eligible donor paragraphs for " + std::to_string(cf_ratio) +
                          " variants");
    Rng rng(derive_seed(seed, "mix", i));
    std::vector<std::size_t> picks = rng.sample_indices(eligible.size(), cf_ratio);
    for (std::size_t v = 0; v < picks.size(); ++v) {
      const corpus::Paragraph& donor = corpus[eligible[picks[v]]];
      CounterfactualMap map = sample_counterfactual_map(pair, donor, gazetteer, rng);
      variants[i].push_back(apply_counterfactual_map(pair, map));
    }
  };

  if (jobs < 1) jobs = 1;
  if (jobs == 1 || normals.size() < 2) {
    for (std::size_t i = 0; i < normals.size(); ++i) process(i);
  } else {
    std::vector<std::thread> workers;
    std::size_t per = (normals.size() + jobs - 1) / jobs;
    std::vector<std::exception_ptr> errors(jobs);
    for (int w = 0; w < jobs; ++w) {
      std::size_t lo = w * per;
      std::size_t hi = std::min(normals.size(), lo + per);
      if (lo >= hi) break;
      workers.emplace_back([&, w, lo, hi] {
        try {
          for (std::size_t i = lo; i < hi; ++i) process(i);
        } catch (...) {
          errors[w] = std::current_exception();
        }
      });
    }
    for (std::thread& t : workers) t.join();
    for (const std::exception_ptr& e : errors)
      if (e) std::rethrow_exception(e);
  }

  for (std::size_t i = 0; i < normals.size(); ++i) {
    out.emplace_back(normals[i]);
    for (AugmentedPair& v : variants[i]) out.emplace_back(std::move(v));
  }
  Rng shuffle_rng(derive_seed(seed, "mix-shuffle"));
  shuffle_rng.shuffle(out);
  return out;
}

void save_mixed(const std::vector<MixedPair>& mixed, const std::filesystem::path& path) {
  std::ofstream out = detail::open_output(path);
  for (const MixedPair& entry : mixed) {
    const miner::LogicPair& base = base_of(entry);
    ordered_json j;
    j["doc_id"] = base.doc_id;
    j["para_id"] = base.para_id;
    j["anchors"] = {base.anchors.first, base.anchors.second};
    j["direct"] = {{"sentences", base.direct.sentence_indices},
                   {"chain", base.direct.entity_chain}};
    j["indirect"] = {{"sentences", base.indirect.sentence_indices},
                     {"chain", base.indirect.entity_chain}};
    j["is_counterfactual"] = is_counterfactual(entry);
    ordered_json repl = ordered_json::object();
    if (const auto* a = std::get_if<AugmentedPair>(&entry)) {
      for (const auto& [orig, r] : a->map)
        repl[orig] = {{"entity_id", r.entity_id}, {"surface", r.surface}};
    }
    j["replacement"] = std::move(repl);
    j["direct_text"] = direct_of(entry).text;
    j["indirect_text"] = indirect_of(entry).text;
    out << j.dump() << "\n";
  }
}

std::vector<MixedPair> load_mixed(const std::filesystem::path& path,
                                  const corpus::Corpus& corpus) {
  std::map<std::pair<std::string, std::string>, const corpus::Paragraph*> index;
  for (const corpus::Paragraph& p : corpus) index[{p.doc_id, p.para_id}] = &p;
  std::vector<MixedPair> mixed;
  detail::for_each_jsonl(path, [&](std::size_t line_no, const ordered_json& j) {
    miner::LogicPair base;
    base.doc_id = field<std::string>(j, "doc_id", line_no);
    base.para_id = field<std::string>(j, "para_id", line_no);
    auto anchors = field<std::vector<std::string>>(j, "anchors", line_no);
    if (anchors.size() != 2) throw MalformedLine(line_no, "anchors must hold two entity ids");
    base.anchors = {anchors[0], anchors[1]};
    auto it = index.find({base.doc_id, base.para_id});
    if (it == index.end())
      throw MalformedLine(line_no, "entry references a paragraph missing from the corpus");
    for (const char* key : {"direct", "indirect"}) {
      if (!j.contains(key))
        throw MalformedLine(line_no, std::string("missing field \"") + key + "\"");
      const ordered_json& ij = j.at(key);
      miner::RelationInstance inst = miner::make_instance(
          *it->second,
          std::string(key) == "direct" ? miner::RelationInstance::Kind::Direct
                                       : miner::RelationInstance::Kind::Indirect,
          field<std::vector<std::string>>(ij, "chain", line_no),
          field<std::vector<int>>(ij, "sentences", line_no));
      if (std::string(key) == "direct")
        base.direct = std::move(inst);
      else
        base.indirect = std::move(inst);
    }
    bool cf = field<bool>(j, "is_counterfactual", line_no);
    if (!cf) {
      mixed.emplace_back(std::move(base));
      return;
    }
    if (!j.contains("replacement"))
      throw MalformedLine(line_no, "missing field \"replacement\"");
    CounterfactualMap map;
    for (const auto& [orig, r] : j.at("replacement").items()) {
      map[orig] = {field<std::string>(r, "entity_id", line_no),
                   field<std::string>(r, "surface", line_no)};
    }
    // Re-applying the map recovers the rewritten mention offsets; the stored
    // texts double as an integrity check on the file.
    AugmentedPair aug = apply_counterfactual_map(base, map);
    if (aug.direct.text != field<std::string>(j, "direct_text", line_no) ||
        aug.indirect.text != field<std::string>(j, "indirect_text", line_no))
      throw MalformedLine(line_no, "stored counterfactual text does not match its replacement map");
    mixed.emplace_back(std::move(aug));
  });
  return mixed;
}

}  // namespace logicforge::augment
