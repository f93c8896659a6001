#include "logicforge/miner.hpp"

#include <algorithm>
#include <functional>
#include <optional>
#include <thread>

#include "jsonl_util.hpp"
#include "logicforge/errors.hpp"

namespace logicforge::miner {

using detail::field;
using detail::ordered_json;

EntityGraph build_graph(const corpus::Paragraph& paragraph) {
  EntityGraph graph;
  std::map<int, std::set<std::string>> by_sentence;
  for (const corpus::EntityMention& m : paragraph.mentions) {
    graph.nodes.insert(m.entity_id);
    by_sentence[m.sentence_index].insert(m.entity_id);
  }
  for (const auto& [index, entities] : by_sentence) {
    for (auto a = entities.begin(); a != entities.end(); ++a) {
      for (auto b = std::next(a); b != entities.end(); ++b) {
        graph.edges[{*a, *b}].insert(index);
      }
    }
  }
  return graph;
}

RelationInstance make_instance(const corpus::Paragraph& paragraph, RelationInstance::Kind kind,
                               std::vector<std::string> entity_chain,
                               std::vector<int> sentence_indices) {
  RelationInstance inst;
  inst.kind = kind;
  inst.entity_chain = std::move(entity_chain);
  inst.sentence_indices = std::move(sentence_indices);
  std::string text;
  for (std::size_t i = 0; i < inst.sentence_indices.size(); ++i) {
    int si = inst.sentence_indices[i];
    if (si < 0 || si >= static_cast<int>(paragraph.sentences.size()))
      throw InvalidConfig("sentence index out of range: " + std::to_string(si));
    const corpus::Sentence& sentence = paragraph.sentences[si];
    std::size_t base = text.size() + (text.empty() ? 0 : 1);
    if (!text.empty()) text += ' ';
    text += sentence.text;
    for (const corpus::EntityMention& m : paragraph.mentions) {
      if (m.sentence_index != si) continue;
      inst.mentions.push_back({m.entity_id, base + m.char_start, base + m.char_end});
    }
  }
  inst.text = std::move(text);
  std::sort(inst.mentions.begin(), inst.mentions.end(),
            [](const TextMention& a, const TextMention& b) { return a.start < b.start; });
  return inst;
}

namespace {

struct ChainCandidate {
  std::vector<int> sentences;
  std::vector<std::string> chain;
};

bool candidate_less(const ChainCandidate& a, const ChainCandidate& b) {
  if (a.sentences != b.sentences) return a.sentences < b.sentences;
  return a.chain < b.chain;
}

// Sentence usable for edge (u, v) inside the given chain: it must mention u
// and v and no other chain entity.
bool sentence_fits(const std::set<std::string>& sentence_entities,
                   const std::vector<std::string>& chain, const std::string& u,
                   const std::string& v) {
  for (const std::string& e : chain) {
    bool mentioned = sentence_entities.count(e) > 0;
    if (e == u || e == v) {
      if (!mentioned) return false;
    } else if (mentioned) {
      return false;
    }
  }
  return true;
}

// Lexicographically smallest sentence assignment for a fixed chain, found by
// trying indices in ascending order edge by edge.
bool assign_sentences(const std::vector<std::string>& chain,
                      const std::map<std::pair<std::string, std::string>, std::set<int>>& edges,
                      const std::map<int, std::set<std::string>>& sentence_entities,
                      int direct_sentence, std::size_t edge_pos, std::vector<int>& used) {
  if (edge_pos + 1 == chain.size()) return true;
  const std::string& u = chain[edge_pos];
  const std::string& v = chain[edge_pos + 1];
  auto key = u < v ? std::make_pair(u, v) : std::make_pair(v, u);
  auto it = edges.find(key);
  if (it == edges.end()) return false;
  for (int s : it->second) {
    if (s == direct_sentence) continue;
    if (std::find(used.begin(), used.end(), s) != used.end()) continue;
    if (!sentence_fits(sentence_entities.at(s), chain, u, v)) continue;
    used.push_back(s);
    if (assign_sentences(chain, edges, sentence_entities, direct_sentence, edge_pos + 1, used))
      return true;
    used.pop_back();
  }
  return false;
}

void enumerate_paths(const std::string& target, int hops_left,
                     const std::map<std::string, std::vector<std::string>>& adjacency,
                     std::vector<std::string>& path,
                     const std::function<void(const std::vector<std::string>&)>& emit) {
  const std::string& cur = path.back();
  auto it = adjacency.find(cur);
  if (it == adjacency.end()) return;
  for (const std::string& next : it->second) {
    if (hops_left == 1) {
      if (next == target) {
        path.push_back(next);
        emit(path);
        path.pop_back();
      }
      continue;
    }
    if (next == target) continue;
    if (std::find(path.begin(), path.end(), next) != path.end()) continue;
    path.push_back(next);
    enumerate_paths(target, hops_left - 1, adjacency, path, emit);
    path.pop_back();
  }
}

}  // namespace

std::vector<LogicPair> mine_pairs(const corpus::Paragraph& paragraph, int l_max) {
  if (l_max < 2) throw InvalidConfig("l_max must be >= 2");
  EntityGraph graph = build_graph(paragraph);

  std::map<int, std::set<std::string>> sentence_entities;
  for (const corpus::EntityMention& m : paragraph.mentions)
    sentence_entities[m.sentence_index].insert(m.entity_id);

  std::map<std::string, std::vector<std::string>> adjacency;
  for (const auto& [key, sentences] : graph.edges) {
    adjacency[key.first].push_back(key.second);
    adjacency[key.second].push_back(key.first);
  }
  for (auto& [node, neighbors] : adjacency) std::sort(neighbors.begin(), neighbors.end());

  std::vector<LogicPair> pairs;
  for (const auto& [anchors, direct_sentences] : graph.edges) {
    int direct_sentence = *direct_sentences.begin();
    std::optional<ChainCandidate> best;
    for (int hops = 2; hops <= l_max && !best; ++hops) {
      std::vector<std::string> path{anchors.first};
      enumerate_paths(anchors.second, hops, adjacency, path,
                      [&](const std::vector<std::string>& chain) {
                        std::vector<int> used;
                        if (!assign_sentences(chain, graph.edges, sentence_entities,
                                              direct_sentence, 0, used))
                          return;
                        ChainCandidate cand{used, chain};
                        if (!best || candidate_less(cand, *best)) best = std::move(cand);
                      });
    }
    if (!best) continue;
    LogicPair pair;
    pair.doc_id = paragraph.doc_id;
    pair.para_id = paragraph.para_id;
    pair.anchors = anchors;
    pair.direct = make_instance(paragraph, RelationInstance::Kind::Direct,
                                {anchors.first, anchors.second}, {direct_sentence});
    pair.indirect = make_instance(paragraph, RelationInstance::Kind::Indirect, best->chain,
                                  best->sentences);
    pairs.push_back(std::move(pair));
  }
  return pairs;
}

std::vector<LogicPair> mine_corpus(const corpus::Corpus& corpus, int l_max, int jobs) {
  if (jobs < 1) jobs = 1;
  std::vector<std::vector<LogicPair>> per_paragraph(corpus.size());
  if (jobs == 1 || corpus.size() < 2) {
    for (std::size_t i = 0; i < corpus.size(); ++i)
      per_paragraph[i] = mine_pairs(corpus[i], l_max);
  } else {
    std::vector<std::thread> workers;
    std::size_t per = (corpus.size() + jobs - 1) / jobs;
    for (int w = 0; w < jobs; ++w) {
      std::size_t lo = w * per;
      std::size_t hi = std::min(corpus.size(), lo + per);
      if (lo >= hi) break;
      workers.emplace_back([&corpus, &per_paragraph, l_max, lo, hi] {
        for (std::size_t i = lo; i < hi; ++i) per_paragraph[i] = mine_pairs(corpus[i], l_max);
      });
    }
    for (std::thread& t : workers) t.join();
  }
  std::vector<LogicPair> all;
  for (std::vector<LogicPair>& chunk : per_paragraph)
    for (LogicPair& p : chunk) all.push_back(std::move(p));
  return all;
}

std::map<int, long> chain_length_histogram(const std::vector<LogicPair>& pairs) {
  std::map<int, long> histogram;
  for (const LogicPair& p : pairs)
    ++histogram[static_cast<int>(p.indirect.sentence_indices.size())];
  return histogram;
}

void save_pairs(const std::vector<LogicPair>& pairs, const std::filesystem::path& path) {
  std::ofstream out = detail::open_output(path);
  for (const LogicPair& p : pairs) {
    ordered_json j;
    j["doc_id"] = p.doc_id;
    j["para_id"] = p.para_id;
    j["anchors"] = {p.anchors.first, p.anchors.second};
    j["direct"] = {{"sentences", p.direct.sentence_indices}, {"chain", p.direct.entity_chain}};
    j["indirect"] = {{"sentences", p.indirect.sentence_indices},
                     {"chain", p.indirect.entity_chain}};
    out << j.dump() << "\n";
  }
}

std::vector<LogicPair> load_pairs(const std::filesystem::path& path,
                                  const corpus::Corpus& corpus) {
  std::map<std::pair<std::string, std::string>, const corpus::Paragraph*> index;
  for (const corpus::Paragraph& p : corpus) index[{p.doc_id, p.para_id}] = &p;
  std::vector<LogicPair> pairs;
  detail::for_each_jsonl(path, [&](std::size_t line_no, const ordered_json& j) {
    LogicPair pair;
    pair.doc_id = field<std::string>(j, "doc_id", line_no);
    pair.para_id = field<std::string>(j, "para_id", line_no);
    auto anchors = field<std::vector<std::string>>(j, "anchors", line_no);
    if (anchors.size() != 2) throw MalformedLine(line_no, "anchors must hold two entity ids");
    pair.anchors = {anchors[0], anchors[1]};
    auto it = index.find({pair.doc_id, pair.para_id});
    if (it == index.end())
      throw MalformedLine(line_no, "pair references a paragraph missing from the corpus");
    for (const char* key : {"direct", "indirect"}) {
      if (!j.contains(key))
        throw MalformedLine(line_no, std::string("missing field \"") + key + "\"");
      const ordered_json& ij = j.at(key);
      auto sentences = field<std::vector<int>>(ij, "sentences", line_no);
      auto chain = field<std::vector<std::string>>(ij, "chain", line_no);
      RelationInstance inst =
          make_instance(*it->second,
                        std::string(key) == "direct" ? RelationInstance::Kind::Direct
                                                     : RelationInstance::Kind::Indirect,
                        std::move(chain), std::move(sentences));
      if (std::string(key) == "direct")
        pair.direct = std::move(inst);
      else
        pair.indirect = std::move(inst);
    }
    pairs.push_back(std::move(pair));
  });
  return pairs;
}

}  // namespace logicforge::miner
