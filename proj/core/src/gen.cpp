#include "logicforge/gen.hpp"

#include <algorithm>
#include <cctype>
#include <cstdio>
#include <set>
#include <tuple>

#include "logicforge/errors.hpp"
#include "logicforge/rng.hpp"

namespace logicforge::corpus {

namespace {

const std::vector<std::string> kSyllables = {"ba",  "ce",  "di",  "fo",  "gu",  "ka", "lem",
                                             "mo",  "nu",  "pra", "ri",  "sol", "ta", "ve",
                                             "wi",  "xo",  "yu",  "zan", "dor", "mel"};

const std::vector<std::string> kVerbs = {"met", "visited", "praised", "hired", "trained",
                                         "guided"};

const std::vector<std::string> kPlaces = {"Tarim", "Veyra", "Korun", "Selte", "Ardun",
                                          "Miravel"};

const std::vector<std::string> kFillers = {
    "The market closed early .",      "Rain fell through the night .",
    "The council met at dawn .",      "Ships waited in the harbor .",
    "The harvest lasted nine days .", "Snow covered the old road .",
    "The archive opened after repairs .", "Lanterns burned until morning ."};

const std::vector<std::string> kSoloLines = {
    "kept to the north road .", "stayed at the river inn .",
    "wrote letters all winter .", "sold maps at the fair ."};

std::string entity_name(int i) {
  int n = static_cast<int>(kSyllables.size());
  std::string name = kSyllables[i % n] + kSyllables[(i / n) % n] + kSyllables[(i / (n * n)) % n];
  name[0] = static_cast<char>(std::toupper(static_cast<unsigned char>(name[0])));
  return name;
}

std::string relation_sentence(const std::string& x, const std::string& y, int verb, int place,
                              Rng& rng) {
  std::string s = x + " " + kVerbs[verb] + " " + y;
  if (place >= 0 && rng.real01() < 0.3) s += " in " + kPlaces[place];
  return s + " .";
}

int sample_hops(Rng& rng) {
  double r = rng.real01();
  if (r < 0.87) return 2;
  if (r < 0.99) return 3;
  return 4;
}

// A fixed relational world shared by every paragraph of one corpus: a sparse
// graph over the entity pool whose edges carry a fixed verb and place.
// Paragraphs express walks through this graph, so which entities can link two
// anchors is stable corpus-wide and a model can actually learn it; the direct
// sentence's verb is the modular sum of the walk's edge verbs, which ties the
// two relation forms together.
struct World {
  std::vector<std::vector<int>> neighbors;
  std::map<std::pair<int, int>, int> edge_verb;
  std::map<std::pair<int, int>, int> edge_place;

  static std::pair<int, int> key(int a, int b) { return a < b ? std::pair{a, b} : std::pair{b, a}; }
  bool has_edge(int a, int b) const { return edge_verb.count(key(a, b)) > 0; }
  int verb(int a, int b) const { return edge_verb.at(key(a, b)); }
  int place(int a, int b) const { return edge_place.at(key(a, b)); }
};

World build_world(int pool, std::uint64_t seed) {
  World w;
  Rng rng(derive_seed(seed, "world"));
  std::set<std::pair<int, int>> edges;
  auto add = [&](int a, int b) {
    if (a == b) return;
    edges.insert(World::key(a, b));
  };
  // ring for connectivity, random chords up to an average degree of five
  for (int i = 0; i < pool; ++i) add(i, (i + 1) % pool);
  const std::size_t want = static_cast<std::size_t>(pool) * 5 / 2;
  for (int guard = 0; edges.size() < want && guard < 100 * pool; ++guard)
    add(static_cast<int>(rng.index(pool)), static_cast<int>(rng.index(pool)));

  w.neighbors.assign(pool, {});
  for (const auto& [a, b] : edges) {
    w.neighbors[a].push_back(b);
    w.neighbors[b].push_back(a);
    w.edge_verb[{a, b}] = static_cast<int>(rng.index(kVerbs.size()));
    w.edge_place[{a, b}] = static_cast<int>(rng.index(kPlaces.size()));
  }
  for (auto& ns : w.neighbors) std::sort(ns.begin(), ns.end());
  return w;
}

// Simple walk of `hops` edges; endpoints that are themselves linked are
// rejected (while attempts remain) so a mined direct sentence never competes
// with a world edge for the same entity pair.
std::vector<int> sample_walk(const World& world, int pool, int hops, Rng& rng) {
  for (int attempt = 0; attempt < 500; ++attempt) {
    std::vector<int> walk{static_cast<int>(rng.index(pool))};
    for (int h = 0; h < hops; ++h) {
      std::vector<int> open;
      for (int nb : world.neighbors[walk.back()])
        if (std::find(walk.begin(), walk.end(), nb) == walk.end()) open.push_back(nb);
      if (open.empty()) break;
      walk.push_back(open[rng.index(open.size())]);
    }
    if (static_cast<int>(walk.size()) != hops + 1) continue;
    if (attempt < 250 && world.has_edge(walk.front(), walk.back())) continue;
    return walk;
  }
  throw InvalidConfig("entity world is too small for the requested chain length");
}

// Exhaustive reference enumeration of logically consistent pairs; this stays
// independent of the miner's search so the two act as cross-checks.
struct RefState {
  std::map<int, std::set<std::string>> sentence_entities;
  std::map<std::pair<std::string, std::string>, std::set<int>> edges;
  std::map<std::string, std::set<std::string>> neighbors;
};

void ref_paths(const RefState& st, const std::string& cur, const std::string& target, int l_max,
               std::vector<std::string>& path, std::vector<std::vector<std::string>>& out) {
  if (cur == target && path.size() >= 3) {
    out.push_back(path);
    return;
  }
  if (static_cast<int>(path.size()) > l_max) return;
  auto it = st.neighbors.find(cur);
  if (it == st.neighbors.end()) return;
  for (const std::string& next : it->second) {
    if (next != target && std::find(path.begin(), path.end(), next) != path.end()) continue;
    if (next == target && path.size() < 2) continue;
    if (std::find(path.begin(), path.end(), next) != path.end()) continue;
    path.push_back(next);
    ref_paths(st, next, target, l_max, path, out);
    path.pop_back();
  }
}

void ref_assignments(const RefState& st, const std::vector<std::string>& chain, int direct,
                     std::size_t pos, std::vector<int>& acc,
                     std::vector<std::vector<int>>& out) {
  if (pos + 1 == chain.size()) {
    out.push_back(acc);
    return;
  }
  const std::string& u = chain[pos];
  const std::string& v = chain[pos + 1];
  auto key = u < v ? std::make_pair(u, v) : std::make_pair(v, u);
  auto it = st.edges.find(key);
  if (it == st.edges.end()) return;
  for (int s : it->second) {
    if (s == direct) continue;
    if (std::find(acc.begin(), acc.end(), s) != acc.end()) continue;
    bool exact = true;
    const std::set<std::string>& ents = st.sentence_entities.at(s);
    for (const std::string& e : chain) {
      bool mentioned = ents.count(e) > 0;
      bool endpoint = (e == u || e == v);
      if (mentioned != endpoint) {
        exact = false;
        break;
      }
    }
    if (!exact) continue;
    acc.push_back(s);
    ref_assignments(st, chain, direct, pos + 1, acc, out);
    acc.pop_back();
  }
}

std::vector<miner::LogicPair> reference_pairs(const Paragraph& paragraph, int l_max) {
  RefState st;
  for (const EntityMention& m : paragraph.mentions)
    st.sentence_entities[m.sentence_index].insert(m.entity_id);
  for (const auto& [index, ents] : st.sentence_entities) {
    for (auto a = ents.begin(); a != ents.end(); ++a) {
      for (auto b = std::next(a); b != ents.end(); ++b) {
        st.edges[{*a, *b}].insert(index);
        st.neighbors[*a].insert(*b);
        st.neighbors[*b].insert(*a);
      }
    }
  }
  std::vector<miner::LogicPair> pairs;
  for (const auto& [anchors, direct_sentences] : st.edges) {
    int direct = *direct_sentences.begin();
    std::vector<std::vector<std::string>> chains;
    std::vector<std::string> path{anchors.first};
    ref_paths(st, anchors.first, anchors.second, l_max, path, chains);

    using Candidate = std::tuple<std::size_t, std::vector<int>, std::vector<std::string>>;
    std::vector<Candidate> candidates;
    for (const std::vector<std::string>& chain : chains) {
      std::vector<int> acc;
      std::vector<std::vector<int>> assignments;
      ref_assignments(st, chain, direct, 0, acc, assignments);
      for (std::vector<int>& sseq : assignments)
        candidates.emplace_back(chain.size() - 1, std::move(sseq), chain);
    }
    if (candidates.empty()) continue;
    std::sort(candidates.begin(), candidates.end());
    miner::LogicPair pair;
    pair.doc_id = paragraph.doc_id;
    pair.para_id = paragraph.para_id;
    pair.anchors = anchors;
    pair.direct = miner::make_instance(paragraph, miner::RelationInstance::Kind::Direct,
                                       {anchors.first, anchors.second}, {direct});
    pair.indirect = miner::make_instance(paragraph, miner::RelationInstance::Kind::Indirect,
                                         std::get<2>(candidates.front()),
                                         std::get<1>(candidates.front()));
    pairs.push_back(std::move(pair));
  }
  return pairs;
}

}  // namespace

Synthetic gen_synthetic_corpus(const GenConfig& config) {
  if (config.n_docs < 1) throw InvalidConfig("n_docs must be >= 1");
  if (config.n_entities < 3) throw InvalidConfig("n_entities must be >= 3");
  if (config.n_sentences < 3) throw InvalidConfig("n_sentences must be >= 3");
  int pool = config.entity_pool > 0 ? config.entity_pool : 12 * config.n_entities;
  if (pool < 2 * config.n_entities)
    throw InvalidConfig("entity_pool must be at least twice n_entities");

  Synthetic out;
  std::set<std::string> names;
  for (int i = 0; i < pool; ++i) {
    std::string name = entity_name(i);
    if (!names.insert(name).second) throw InvalidConfig("entity name collision: " + name);
    char id[16];
    std::snprintf(id, sizeof id, "e%04d", i);
    out.gazetteer.push_back({id, name, {}});
  }
  for (const std::string& place : kPlaces)
    if (names.count(place) > 0) throw InvalidConfig("place collides with an entity: " + place);

  int n_verbs = static_cast<int>(kVerbs.size());
  const World world = build_world(pool, config.seed);
  for (int d = 0; d < config.n_docs; ++d) {
    char doc_id[16];
    std::snprintf(doc_id, sizeof doc_id, "doc-%04d", d);
    Paragraph p;
    p.doc_id = doc_id;
    p.para_id = "p0";
    Rng rng(paragraph_seed(config.seed, p.doc_id, p.para_id));

    int hops = std::min(sample_hops(rng), std::min(config.n_entities - 1, config.n_sentences - 1));
    const std::vector<int> walk = sample_walk(world, pool, hops, rng);

    // paragraph roster: the walk plus unrelated bystanders
    std::vector<int> roster = walk;
    while (static_cast<int>(roster.size()) < config.n_entities) {
      int e = static_cast<int>(rng.index(pool));
      if (std::find(roster.begin(), roster.end(), e) == roster.end()) roster.push_back(e);
    }
    auto name = [&](int idx) { return out.gazetteer[idx].canonical; };

    std::vector<std::string> sentences;
    int verb_sum = 0;
    for (int h = 0; h < hops; ++h) {
      int verb = world.verb(walk[h], walk[h + 1]);
      verb_sum += verb;
      sentences.push_back(relation_sentence(name(walk[h]), name(walk[h + 1]), verb,
                                            world.place(walk[h], walk[h + 1]), rng));
    }
    sentences.push_back(relation_sentence(name(walk[0]), name(walk[hops]), verb_sum % n_verbs,
                                          static_cast<int>(rng.index(kPlaces.size())), rng));

    // side edges of the world that happen to fall inside this roster
    std::vector<std::pair<int, int>> side;
    for (std::size_t a = 0; a < roster.size(); ++a)
      for (std::size_t b = a + 1; b < roster.size(); ++b) {
        const bool on_walk = a + 1 == b && b <= static_cast<std::size_t>(hops);
        if (!on_walk && world.has_edge(roster[a], roster[b])) side.push_back({roster[a], roster[b]});
      }
    int n_extra = config.n_sentences - hops - 1;
    int used = 0;
    // every bystander gets at least one line, so each paragraph presents its
    // full cast and stays usable as an augmentation donor
    std::set<int> mentioned(walk.begin(), walk.end());
    for (int e : roster) {
      if (used >= n_extra) break;
      if (mentioned.count(e) > 0) continue;
      std::vector<std::pair<int, int>> linked;
      for (const auto& [ea, eb] : side)
        if (ea == e || eb == e) linked.push_back({ea, eb});
      if (!linked.empty()) {
        const auto [ea, eb] = linked[rng.index(linked.size())];
        sentences.push_back(relation_sentence(name(ea), name(eb), world.verb(ea, eb),
                                              world.place(ea, eb), rng));
        mentioned.insert(ea);
        mentioned.insert(eb);
      } else {
        sentences.push_back(name(e) + " " + kSoloLines[rng.index(kSoloLines.size())]);
        mentioned.insert(e);
      }
      ++used;
    }
    for (; used < n_extra; ++used) {
      if (!side.empty() && rng.real01() < 0.5) {
        const auto [ea, eb] = side[rng.index(side.size())];
        sentences.push_back(relation_sentence(name(ea), name(eb), world.verb(ea, eb),
                                              world.place(ea, eb), rng));
      } else {
        sentences.push_back(kFillers[rng.index(kFillers.size())]);
      }
    }

    rng.shuffle(sentences);
    for (std::size_t i = 0; i < sentences.size(); ++i) {
      Sentence s;
      s.index = static_cast<int>(i);
      s.char_offset = p.text.size() + (p.text.empty() ? 0 : 1);
      s.text = sentences[i];
      if (!p.text.empty()) p.text += ' ';
      p.text += sentences[i];
      p.sentences.push_back(std::move(s));
    }
    p.mentions = annotate_mentions(p, out.gazetteer);
    out.corpus.push_back(std::move(p));
  }

  for (const Paragraph& p : out.corpus) {
    std::vector<miner::LogicPair> pairs = reference_pairs(p, 4);
    for (miner::LogicPair& pair : pairs) out.truth.push_back(std::move(pair));
  }
  return out;
}

}  // namespace logicforge::corpus
