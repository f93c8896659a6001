#include "logicforge/corpus.hpp"

#include <algorithm>
#include <cctype>
#include <set>
#include <thread>
#include <tuple>

#include "jsonl_util.hpp"
#include "logicforge/errors.hpp"
#include "logicforge/rng.hpp"

namespace logicforge::corpus {

using detail::field;
using detail::ordered_json;

namespace {

bool is_word_byte(unsigned char c) {
  return std::isalnum(c) != 0 || c >= 0x80;
}

bool word_bounded(const std::string& text, std::size_t start, std::size_t end) {
  if (start > 0 && is_word_byte(text[start - 1])) return false;
  if (end < text.size() && is_word_byte(text[end])) return false;
  return true;
}

void validate_paragraph(const Paragraph& p, std::size_t line_no) {
  if (p.sentences.empty()) throw MalformedLine(line_no, "paragraph has no sentences");
  for (std::size_t i = 0; i < p.sentences.size(); ++i) {
    const Sentence& s = p.sentences[i];
    if (s.index != static_cast<int>(i))
      throw MalformedLine(line_no, "sentence indices are not contiguous from 0");
    if (s.text.empty()) throw MalformedLine(line_no, "empty sentence text");
    if (s.char_offset + s.text.size() > p.text.size() ||
        p.text.compare(s.char_offset, s.text.size(), s.text) != 0)
      throw MalformedLine(line_no, "sentence text does not match paragraph text at offset");
  }
}

}  // namespace

Corpus load_corpus(const std::filesystem::path& path) {
  Corpus corpus;
  std::set<std::pair<std::string, std::string>> seen;
  detail::for_each_jsonl(path, [&](std::size_t line_no, const ordered_json& j) {
    Paragraph p;
    p.doc_id = field<std::string>(j, "doc_id", line_no);
    p.para_id = field<std::string>(j, "para_id", line_no);
    p.text = field<std::string>(j, "text", line_no);
    if (!j.contains("sentences")) throw MalformedLine(line_no, "missing field \"sentences\"");
    for (const auto& sj : j.at("sentences")) {
      Sentence s;
      s.index = field<int>(sj, "index", line_no);
      s.char_offset = field<std::size_t>(sj, "char_offset", line_no);
      s.text = field<std::string>(sj, "text", line_no);
      p.sentences.push_back(std::move(s));
    }
    validate_paragraph(p, line_no);
    if (!seen.insert({p.doc_id, p.para_id}).second)
      throw MalformedLine(line_no, "duplicate (doc_id, para_id)");
    corpus.push_back(std::move(p));
  });
  if (corpus.empty()) throw EmptyCorpus();
  return corpus;
}

void save_corpus(const Corpus& corpus, const std::filesystem::path& path) {
  std::ofstream out = detail::open_output(path);
  for (const Paragraph& p : corpus) {
    ordered_json j;
    j["doc_id"] = p.doc_id;
    j["para_id"] = p.para_id;
    j["text"] = p.text;
    ordered_json sentences = ordered_json::array();
    for (const Sentence& s : p.sentences) {
      ordered_json sj;
      sj["index"] = s.index;
      sj["char_offset"] = s.char_offset;
      sj["text"] = s.text;
      sentences.push_back(std::move(sj));
    }
    j["sentences"] = std::move(sentences);
    out << j.dump() << "\n";
  }
}

Gazetteer load_gazetteer(const std::filesystem::path& path) {
  Gazetteer gazetteer;
  std::set<std::string> ids;
  detail::for_each_jsonl(path, [&](std::size_t line_no, const ordered_json& j) {
    Entity e;
    e.id = field<std::string>(j, "id", line_no);
    e.canonical = field<std::string>(j, "canonical", line_no);
    if (j.contains("aliases")) e.aliases = field<std::vector<std::string>>(j, "aliases", line_no);
    if (e.id.empty()) throw MalformedLine(line_no, "empty entity id");
    if (e.canonical.empty()) throw MalformedLine(line_no, "empty canonical surface");
    std::set<std::string> alias_set;
    for (const std::string& a : e.aliases) {
      if (a.empty()) throw MalformedLine(line_no, "empty alias");
      if (!alias_set.insert(a).second) throw MalformedLine(line_no, "duplicate alias");
    }
    if (!ids.insert(e.id).second) throw MalformedLine(line_no, "duplicate entity id");
    gazetteer.push_back(std::move(e));
  });
  if (gazetteer.empty()) throw EmptyGazetteer();
  return gazetteer;
}

void save_gazetteer(const Gazetteer& gazetteer, const std::filesystem::path& path) {
  std::ofstream out = detail::open_output(path);
  for (const Entity& e : gazetteer) {
    ordered_json j;
    j["id"] = e.id;
    j["canonical"] = e.canonical;
    j["aliases"] = e.aliases;
    out << j.dump() << "\n";
  }
}

std::vector<EntityMention> annotate_mentions(const Paragraph& paragraph,
                                             const Gazetteer& gazetteer) {
  if (gazetteer.empty()) throw EmptyGazetteer();
  std::vector<EntityMention> result;
  for (const Sentence& sentence : paragraph.sentences) {
    const std::string& text = sentence.text;
    std::vector<EntityMention> candidates;
    for (const Entity& entity : gazetteer) {
      std::vector<const std::string*> surfaces;
      surfaces.push_back(&entity.canonical);
      for (const std::string& a : entity.aliases) surfaces.push_back(&a);
      for (const std::string* surface : surfaces) {
        std::size_t pos = 0;
        while ((pos = text.find(*surface, pos)) != std::string::npos) {
          std::size_t end = pos + surface->size();
          if (word_bounded(text, pos, end)) {
            candidates.push_back({entity.id, sentence.index, pos, end, *surface});
          }
          ++pos;
        }
      }
    }
    // Longest first, ties by earliest start, then smallest entity id.
    std::sort(candidates.begin(), candidates.end(),
              [](const EntityMention& a, const EntityMention& b) {
                std::size_t la = a.char_end - a.char_start;
                std::size_t lb = b.char_end - b.char_start;
                return std::tie(lb, a.char_start, a.entity_id) <
                       std::tie(la, b.char_start, b.entity_id);
              });
    candidates.erase(std::unique(candidates.begin(), candidates.end()), candidates.end());
    std::vector<EntityMention> selected;
    for (const EntityMention& c : candidates) {
      bool overlaps = false;
      for (const EntityMention& s : selected) {
        if (c.char_start < s.char_end && s.char_start < c.char_end) {
          overlaps = true;
          break;
        }
      }
      if (!overlaps) selected.push_back(c);
    }
    result.insert(result.end(), selected.begin(), selected.end());
  }
  std::sort(result.begin(), result.end(), [](const EntityMention& a, const EntityMention& b) {
    return std::tie(a.sentence_index, a.char_start) < std::tie(b.sentence_index, b.char_start);
  });
  return result;
}

void annotate_corpus(Corpus& corpus, const Gazetteer& gazetteer, int jobs) {
  if (jobs < 1) jobs = 1;
  if (jobs == 1 || corpus.size() < 2) {
    for (Paragraph& p : corpus) p.mentions = annotate_mentions(p, gazetteer);
    return;
  }
  std::vector<std::thread> workers;
  std::size_t n = corpus.size();
  std::size_t per = (n + jobs - 1) / jobs;
  for (int w = 0; w < jobs; ++w) {
    std::size_t lo = w * per;
    std::size_t hi = std::min(n, lo + per);
    if (lo >= hi) break;
    workers.emplace_back([&corpus, &gazetteer, lo, hi] {
      for (std::size_t i = lo; i < hi; ++i)
        corpus[i].mentions = annotate_mentions(corpus[i], gazetteer);
    });
  }
  for (std::thread& t : workers) t.join();
}

std::vector<std::string> tokenize(const std::string& text) {
  std::vector<std::string> tokens;
  std::size_t i = 0;
  while (i < text.size()) {
    unsigned char c = text[i];
    if (std::isspace(c)) {
      ++i;
      continue;
    }
    if (is_word_byte(c)) {
      std::size_t j = i;
      while (j < text.size() && is_word_byte(static_cast<unsigned char>(text[j]))) ++j;
      tokens.push_back(text.substr(i, j - i));
      i = j;
    } else {
      tokens.push_back(text.substr(i, 1));
      ++i;
    }
  }
  return tokens;
}

std::string normalize_ws(const std::string& text) {
  std::vector<std::string> tokens = tokenize(text);
  std::string out;
  for (std::size_t i = 0; i < tokens.size(); ++i) {
    if (i > 0) out += ' ';
    out += tokens[i];
  }
  return out;
}

static const std::vector<std::string> kSpecialTokens = {"<pad>", "<unk>", "<bos>", "<eos>",
                                                        "<sep>"};

Vocab::Vocab() : id_to_token_(kSpecialTokens) {}

Vocab::Vocab(std::vector<std::string> tokens) : id_to_token_(kSpecialTokens) {
  id_to_token_.insert(id_to_token_.end(), tokens.begin(), tokens.end());
  for (std::size_t i = kNumSpecials; i < id_to_token_.size(); ++i) {
    if (!token_to_id_.emplace(id_to_token_[i], static_cast<int>(i)).second)
      throw InvalidConfig("duplicate vocabulary token: " + id_to_token_[i]);
  }
}

int Vocab::id_of(const std::string& token) const {
  auto it = token_to_id_.find(token);
  return it == token_to_id_.end() ? kUnk : it->second;
}

const std::string& Vocab::token_of(int id) const {
  if (id < 0 || id >= static_cast<int>(id_to_token_.size()))
    throw InvalidConfig("token id out of range: " + std::to_string(id));
  return id_to_token_[id];
}

bool Vocab::contains(const std::string& token) const {
  return token_to_id_.count(token) > 0;
}

std::vector<int> Vocab::encode(const std::string& text) const {
  std::vector<int> ids;
  for (const std::string& tok : tokenize(text)) ids.push_back(id_of(tok));
  return ids;
}

std::string Vocab::decode(const std::vector<int>& ids) const {
  std::string out;
  for (int id : ids) {
    if (id < kNumSpecials) continue;
    if (!out.empty()) out += ' ';
    out += token_of(id);
  }
  return out;
}

Vocab build_vocab(const Corpus& corpus, int min_freq) {
  if (min_freq < 1) throw InvalidConfig("min_freq must be >= 1");
  std::map<std::string, long> freq;
  for (const Paragraph& p : corpus)
    for (const std::string& tok : tokenize(p.text)) ++freq[tok];
  std::vector<std::pair<std::string, long>> kept;
  for (const auto& [tok, n] : freq)
    if (n >= min_freq) kept.emplace_back(tok, n);
  if (kept.empty()) throw EmptyVocab();
  std::sort(kept.begin(), kept.end(), [](const auto& a, const auto& b) {
    if (a.second != b.second) return a.second > b.second;
    return a.first < b.first;
  });
  std::vector<std::string> tokens;
  tokens.reserve(kept.size());
  for (const auto& [tok, n] : kept) tokens.push_back(tok);
  return Vocab(std::move(tokens));
}

void save_vocab(const Vocab& vocab, const std::filesystem::path& path) {
  std::ofstream out = detail::open_output(path);
  ordered_json j;
  ordered_json tokens = ordered_json::array();
  for (std::size_t i = 0; i < vocab.size(); ++i)
    tokens.push_back(vocab.token_of(static_cast<int>(i)));
  j["tokens"] = std::move(tokens);
  out << j.dump(2) << "\n";
}

Vocab load_vocab(const std::filesystem::path& path) {
  std::ifstream in = detail::open_input(path);
  ordered_json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw MalformedLine(1, std::string("invalid JSON: ") + e.what());
  }
  auto all = field<std::vector<std::string>>(j, "tokens", 1);
  if (all.size() < Vocab::kNumSpecials ||
      !std::equal(kSpecialTokens.begin(), kSpecialTokens.end(), all.begin()))
    throw MalformedLine(1, "vocabulary file does not start with the special tokens");
  return Vocab(std::vector<std::string>(all.begin() + Vocab::kNumSpecials, all.end()));
}

std::uint64_t paragraph_seed(std::uint64_t global_seed, const std::string& doc_id,
                             const std::string& para_id) {
  return mix64(derive_seed(global_seed, doc_id) ^ fnv1a64(para_id));
}

}  // namespace logicforge::corpus
