#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <vector>

namespace logicforge::corpus {

struct Entity {
  std::string id;
  std::string canonical;
  std::vector<std::string> aliases;
};

using Gazetteer = std::vector<Entity>;

struct Sentence {
  int index = 0;
  std::size_t char_offset = 0;  // into Paragraph::text
  std::string text;
};

struct EntityMention {
  std::string entity_id;
  int sentence_index = 0;
  std::size_t char_start = 0;  // into the sentence text
  std::size_t char_end = 0;    // exclusive
  std::string surface;

  bool operator==(const EntityMention&) const = default;
};

struct Paragraph {
  std::string doc_id;
  std::string para_id;
  std::string text;
  std::vector<Sentence> sentences;
  std::vector<EntityMention> mentions;  // filled by annotation, not serialized
};

using Corpus = std::vector<Paragraph>;

Corpus load_corpus(const std::filesystem::path& path);
void save_corpus(const Corpus& corpus, const std::filesystem::path& path);

Gazetteer load_gazetteer(const std::filesystem::path& path);
void save_gazetteer(const Gazetteer& gazetteer, const std::filesystem::path& path);

// Exact surface matching at word boundaries, case sensitive. Overlaps resolve
// to the longest match, ties to the earliest start, then the smallest entity
// id. Output is sorted by (sentence_index, char_start) and never overlaps.
std::vector<EntityMention> annotate_mentions(const Paragraph& paragraph,
                                             const Gazetteer& gazetteer);

// Annotates every paragraph in place. jobs > 1 splits work across threads;
// per-paragraph results are independent, so the output does not depend on jobs.
void annotate_corpus(Corpus& corpus, const Gazetteer& gazetteer, int jobs = 1);

// Word tokens are maximal runs of alphanumeric or non-ASCII bytes; every other
// non-space byte is a single-character token.
std::vector<std::string> tokenize(const std::string& text);

// Canonical spacing: tokens joined by single spaces.
std::string normalize_ws(const std::string& text);

class Vocab {
 public:
  static constexpr int kPad = 0;
  static constexpr int kUnk = 1;
  static constexpr int kBos = 2;
  static constexpr int kEos = 3;
  static constexpr int kSep = 4;
  static constexpr int kNumSpecials = 5;

  Vocab();
  // tokens: non-special entries in id order (id kNumSpecials + position).
  explicit Vocab(std::vector<std::string> tokens);

  int id_of(const std::string& token) const;  // kUnk when absent
  const std::string& token_of(int id) const;
  bool contains(const std::string& token) const;
  std::size_t size() const { return id_to_token_.size(); }

  // Word ids only, no specials; unknown words map to kUnk.
  std::vector<int> encode(const std::string& text) const;
  // Space-joined surface forms; special ids are skipped.
  std::string decode(const std::vector<int>& ids) const;

 private:
  std::vector<std::string> id_to_token_;
  std::map<std::string, int> token_to_id_;
};

// Ids by descending frequency, ties by lexicographic order; tokens with
// frequency < min_freq are left out and encode to kUnk.
Vocab build_vocab(const Corpus& corpus, int min_freq = 1);

void save_vocab(const Vocab& vocab, const std::filesystem::path& path);
Vocab load_vocab(const std::filesystem::path& path);

// Stable per-paragraph stream seed.
std::uint64_t paragraph_seed(std::uint64_t global_seed, const std::string& doc_id,
                             const std::string& para_id);

}  // namespace logicforge::corpus
