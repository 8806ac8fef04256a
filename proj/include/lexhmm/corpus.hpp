#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <unordered_map>
#include <vector>

#include "lexhmm/types.hpp"

namespace lexhmm {

// Induced tag inventory. Ids 0..size-1 are the induced tags; boundary()
// is the distinguished $ tag used for sentence padding and end-of-sentence
// prediction.
struct Tagset {
  std::uint32_t size = 0;
  TagId boundary() const { return size; }
  std::uint32_t num_dishes() const { return size + 1; }  // induced tags plus $
};

struct WordType {
  WordId id = 0;
  std::string surface;
  std::uint32_t frequency = 0;
};

struct Site {
  std::uint32_t sentence;
  std::uint32_t position;
  bool operator==(const Site&) const = default;
};

// Immutable after load; safe for concurrent reads.
class Corpus {
 public:
  // CoNLL-X: ten tab-separated columns, blank line between sentences.
  // Gold labels come from CPOSTAG, or POSTAG when use_postag is set.
  static Corpus read_conllx(const std::string& path, bool use_postag = false);
  // Two-column vertical format: "form<TAB>tag", blank line between
  // sentences; the tag column is optional.
  static Corpus read_vertical(const std::string& path);

  std::size_t num_sentences() const { return sentences_.size(); }
  std::size_t num_tokens() const { return num_tokens_; }
  std::size_t num_types() const { return types_.size(); }
  const std::vector<std::vector<WordId>>& sentences() const { return sentences_; }
  const std::vector<WordId>& sentence(std::size_t i) const { return sentences_[i]; }

  const WordType& type(WordId w) const { return types_[w]; }
  const std::vector<WordType>& types() const { return types_; }
  std::optional<WordId> lookup(const std::string& surface) const;

  // Corpus-order occurrence sites of one word type.
  const std::vector<Site>& sites_of_type(WordId w) const;

  bool has_gold() const { return !gold_.empty(); }
  const std::vector<std::vector<std::uint32_t>>& gold() const { return gold_; }
  const std::vector<std::string>& gold_tag_names() const { return gold_tag_names_; }
  std::size_t num_gold_tags() const { return gold_tag_names_.size(); }
  std::vector<std::uint32_t> gold_flat() const;

  // Character inventory from the training surfaces plus one reserved
  // unknown slot; alphabet_size() excludes the end-of-word symbol, whose
  // id equals alphabet_size().
  std::uint32_t alphabet_size() const { return static_cast<std::uint32_t>(char_ids_.size()) + 1; }
  CharId unknown_char() const { return static_cast<CharId>(char_ids_.size()); }
  const std::vector<CharId>& type_chars(WordId w) const { return type_chars_[w]; }

  // Stable content fingerprint used to refuse checkpoint/corpus mismatches.
  std::uint64_t fingerprint() const;

  // Writes "form<TAB>tag" lines, one sentence per blank-line-separated
  // block; `tags` must be shaped like sentences().
  void write_vertical(const std::string& path,
                      const std::vector<std::vector<std::string>>& tags) const;

 private:
  WordId intern(const std::string& surface);
  void finalize();

  std::vector<std::vector<WordId>> sentences_;
  std::vector<WordType> types_;
  std::unordered_map<std::string, WordId> type_ids_;
  std::vector<std::vector<Site>> sites_by_type_;
  std::size_t num_tokens_ = 0;

  std::vector<std::vector<std::uint32_t>> gold_;
  std::vector<std::string> gold_tag_names_;
  std::unordered_map<std::string, std::uint32_t> gold_tag_ids_;

  std::unordered_map<std::uint32_t, CharId> char_ids_;  // code point -> id
  std::vector<std::vector<CharId>> type_chars_;
};

// Decodes UTF-8 into code points, falling back to the raw byte value on
// malformed input.
std::vector<std::uint32_t> utf8_codepoints(const std::string& s);

}  // namespace lexhmm
