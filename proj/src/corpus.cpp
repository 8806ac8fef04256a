#include "lexhmm/corpus.hpp"

#include <fstream>
#include <sstream>

namespace lexhmm {
namespace {

std::vector<std::string> split_tabs(const std::string& line) {
  std::vector<std::string> out;
  std::size_t start = 0;
  while (true) {
    std::size_t tab = line.find('\t', start);
    if (tab == std::string::npos) {
      out.push_back(line.substr(start));
      return out;
    }
    out.push_back(line.substr(start, tab - start));
    start = tab + 1;
  }
}

[[noreturn]] void parse_error(const std::string& path, std::size_t line_no,
                              const std::string& what) {
  std::ostringstream os;
  os << path << ":" << line_no << ": " << what;
  throw std::runtime_error(os.str());
}

std::uint64_t fnv1a(std::uint64_t h, const void* data, std::size_t n) {
  const auto* p = static_cast<const unsigned char*>(data);
  for (std::size_t i = 0; i < n; ++i) {
    h ^= p[i];
    h *= 0x100000001b3ULL;
  }
  return h;
}

}  // namespace

std::vector<std::uint32_t> utf8_codepoints(const std::string& s) {
  std::vector<std::uint32_t> out;
  std::size_t i = 0;
  while (i < s.size()) {
    const unsigned char c = static_cast<unsigned char>(s[i]);
    std::size_t len = 1;
    std::uint32_t cp = c;
    if (c >= 0xF0) {
      len = 4;
      cp = c & 0x07u;
    } else if (c >= 0xE0) {
      len = 3;
      cp = c & 0x0Fu;
    } else if (c >= 0xC0) {
      len = 2;
      cp = c & 0x1Fu;
    }
    if (len > 1) {
      if (i + len > s.size()) len = 1;
      for (std::size_t k = 1; k < len; ++k) {
        const unsigned char cc = static_cast<unsigned char>(s[i + k]);
        if ((cc & 0xC0u) != 0x80u) {
          len = 1;
          break;
        }
      }
    }
    if (len == 1) {
      out.push_back(c);
    } else {
      for (std::size_t k = 1; k < len; ++k) {
        cp = (cp << 6) | (static_cast<unsigned char>(s[i + k]) & 0x3Fu);
      }
      out.push_back(cp);
    }
    i += len;
  }
  return out;
}

WordId Corpus::intern(const std::string& surface) {
  auto it = type_ids_.find(surface);
  if (it != type_ids_.end()) {
    types_[it->second].frequency += 1;
    return it->second;
  }
  const WordId id = static_cast<WordId>(types_.size());
  type_ids_.emplace(surface, id);
  types_.push_back({id, surface, 1});
  return id;
}

void Corpus::finalize() {
  sites_by_type_.assign(types_.size(), {});
  for (WordId w = 0; w < types_.size(); ++w) {
    sites_by_type_[w].reserve(types_[w].frequency);
  }
  for (std::uint32_t s = 0; s < sentences_.size(); ++s) {
    for (std::uint32_t i = 0; i < sentences_[s].size(); ++i) {
      sites_by_type_[sentences_[s][i]].push_back({s, i});
    }
  }
  // Character inventory in first-seen order, then word-to-character maps.
  type_chars_.resize(types_.size());
  for (WordId w = 0; w < types_.size(); ++w) {
    for (std::uint32_t cp : utf8_codepoints(types_[w].surface)) {
      auto [it, _] = char_ids_.emplace(cp, static_cast<CharId>(char_ids_.size()));
      type_chars_[w].push_back(it->second);
    }
  }
}

Corpus Corpus::read_conllx(const std::string& path, bool use_postag) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path);
  Corpus c;
  std::vector<WordId> sent;
  std::vector<std::uint32_t> sent_gold;
  std::string line;
  std::size_t line_no = 0;
  auto flush = [&] {
    if (!sent.empty()) {
      c.num_tokens_ += sent.size();
      c.sentences_.push_back(std::move(sent));
      c.gold_.push_back(std::move(sent_gold));
      sent.clear();
      sent_gold.clear();
    }
  };
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) {
      flush();
      continue;
    }
    const std::vector<std::string> cols = split_tabs(line);
    if (cols.size() < 10) parse_error(path, line_no, "expected 10 tab-separated columns");
    const std::string& form = cols[1];
    if (form.empty()) parse_error(path, line_no, "empty FORM column");
    const std::string& tag = use_postag ? cols[4] : cols[3];
    if (tag.empty()) parse_error(path, line_no, "empty tag column");
    sent.push_back(c.intern(form));
    auto [it, _] = c.gold_tag_ids_.emplace(tag, static_cast<std::uint32_t>(c.gold_tag_names_.size()));
    if (it->second == c.gold_tag_names_.size()) c.gold_tag_names_.push_back(tag);
    sent_gold.push_back(it->second);
  }
  flush();
  if (c.sentences_.empty()) throw std::runtime_error(path + ": empty corpus");
  c.finalize();
  return c;
}

Corpus Corpus::read_vertical(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path);
  Corpus c;
  std::vector<WordId> sent;
  std::vector<std::uint32_t> sent_gold;
  std::string line;
  std::size_t line_no = 0;
  bool any_gold = false;
  bool all_gold = true;
  auto flush = [&] {
    if (!sent.empty()) {
      c.num_tokens_ += sent.size();
      c.sentences_.push_back(std::move(sent));
      c.gold_.push_back(std::move(sent_gold));
      sent.clear();
      sent_gold.clear();
    }
  };
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) {
      flush();
      continue;
    }
    const std::vector<std::string> cols = split_tabs(line);
    if (cols.empty() || cols[0].empty()) parse_error(path, line_no, "empty FORM column");
    if (cols.size() > 2) parse_error(path, line_no, "expected at most 2 columns");
    sent.push_back(c.intern(cols[0]));
    if (cols.size() == 2 && !cols[1].empty()) {
      any_gold = true;
      auto [it, _] =
          c.gold_tag_ids_.emplace(cols[1], static_cast<std::uint32_t>(c.gold_tag_names_.size()));
      if (it->second == c.gold_tag_names_.size()) c.gold_tag_names_.push_back(cols[1]);
      sent_gold.push_back(it->second);
    } else {
      all_gold = false;
      sent_gold.push_back(0);
    }
  }
  flush();
  if (c.sentences_.empty()) throw std::runtime_error(path + ": empty corpus");
  if (!any_gold || !all_gold) {
    // Tag column absent (or partial): treat the corpus as unlabeled.
    if (any_gold && !all_gold) throw std::runtime_error(path + ": tag column present on only some lines");
    c.gold_.clear();
    c.gold_tag_names_.clear();
    c.gold_tag_ids_.clear();
  }
  c.finalize();
  return c;
}

std::optional<WordId> Corpus::lookup(const std::string& surface) const {
  auto it = type_ids_.find(surface);
  if (it == type_ids_.end()) return std::nullopt;
  return it->second;
}

const std::vector<Site>& Corpus::sites_of_type(WordId w) const {
  LEXHMM_CHECK(w < sites_by_type_.size(), "unknown word type id");
  return sites_by_type_[w];
}

std::vector<std::uint32_t> Corpus::gold_flat() const {
  std::vector<std::uint32_t> out;
  out.reserve(num_tokens_);
  for (const auto& s : gold_) out.insert(out.end(), s.begin(), s.end());
  return out;
}

std::uint64_t Corpus::fingerprint() const {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (const auto& sent : sentences_) {
    for (WordId w : sent) {
      const std::string& s = types_[w].surface;
      h = fnv1a(h, s.data(), s.size());
      h = fnv1a(h, "\x1f", 1);
    }
    h = fnv1a(h, "\x1e", 1);
  }
  return h;
}

void Corpus::write_vertical(const std::string& path,
                            const std::vector<std::vector<std::string>>& tags) const {
  LEXHMM_CHECK(tags.size() == sentences_.size(), "tag/sentence count mismatch");
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path);
  for (std::size_t s = 0; s < sentences_.size(); ++s) {
    LEXHMM_CHECK(tags[s].size() == sentences_[s].size(), "tag/token count mismatch");
    for (std::size_t i = 0; i < sentences_[s].size(); ++i) {
      out << types_[sentences_[s][i]].surface << '\t' << tags[s][i] << '\n';
    }
    out << '\n';
  }
  if (!out) throw std::runtime_error("write failed: " + path);
}

}  // namespace lexhmm
