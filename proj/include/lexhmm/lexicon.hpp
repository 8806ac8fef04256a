#pragma once

#include <algorithm>
#include <cstdint>
#include <string>
#include <unordered_map>
#include <vector>

#include "lexhmm/types.hpp"

namespace lexhmm {

// Interned nonempty tag subsets. Identity is the sorted tag-id sequence,
// so {NN,VB} and {VB,NN} are the same dish in the class restaurant.
class ClassRegistry {
 public:
  ClassId intern(std::vector<TagId> tags);
  const std::vector<TagId>& tags(ClassId c) const { return classes_[c]; }
  std::uint32_t size_of(ClassId c) const { return static_cast<std::uint32_t>(classes_[c].size()); }
  bool contains(ClassId c, TagId t) const {
    const auto& v = classes_[c];
    return std::binary_search(v.begin(), v.end(), t);
  }
  std::size_t size() const { return classes_.size(); }

 private:
  static std::string key(const std::vector<TagId>& tags);
  std::vector<std::vector<TagId>> classes_;
  std::unordered_map<std::string, ClassId> ids_;
};

// Word type -> ambiguity class, plus the per-tag membership counts e_t
// that drive the uniform emission bases.
class Lexicon {
 public:
  void init(std::size_t num_types, std::uint32_t num_tags) {
    assignment_.assign(num_types, kInvalidId);
    type_count_with_tag_.assign(num_tags, 0);
  }

  ClassId class_of(WordId w) const { return assignment_[w]; }
  bool assigned(WordId w) const { return assignment_[w] != kInvalidId; }
  std::int32_t types_with_tag(TagId t) const { return type_count_with_tag_[t]; }

  void assign(WordId w, ClassId c, const ClassRegistry& reg) {
    LEXHMM_CHECK(assignment_[w] == kInvalidId, "type already assigned");
    assignment_[w] = c;
    for (TagId t : reg.tags(c)) type_count_with_tag_[t] += 1;
  }

  void unassign(WordId w, const ClassRegistry& reg) {
    LEXHMM_CHECK(assignment_[w] != kInvalidId, "type not assigned");
    for (TagId t : reg.tags(assignment_[w])) type_count_with_tag_[t] -= 1;
    assignment_[w] = kInvalidId;
  }

  const std::vector<ClassId>& assignments() const { return assignment_; }

 private:
  std::vector<ClassId> assignment_;
  std::vector<std::int32_t> type_count_with_tag_;
};

// Base distribution over nonempty classes: size m drawn from a geometric
// truncated to 1..num_tags, then uniform among the C(num_tags, m) classes
// of that size.
double log_geometric_base_prob(std::uint32_t class_size, std::uint32_t num_tags, double p_geom);
double geometric_base_prob(std::uint32_t class_size, std::uint32_t num_tags, double p_geom);

}  // namespace lexhmm
