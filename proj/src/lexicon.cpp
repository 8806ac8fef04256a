#include "lexhmm/lexicon.hpp"

#include <cmath>

namespace lexhmm {

std::string ClassRegistry::key(const std::vector<TagId>& tags) {
  std::string k;
  k.reserve(tags.size() * sizeof(TagId));
  for (TagId t : tags) k.append(reinterpret_cast<const char*>(&t), sizeof(TagId));
  return k;
}

ClassId ClassRegistry::intern(std::vector<TagId> tags) {
  LEXHMM_CHECK(!tags.empty(), "empty ambiguity class");
  std::sort(tags.begin(), tags.end());
  tags.erase(std::unique(tags.begin(), tags.end()), tags.end());
  const std::string k = key(tags);
  auto it = ids_.find(k);
  if (it != ids_.end()) return it->second;
  const ClassId id = static_cast<ClassId>(classes_.size());
  ids_.emplace(k, id);
  classes_.push_back(std::move(tags));
  return id;
}

double log_geometric_base_prob(std::uint32_t class_size, std::uint32_t num_tags,
                               double p_geom) {
  LEXHMM_CHECK(class_size >= 1 && class_size <= num_tags, "class size out of range");
  LEXHMM_CHECK(p_geom > 0.0 && p_geom <= 1.0, "p_geom out of (0,1]");
  const double m = static_cast<double>(class_size);
  const double n = static_cast<double>(num_tags);
  double log_size;
  if (p_geom == 1.0) {
    if (class_size != 1) return -std::numeric_limits<double>::infinity();
    log_size = 0.0;
  } else {
    // Truncated geometric: Z = 1 - (1-p)^num_tags.
    const double log_z = std::log1p(-std::pow(1.0 - p_geom, n));
    log_size = std::log(p_geom) + (m - 1.0) * std::log1p(-p_geom) - log_z;
  }
  const double log_binom =
      std::lgamma(n + 1.0) - std::lgamma(m + 1.0) - std::lgamma(n - m + 1.0);
  return log_size - log_binom;
}

double geometric_base_prob(std::uint32_t class_size, std::uint32_t num_tags, double p_geom) {
  return std::exp(log_geometric_base_prob(class_size, num_tags, p_geom));
}

}  // namespace lexhmm
