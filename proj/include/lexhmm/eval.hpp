#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "lexhmm/corpus.hpp"
#include "lexhmm/types.hpp"

namespace lexhmm {

// counts[predicted][gold] over tokens.
struct ContingencyTable {
  std::vector<std::vector<std::int64_t>> counts;
  std::int64_t total = 0;

  static ContingencyTable build(const std::vector<std::uint32_t>& pred,
                                const std::vector<std::uint32_t>& gold);
};

// Accuracy after mapping every predicted class to its most frequent gold
// tag; ties break toward the lowest gold id.
double many_to_one(const std::vector<std::uint32_t>& pred, const std::vector<std::uint32_t>& gold);

// Harmonic mean of homogeneity and completeness; components default to 1
// when the conditioning entropy is zero.
double v_measure(const std::vector<std::uint32_t>& pred, const std::vector<std::uint32_t>& gold);

// Observed ambiguity class per word type: the set of distinct tags over
// the type's occurrence sites.
std::vector<std::vector<std::uint32_t>> extract_classes(
    const std::vector<std::vector<std::uint32_t>>& tags, const Corpus& corpus);

struct ZipfRow {
  std::uint32_t rank = 0;       // 1-based, by descending type count
  std::uint32_t type_count = 0; // word types carrying this class
  std::vector<std::uint32_t> class_tags;
};

struct LogLogFit {
  double slope = 0.0;
  double intercept = 0.0;
  double r_squared = 0.0;
};

// Classes ranked by the number of word types assigned to them.
std::vector<ZipfRow> zipf_table(const std::vector<std::vector<std::uint32_t>>& classes_per_type);

// Least-squares fit of log(type count) against log(rank).
LogLogFit fit_log_log(const std::vector<ZipfRow>& table);

struct ClassReportRow {
  std::uint32_t rank = 0;
  std::vector<std::uint32_t> class_tags;
  std::uint32_t type_count = 0;
  // Most frequent word types in the class, each with the gold-tag token
  // proportions for that type (empty when the corpus has no gold).
  std::vector<std::pair<std::string, std::vector<double>>> top_types;
};

// Table-3-style report: one row per observed class, ranked by word-type
// count, with the most frequent member types and their gold proportions.
std::vector<ClassReportRow> class_report(const std::vector<std::vector<std::uint32_t>>& classes_per_type,
                                         const Corpus& corpus, std::size_t top_k = 5);

std::string format_class_report(const std::vector<ClassReportRow>& rows,
                                const std::vector<std::string>& tag_names,
                                const std::vector<std::string>& gold_names);

}  // namespace lexhmm
