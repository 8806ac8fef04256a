#include "lexhmm/eval.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <sstream>

namespace lexhmm {

ContingencyTable ContingencyTable::build(const std::vector<std::uint32_t>& pred,
                                         const std::vector<std::uint32_t>& gold) {
  LEXHMM_CHECK(pred.size() == gold.size(), "pred/gold length mismatch");
  std::uint32_t np = 0;
  std::uint32_t ng = 0;
  for (std::uint32_t p : pred) np = std::max(np, p + 1);
  for (std::uint32_t g : gold) ng = std::max(ng, g + 1);
  ContingencyTable t;
  t.counts.assign(np, std::vector<std::int64_t>(ng, 0));
  for (std::size_t i = 0; i < pred.size(); ++i) t.counts[pred[i]][gold[i]] += 1;
  t.total = static_cast<std::int64_t>(pred.size());
  return t;
}

double many_to_one(const std::vector<std::uint32_t>& pred,
                   const std::vector<std::uint32_t>& gold) {
  const ContingencyTable t = ContingencyTable::build(pred, gold);
  std::int64_t correct = 0;
  for (const auto& row : t.counts) {
    std::int64_t best = 0;
    for (std::int64_t c : row) best = std::max(best, c);  // lowest gold id wins ties
    correct += best;
  }
  return t.total == 0 ? 0.0 : static_cast<double>(correct) / static_cast<double>(t.total);
}

double v_measure(const std::vector<std::uint32_t>& pred, const std::vector<std::uint32_t>& gold) {
  const ContingencyTable t = ContingencyTable::build(pred, gold);
  if (t.total == 0) return 0.0;
  const double n = static_cast<double>(t.total);
  const std::size_t np = t.counts.size();
  const std::size_t ng = np == 0 ? 0 : t.counts[0].size();
  std::vector<double> pc(np, 0.0), gc(ng, 0.0);
  for (std::size_t p = 0; p < np; ++p) {
    for (std::size_t g = 0; g < ng; ++g) {
      pc[p] += static_cast<double>(t.counts[p][g]);
      gc[g] += static_cast<double>(t.counts[p][g]);
    }
  }
  auto entropy = [&](const std::vector<double>& counts) {
    double h = 0.0;
    for (double c : counts) {
      if (c > 0.0) h -= (c / n) * std::log(c / n);
    }
    return h;
  };
  const double h_gold = entropy(gc);
  const double h_pred = entropy(pc);
  double h_gold_given_pred = 0.0;
  double h_pred_given_gold = 0.0;
  for (std::size_t p = 0; p < np; ++p) {
    for (std::size_t g = 0; g < ng; ++g) {
      const double c = static_cast<double>(t.counts[p][g]);
      if (c <= 0.0) continue;
      h_gold_given_pred -= (c / n) * std::log(c / pc[p]);
      h_pred_given_gold -= (c / n) * std::log(c / gc[g]);
    }
  }
  const double homogeneity = h_gold == 0.0 ? 1.0 : 1.0 - h_gold_given_pred / h_gold;
  const double completeness = h_pred == 0.0 ? 1.0 : 1.0 - h_pred_given_gold / h_pred;
  if (homogeneity + completeness == 0.0) return 0.0;
  return 2.0 * homogeneity * completeness / (homogeneity + completeness);
}

std::vector<std::vector<std::uint32_t>> extract_classes(
    const std::vector<std::vector<std::uint32_t>>& tags, const Corpus& corpus) {
  LEXHMM_CHECK(tags.size() == corpus.num_sentences(), "tags/corpus shape mismatch");
  std::vector<std::vector<std::uint32_t>> classes(corpus.num_types());
  for (WordId w = 0; w < corpus.num_types(); ++w) {
    std::vector<std::uint32_t> seen;
    for (const Site& s : corpus.sites_of_type(w)) {
      seen.push_back(tags[s.sentence][s.position]);
    }
    std::sort(seen.begin(), seen.end());
    seen.erase(std::unique(seen.begin(), seen.end()), seen.end());
    classes[w] = std::move(seen);
  }
  return classes;
}

std::vector<ZipfRow> zipf_table(const std::vector<std::vector<std::uint32_t>>& classes_per_type) {
  LEXHMM_CHECK(!classes_per_type.empty(), "empty lexicon");
  std::map<std::vector<std::uint32_t>, std::uint32_t> counts;
  for (const auto& c : classes_per_type) counts[c] += 1;
  std::vector<ZipfRow> rows;
  rows.reserve(counts.size());
  for (const auto& [tags, cnt] : counts) rows.push_back({0, cnt, tags});
  std::stable_sort(rows.begin(), rows.end(),
                   [](const ZipfRow& a, const ZipfRow& b) { return a.type_count > b.type_count; });
  for (std::size_t i = 0; i < rows.size(); ++i) rows[i].rank = static_cast<std::uint32_t>(i + 1);
  return rows;
}

LogLogFit fit_log_log(const std::vector<ZipfRow>& table) {
  LogLogFit fit;
  const std::size_t n = table.size();
  if (n < 2) {
    fit.r_squared = 1.0;
    return fit;
  }
  double sx = 0.0, sy = 0.0, sxx = 0.0, sxy = 0.0;
  for (const ZipfRow& row : table) {
    const double x = std::log(static_cast<double>(row.rank));
    const double y = std::log(static_cast<double>(row.type_count));
    sx += x;
    sy += y;
    sxx += x * x;
    sxy += x * y;
  }
  const double dn = static_cast<double>(n);
  const double denom = dn * sxx - sx * sx;
  fit.slope = denom == 0.0 ? 0.0 : (dn * sxy - sx * sy) / denom;
  fit.intercept = (sy - fit.slope * sx) / dn;
  double ss_res = 0.0, ss_tot = 0.0;
  const double mean_y = sy / dn;
  for (const ZipfRow& row : table) {
    const double x = std::log(static_cast<double>(row.rank));
    const double y = std::log(static_cast<double>(row.type_count));
    const double e = y - (fit.intercept + fit.slope * x);
    ss_res += e * e;
    ss_tot += (y - mean_y) * (y - mean_y);
  }
  fit.r_squared = ss_tot == 0.0 ? 1.0 : 1.0 - ss_res / ss_tot;
  return fit;
}

std::vector<ClassReportRow> class_report(
    const std::vector<std::vector<std::uint32_t>>& classes_per_type, const Corpus& corpus,
    std::size_t top_k) {
  LEXHMM_CHECK(classes_per_type.size() == corpus.num_types(), "lexicon/corpus mismatch");
  std::map<std::vector<std::uint32_t>, std::vector<WordId>> members;
  for (WordId w = 0; w < classes_per_type.size(); ++w) {
    members[classes_per_type[w]].push_back(w);
  }
  std::vector<ClassReportRow> rows;
  rows.reserve(members.size());
  for (auto& [tags, types] : members) {
    ClassReportRow row;
    row.class_tags = tags;
    row.type_count = static_cast<std::uint32_t>(types.size());
    std::stable_sort(types.begin(), types.end(), [&](WordId a, WordId b) {
      return corpus.type(a).frequency > corpus.type(b).frequency;
    });
    for (std::size_t i = 0; i < types.size() && i < top_k; ++i) {
      const WordId w = types[i];
      std::vector<double> gold_props;
      if (corpus.has_gold()) {
        std::vector<std::int64_t> gold_counts(corpus.num_gold_tags(), 0);
        for (const Site& s : corpus.sites_of_type(w)) {
          gold_counts[corpus.gold()[s.sentence][s.position]] += 1;
        }
        const double freq = static_cast<double>(corpus.type(w).frequency);
        gold_props.resize(gold_counts.size());
        for (std::size_t g = 0; g < gold_counts.size(); ++g) {
          gold_props[g] = static_cast<double>(gold_counts[g]) / freq;
        }
      }
      row.top_types.push_back({corpus.type(w).surface, std::move(gold_props)});
    }
    rows.push_back(std::move(row));
  }
  std::stable_sort(rows.begin(), rows.end(), [](const ClassReportRow& a, const ClassReportRow& b) {
    return a.type_count > b.type_count;
  });
  for (std::size_t i = 0; i < rows.size(); ++i) rows[i].rank = static_cast<std::uint32_t>(i + 1);
  return rows;
}

std::string format_class_report(const std::vector<ClassReportRow>& rows,
                                const std::vector<std::string>& tag_names,
                                const std::vector<std::string>& gold_names) {
  std::ostringstream os;
  auto tag_name = [&](std::uint32_t t) {
    return t < tag_names.size() ? tag_names[t] : std::to_string(t);
  };
  os << "rank\ttags\ttype_count\ttop_word_types\n";
  for (const ClassReportRow& row : rows) {
    os << row.rank << '\t';
    for (std::size_t i = 0; i < row.class_tags.size(); ++i) {
      if (i > 0) os << ',';
      os << tag_name(row.class_tags[i]);
    }
    os << '\t' << row.type_count << '\t';
    for (std::size_t i = 0; i < row.top_types.size(); ++i) {
      if (i > 0) os << ", ";
      os << row.top_types[i].first;
      const auto& props = row.top_types[i].second;
      if (!props.empty()) {
        os << " (";
        bool first = true;
        for (std::size_t g = 0; g < props.size(); ++g) {
          if (props[g] < 0.005) continue;
          if (!first) os << ' ';
          first = false;
          os << (g < gold_names.size() ? gold_names[g] : std::to_string(g)) << ':';
          char buf[16];
          std::snprintf(buf, sizeof(buf), "%.2f", props[g]);
          os << buf;
        }
        os << ')';
      }
    }
    os << '\n';
  }
  return os.str();
}

}  // namespace lexhmm
