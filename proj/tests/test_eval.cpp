#include "lexhmm/eval.hpp"

#include <cmath>
#include <filesystem>
#include <fstream>

#include "lexhmm/rng.hpp"

#include "doctest.h"

using namespace lexhmm;

namespace {

Corpus tiny_corpus(const std::string& name, const std::string& body) {
  const std::string path = (std::filesystem::temp_directory_path() / name).string();
  std::ofstream out(path);
  out << body;
  out.close();
  return Corpus::read_vertical(path);
}

}  // namespace

TEST_CASE("many_to_one: relabelings, constant prediction, hand-mapped table") {
  // A permuted relabeling of gold scores 1.0.
  const std::vector<std::uint32_t> gold = {0, 1, 2, 0, 1, 2, 2};
  std::vector<std::uint32_t> pred;
  for (std::uint32_t g : gold) pred.push_back((g + 1) % 3);
  CHECK(many_to_one(pred, gold) == doctest::Approx(1.0));

  // Constant prediction scores the majority gold frequency.
  const std::vector<std::uint32_t> constant(gold.size(), 0);
  CHECK(many_to_one(constant, gold) == doctest::Approx(3.0 / 7.0));

  // counts {c0: DT*5, NN*1; c1: NN*3} -> (5 + 3) / 9.
  std::vector<std::uint32_t> p2, g2;
  for (int i = 0; i < 5; ++i) { p2.push_back(0); g2.push_back(0); }
  p2.push_back(0); g2.push_back(1);
  for (int i = 0; i < 3; ++i) { p2.push_back(1); g2.push_back(1); }
  CHECK(many_to_one(p2, g2) == doctest::Approx(8.0 / 9.0));

  CHECK_THROWS_AS(many_to_one({0, 1}, {0}), std::logic_error);
}

TEST_CASE("many_to_one invariants: majority lower bound, label permutation") {
  Rng rng(5);
  for (int trial = 0; trial < 20; ++trial) {
    std::vector<std::uint32_t> pred(200), gold(200);
    for (int i = 0; i < 200; ++i) {
      pred[i] = static_cast<std::uint32_t>(rng.below(5));
      gold[i] = static_cast<std::uint32_t>(rng.below(4));
    }
    std::vector<std::int64_t> gc(4, 0);
    for (std::uint32_t g : gold) gc[g] += 1;
    const double majority = static_cast<double>(*std::max_element(gc.begin(), gc.end())) / 200.0;
    const double m1 = many_to_one(pred, gold);
    CHECK(m1 >= majority - 1e-12);

    std::vector<std::uint32_t> relabeled(pred);
    for (auto& p : relabeled) p = (p * 3 + 1) % 5;  // a permutation of 0..4
    CHECK(many_to_one(relabeled, gold) == doctest::Approx(m1));
  }
}

TEST_CASE("v_measure: identity, degenerate single cluster, random noise") {
  const std::vector<std::uint32_t> gold = {0, 0, 1, 1, 2, 2};
  CHECK(v_measure(gold, gold) == doctest::Approx(1.0));

  // Identical up to relabeling is still 1.
  std::vector<std::uint32_t> relabeled;
  for (std::uint32_t g : gold) relabeled.push_back(2 - g);
  CHECK(v_measure(relabeled, gold) == doctest::Approx(1.0));

  // One predicted cluster against two balanced gold tags: homogeneity 0.
  const std::vector<std::uint32_t> single(4, 0);
  const std::vector<std::uint32_t> balanced = {0, 0, 1, 1};
  CHECK(v_measure(single, balanced) == doctest::Approx(0.0));

  // Independent uniform predictions on a large corpus score near zero.
  Rng rng(17);
  std::vector<std::uint32_t> noise(20000), g(20000);
  for (std::size_t i = 0; i < noise.size(); ++i) {
    noise[i] = static_cast<std::uint32_t>(rng.below(10));
    g[i] = static_cast<std::uint32_t>(rng.below(10));
  }
  CHECK(v_measure(noise, g) < 0.05);

  // Bounds.
  CHECK(v_measure(relabeled, gold) <= 1.0);
  CHECK(v_measure(single, balanced) >= 0.0);
}

TEST_CASE("extract_classes: singleton types and observed tag sets") {
  const Corpus c = tiny_corpus("lexhmm_e1.txt", "a\nb\na\n\nb\nc\n\n");
  const std::vector<std::vector<std::uint32_t>> tags = {{0, 1, 2}, {1, 1}};
  const auto classes = extract_classes(tags, c);
  CHECK(classes[*c.lookup("a")] == std::vector<std::uint32_t>{0, 2});
  CHECK(classes[*c.lookup("b")] == std::vector<std::uint32_t>{1});
  CHECK(classes[*c.lookup("c")] == std::vector<std::uint32_t>{1});  // one occurrence -> singleton
}

TEST_CASE("zipf_table: single class, power law versus flat counterexample") {
  // All types in one class.
  const std::vector<std::vector<std::uint32_t>> one(12, {0});
  const auto single = zipf_table(one);
  REQUIRE(single.size() == 1);
  CHECK(single[0].rank == 1);
  CHECK(single[0].type_count == 12);

  // Synthetic power law: counts proportional to 1/rank.
  std::vector<std::vector<std::uint32_t>> lex;
  for (std::uint32_t r = 1; r <= 20; ++r) {
    const std::uint32_t count = std::max<std::uint32_t>(1, 2000 / r);
    for (std::uint32_t i = 0; i < count; ++i) lex.push_back({r});
  }
  const auto zt = zipf_table(lex);
  const LogLogFit fit = fit_log_log(zt);
  CHECK(fit.slope < 0.0);
  CHECK(fit.r_squared > 0.9);

  // Uniform class sizes: a flat line, poor power-law shape.
  std::vector<std::vector<std::uint32_t>> flat;
  for (std::uint32_t r = 1; r <= 20; ++r) {
    for (int i = 0; i < 50; ++i) flat.push_back({r});
  }
  const LogLogFit flat_fit = fit_log_log(zipf_table(flat));
  CHECK(std::abs(flat_fit.slope) < 0.05);
}

TEST_CASE("class_report: ranks, members and gold proportions") {
  const Corpus c = tiny_corpus("lexhmm_e2.txt",
                               "dog\tNN\ncat\tNN\ndog\tVB\n\nrun\tVB\ncat\tNN\ndog\tNN\n\n");
  // dog appears 3x (NN, VB, NN), cat 2x NN, run 1x VB.
  const std::vector<std::vector<std::uint32_t>> classes = {{0, 1}, {0}, {1}};
  const auto rows = class_report(classes, c);
  REQUIRE(rows.size() == 3);
  CHECK(rows[0].rank == 1);
  // Every class holds one type here; ties keep deterministic map order.
  std::size_t with_two_tags = 0;
  for (const auto& row : rows) {
    CHECK(row.type_count == 1);
    if (row.class_tags.size() == 2) ++with_two_tags;
    REQUIRE(row.top_types.size() == 1);
  }
  CHECK(with_two_tags == 1);
  const std::string text = format_class_report(rows, {"t0", "t1"}, c.gold_tag_names());
  CHECK(text.find("dog") != std::string::npos);
  CHECK(text.find("NN:0.67") != std::string::npos);
}
