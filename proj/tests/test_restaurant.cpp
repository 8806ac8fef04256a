#include "lexhmm/restaurant.hpp"

#include <cmath>
#include <map>

#include "doctest.h"

using namespace lexhmm;

namespace {

// Builds one restaurant with prescribed tables via forced events.
void force_table(CountView& view, RestaurantId r, Dish d, std::uint32_t size,
                 SeatingDelta* journal = nullptr) {
  view.force({r, d, 0, 1}, journal);
  for (std::uint32_t s = 1; s < size; ++s) view.force({r, d, s, s + 1}, journal);
}

}  // namespace

TEST_CASE("predictive: empty restaurant returns the base") {
  RestaurantArena arena;
  const RestaurantId r = arena.create(Level::kUnigram);
  CountView view(arena);
  const PypParams p{0.5, 1.0};
  CHECK(view.predictive(r, 7, 0.25, p) == doctest::Approx(0.25).epsilon(1e-14));
}

TEST_CASE("predictive: one table of three customers, uniform base over two dishes") {
  // (c - a t) + (K a + b) P0 over (n + b): (3-.5) + (0.5+1)(0.5) = 3.25 over 4.
  RestaurantArena arena;
  const RestaurantId r = arena.create(Level::kUnigram);
  CountView view(arena);
  force_table(view, r, 0, 3);
  const PypParams p{0.5, 1.0};
  CHECK(view.predictive(r, 0, 0.5, p) == doctest::Approx(0.8125).epsilon(1e-14));
}

TEST_CASE("predictive: empty child passes through the parent predictive") {
  RestaurantArena arena;
  const RestaurantId parent = arena.create(Level::kUnigram);
  const RestaurantId child = arena.create(Level::kBigram);
  CountView view(arena);
  force_table(view, parent, 3, 2);
  force_table(view, parent, 4, 1);
  const PypParams p{0.3, 0.7};
  const double parent_prob = view.predictive(parent, 3, 0.1, p);
  CHECK(view.predictive(child, 3, parent_prob, p) == doctest::Approx(parent_prob).epsilon(1e-14));
}

TEST_CASE("predictive sums to one over a closed dish support") {
  RestaurantArena arena;
  const RestaurantId r = arena.create(Level::kUnigram);
  CountView view(arena);
  Rng rng(99);
  const std::uint32_t support = 6;
  const PypParams p{0.4, 0.8};
  for (int i = 0; i < 200; ++i) {
    view.seat(r, static_cast<Dish>(rng.below(support)), 1.0 / support, p, rng, nullptr);
  }
  double total = 0.0;
  for (Dish d = 0; d < support; ++d) total += view.predictive(r, d, 1.0 / support, p);
  CHECK(total == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("seat: first customer always opens a table and cascades") {
  RestaurantArena arena;
  const RestaurantId parent = arena.create(Level::kUnigram);
  const RestaurantId child = arena.create(Level::kBigram);
  CountView view(arena);
  Rng rng(1);
  const PypParams p{0.5, 1.0};
  if (view.seat(child, 5, 0.3, p, rng, nullptr)) {
    view.seat(parent, 5, 0.3, p, rng, nullptr);
  }
  CHECK(arena.at(child).tables() == 1);
  CHECK(arena.at(child).customers() == 1);
  CHECK(arena.at(parent).customers() == 1);
}

TEST_CASE("seat: join/new split matches Eq.-(1) arithmetic") {
  // One table of 3, a=0.5, b=1.0, base prob 1: P(join) = 2.5/4, P(new) = 1.5/4.
  RestaurantArena arena;
  const RestaurantId r = arena.create(Level::kUnigram);
  CountView view(arena);
  force_table(view, r, 0, 3);
  const PypParams p{0.5, 1.0};
  Rng rng(7);
  int news = 0;
  const int trials = 200000;
  for (int i = 0; i < trials; ++i) {
    SeatingDelta delta;
    const bool opened = view.seat(r, 0, 1.0, p, rng, &delta);
    news += opened ? 1 : 0;
    revert_delta(arena, delta);
  }
  CHECK(static_cast<double>(news) / trials == doctest::Approx(1.5 / 4.0).epsilon(0.02));
}

TEST_CASE("seat: harmonic table growth under a=0, b=1") {
  // Dirichlet process: E[K after n seats] = sum_{i=0}^{n-1} 1/(1+i).
  const int n = 100000;
  double expected = 0.0;
  for (int i = 0; i < n; ++i) expected += 1.0 / (1.0 + i);
  const PypParams p{0.0, 1.0};
  Rng rng(123);
  double mean_tables = 0.0;
  const int replicas = 100;
  for (int rep = 0; rep < replicas; ++rep) {
    RestaurantArena arena;
    const RestaurantId r = arena.create(Level::kUnigram);
    CountView view(arena);
    for (int i = 0; i < n; ++i) view.seat(r, 0, 1.0, p, rng, nullptr);
    mean_tables += static_cast<double>(arena.at(r).tables());
  }
  mean_tables /= replicas;
  CHECK(std::abs(mean_tables - expected) < 0.1 * expected);
}

TEST_CASE("unseat: inverse of seat, forced removal propagates") {
  RestaurantArena arena;
  const RestaurantId parent = arena.create(Level::kUnigram);
  const RestaurantId child = arena.create(Level::kBigram);
  CountView view(arena);
  Rng rng(3);
  const PypParams p{0.5, 1.0};

  const Restaurant before_child = arena.at(child);
  const Restaurant before_parent = arena.at(parent);
  if (view.seat(child, 2, 0.5, p, rng, nullptr)) view.seat(parent, 2, 0.5, p, rng, nullptr);
  if (view.unseat(child, 2, rng, nullptr)) view.unseat(parent, 2, rng, nullptr);
  CHECK(arena.at(child) == before_child);
  CHECK(arena.at(parent) == before_parent);

  // A size-1 table must vanish and take its base customer with it.
  if (view.seat(child, 9, 0.5, p, rng, nullptr)) view.seat(parent, 9, 0.5, p, rng, nullptr);
  CHECK(arena.at(parent).customers() == 1);
  const bool removed = view.unseat(child, 9, rng, nullptr);
  CHECK(removed);
  if (removed) view.unseat(parent, 9, rng, nullptr);
  CHECK(arena.at(parent).customers() == 0);
  CHECK(arena.at(child).empty());
}

TEST_CASE("unseat of an unserved dish is a logic error") {
  RestaurantArena arena;
  const RestaurantId r = arena.create(Level::kUnigram);
  CountView view(arena);
  Rng rng(5);
  CHECK_THROWS_AS(view.unseat(r, 11, rng, nullptr), std::logic_error);
}

TEST_CASE("randomized seat/unseat interleavings preserve invariants") {
  // Two-level chain driven by 20k random operations.
  RestaurantArena arena;
  const RestaurantId parent = arena.create(Level::kUnigram);
  const RestaurantId child = arena.create(Level::kBigram);
  CountView view(arena);
  Rng rng(2024);
  const PypParams p{0.5, 1.0};
  std::map<Dish, int> live;
  for (int op = 0; op < 20000; ++op) {
    const Dish d = static_cast<Dish>(rng.below(4));
    const bool can_remove = live[d] > 0;
    if (!can_remove || rng.uniform() < 0.55) {
      if (view.seat(child, d, 0.25, p, rng, nullptr)) view.seat(parent, d, 0.25, p, rng, nullptr);
      live[d] += 1;
    } else {
      if (view.unseat(child, d, rng, nullptr)) view.unseat(parent, d, rng, nullptr);
      live[d] -= 1;
    }
    if (op % 1000 == 0) {
      std::string why;
      CHECK_MESSAGE(check_restaurant_consistency(arena.at(child), &why), why);
      CHECK_MESSAGE(check_restaurant_consistency(arena.at(parent), &why), why);
      for (const auto& [dish, n] : live) {
        CHECK(view.dish_customers(child, dish) == n);
        CHECK(view.dish_customers(parent, dish) == view.dish_tables(child, dish));
      }
    }
  }
}

TEST_CASE("joint seating probability: spec base cases") {
  RestaurantArena arena;
  const RestaurantId r = arena.create(Level::kUnigram);
  const PypParams p{0.5, 1.0};
  CHECK(log_arrangement_prob(arena.at(r), p, [](Dish) { return std::log(0.25); }) == 0.0);

  CountView view(arena);
  Rng rng(1);
  view.seat(r, 3, 0.25, p, rng, nullptr);
  CHECK(log_arrangement_prob(arena.at(r), p, [](Dish) { return std::log(0.25); }) ==
        doctest::Approx(std::log(0.25)).epsilon(1e-12));
}

TEST_CASE("joint seating probability: sequential-replay oracle on 6 customers") {
  // Replays the journal of a random 6-customer arrangement, accumulating
  // Eq.-(1) factors (join: (size-a)/(n+b), new: (K a + b)/(n+b) * base)
  // from counts observed before each event.
  const PypParams p{0.4, 0.6};
  const double base = 1.0 / 3.0;
  Rng rng(77);
  for (int trial = 0; trial < 20; ++trial) {
    RestaurantArena arena;
    const RestaurantId r = arena.create(Level::kUnigram);
    CountView view(arena);
    SeatingDelta journal;
    for (int i = 0; i < 6; ++i) {
      view.seat(r, static_cast<Dish>(rng.below(3)), base, p, rng, &journal);
    }
    RestaurantArena replay_arena;
    const RestaurantId rr = replay_arena.create(Level::kUnigram);
    CountView replay(replay_arena);
    double oracle = 0.0;
    for (const SeatEvent& ev : journal.events()) {
      const double n = static_cast<double>(replay.customers(rr));
      if (ev.from == 0) {
        const double k = static_cast<double>(replay.tables(rr));
        oracle += std::log((k * p.discount + p.strength) * base / (n + p.strength));
      } else {
        oracle += std::log((static_cast<double>(ev.from) - p.discount) / (n + p.strength));
      }
      replay.force({rr, ev.dish, ev.from, ev.to}, nullptr);
    }
    const double got =
        log_arrangement_prob(arena.at(r), p, [&](Dish) { return std::log(base); });
    CHECK(got == doctest::Approx(oracle).epsilon(1e-10));
  }
}

TEST_CASE("apply then revert is the identity; disjoint deltas commute") {
  RestaurantArena arena;
  const RestaurantId r1 = arena.create(Level::kUnigram);
  const RestaurantId r2 = arena.create(Level::kBigram);
  CountView view(arena);
  Rng rng(9);
  const PypParams p{0.5, 1.0};
  for (int i = 0; i < 30; ++i) {
    view.seat(r1, static_cast<Dish>(rng.below(3)), 0.3, p, rng, nullptr);
    view.seat(r2, static_cast<Dish>(rng.below(3)), 0.3, p, rng, nullptr);
  }
  const Restaurant snap1 = arena.at(r1);
  const Restaurant snap2 = arena.at(r2);

  SeatingDelta d1, d2;
  view.seat(r1, 0, 0.3, p, rng, &d1);
  view.unseat(r1, 1, rng, &d1);
  view.seat(r2, 2, 0.3, p, rng, &d2);
  revert_delta(arena, d2);
  revert_delta(arena, d1);
  CHECK(arena.at(r1) == snap1);
  CHECK(arena.at(r2) == snap2);

  // Disjoint-restaurant deltas commute.
  apply_delta(arena, d1);
  apply_delta(arena, d2);
  const Restaurant after12_r1 = arena.at(r1);
  const Restaurant after12_r2 = arena.at(r2);
  revert_delta(arena, d2);
  revert_delta(arena, d1);
  apply_delta(arena, d2);
  apply_delta(arena, d1);
  CHECK(arena.at(r1) == after12_r1);
  CHECK(arena.at(r2) == after12_r2);
  revert_delta(arena, d1);
  revert_delta(arena, d2);
  CHECK(arena.at(r1) == snap1);
  CHECK(arena.at(r2) == snap2);
}

TEST_CASE("overlay reads compose base plus journal; commit equals replay") {
  RestaurantArena arena;
  const RestaurantId r = arena.create(Level::kUnigram);
  CountView direct(arena);
  Rng rng(13);
  const PypParams p{0.5, 1.0};
  for (int i = 0; i < 25; ++i) direct.seat(r, static_cast<Dish>(rng.below(3)), 0.3, p, rng, nullptr);
  const Restaurant frozen = arena.at(r);

  Overlay overlay;
  CountView view(arena, &overlay);
  SeatingDelta journal;
  Rng prng(55);
  for (int i = 0; i < 10; ++i) view.seat(r, static_cast<Dish>(prng.below(3)), 0.3, p, prng, &journal);
  view.unseat(r, 0, prng, &journal);
  CHECK(arena.at(r) == frozen);  // base stayed frozen

  const std::int64_t composed_customers = view.customers(r);
  const std::int64_t composed_tables = view.tables(r);
  std::vector<std::int64_t> composed_dish(3);
  for (Dish d = 0; d < 3; ++d) composed_dish[d] = view.dish_customers(r, d);

  apply_delta(arena, journal);
  CHECK(arena.at(r).customers() == composed_customers);
  CHECK(arena.at(r).tables() == composed_tables);
  CountView after(arena);
  for (Dish d = 0; d < 3; ++d) CHECK(after.dish_customers(r, d) == composed_dish[d]);
  std::string why;
  CHECK_MESSAGE(check_restaurant_consistency(arena.at(r), &why), why);
}

TEST_CASE("exchangeability: enumerated marginal is insertion-order invariant") {
  // Exhaustively enumerates every seating trajectory of a two-level chain
  // for a small insertion multiset, summing exp(joint log prob); the total
  // must not depend on the insertion order. The enumerator drives the
  // state through forced events and computes probabilities from raw counts.
  const PypParams pc{0.5, 0.8};
  const PypParams pp{0.3, 1.1};
  const double base = 0.25;

  struct Enumerator {
    RestaurantArena* arena;
    RestaurantId child, parent;
    PypParams pc, pp;
    double base;

    double recurse(CountView& view, const std::vector<Dish>& seq, std::size_t i, double w) {
      if (i == seq.size()) return w;
      const Dish d = seq[i];
      double total = 0.0;
      const std::int64_t n = view.customers(child);
      if (n == 0) {
        // First customer opens a table with probability one.
        view.force({child, d, 0, 1}, nullptr);
        total = recurse_parent_then(view, seq, i, d, w);
        view.force({child, d, 1, 0}, nullptr);
        return total;
      }
      const double denom = static_cast<double>(n) + pc.strength;
      std::vector<std::pair<std::uint32_t, std::int32_t>> buckets;
      view.visit_dish_hist(child, d, [&](std::uint32_t s, std::int32_t c) {
        buckets.push_back({s, c});
      });
      for (const auto& [s, c] : buckets) {
        const double pw = (static_cast<double>(s) - pc.discount) * c / denom;
        view.force({child, d, s, s + 1}, nullptr);
        total += recurse(view, seq, i + 1, w * pw);
        view.force({child, d, s + 1, s}, nullptr);
      }
      const double pw_new =
          (static_cast<double>(view.tables(child)) * pc.discount + pc.strength) / denom;
      view.force({child, d, 0, 1}, nullptr);
      total += recurse_parent_then(view, seq, i, d, w * pw_new);
      view.force({child, d, 1, 0}, nullptr);
      return total;
    }

    // The child opened a table for dish d: branch over parent seatings,
    // then continue with insertion i+1.
    double recurse_parent_then(CountView& view, const std::vector<Dish>& seq, std::size_t i,
                               Dish d, double w) {
      const std::int64_t n = view.customers(parent);
      double total = 0.0;
      if (n == 0) {
        view.force({parent, d, 0, 1}, nullptr);
        total += recurse(view, seq, i + 1, w * base);
        view.force({parent, d, 1, 0}, nullptr);
        return total;
      }
      const double denom = static_cast<double>(n) + pp.strength;
      std::vector<std::pair<std::uint32_t, std::int32_t>> buckets;
      view.visit_dish_hist(parent, d, [&](std::uint32_t s, std::int32_t c) {
        buckets.push_back({s, c});
      });
      for (const auto& [s, c] : buckets) {
        const double pw = (static_cast<double>(s) - pp.discount) * c / denom;
        view.force({parent, d, s, s + 1}, nullptr);
        total += recurse(view, seq, i + 1, w * pw);
        view.force({parent, d, s + 1, s}, nullptr);
      }
      const double pw_new =
          ((static_cast<double>(view.tables(parent))) * pp.discount + pp.strength) * base / denom;
      view.force({parent, d, 0, 1}, nullptr);
      total += recurse(view, seq, i + 1, w * pw_new);
      view.force({parent, d, 1, 0}, nullptr);
      return total;
    }

    double marginal(const std::vector<Dish>& seq) {
      RestaurantArena fresh;
      child = fresh.create(Level::kBigram);
      parent = fresh.create(Level::kUnigram);
      arena = &fresh;
      CountView view(fresh);
      return recurse(view, seq, 0, 1.0);
    }
  };

  Enumerator en{nullptr, 0, 0, pc, pp, base};
  const std::vector<std::vector<Dish>> orders = {
      {0, 0, 1, 0, 1, 2}, {2, 1, 0, 0, 1, 0}, {0, 1, 2, 0, 0, 1},
      {1, 0, 0, 2, 0, 1}, {0, 0, 0, 1, 1, 2}};
  const double reference = en.marginal(orders[0]);
  for (std::size_t i = 1; i < orders.size(); ++i) {
    CHECK(en.marginal(orders[i]) == doctest::Approx(reference).epsilon(1e-9));
  }
}
