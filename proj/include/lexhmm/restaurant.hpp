#pragma once

#include <cstdint>
#include <unordered_map>
#include <utility>
#include <vector>

#include "lexhmm/rng.hpp"
#include "lexhmm/types.hpp"

namespace lexhmm {

struct PypParams {
  double discount = 0.5;  // a in [0,1)
  double strength = 1.0;  // b > -a
};

// Pitman-Yor hierarchy levels. Each level shares one (discount, strength)
// pair across all of its restaurants.
enum class Level : std::uint8_t {
  kTrigram = 0,
  kBigram,
  kUnigram,
  kEmission,
  kCharBigram,
  kCharUnigram,
  kClass,
};
inline constexpr std::size_t kNumLevels = 7;

// Table sizes -> number of tables of that size. Sorted by size, counts > 0.
// Eq-style CRP probabilities depend only on sizes, so identity of individual
// tables is never stored.
class SizeHistogram {
 public:
  using Bucket = std::pair<std::uint32_t, std::int32_t>;

  void add(std::uint32_t size, std::int32_t delta);
  // Overlay deltas may drive bucket counts negative against the frozen base.
  void add_signed(std::uint32_t size, std::int32_t delta);
  std::int32_t count(std::uint32_t size) const;
  bool empty() const { return buckets_.empty(); }
  const std::vector<Bucket>& buckets() const { return buckets_; }

  bool operator==(const SizeHistogram&) const = default;

 private:
  std::vector<Bucket> buckets_;
};

struct DishCounts {
  std::int64_t customers = 0;
  std::int32_t tables = 0;
  SizeHistogram hist;

  bool operator==(const DishCounts&) const = default;
};

class Restaurant {
 public:
  const DishCounts* find(Dish d) const;
  std::int64_t customers() const { return customers_; }
  std::int64_t tables() const { return tables_; }
  // Aggregate over all dishes; drives the seating likelihood without
  // touching the per-dish map.
  const SizeHistogram& size_histogram() const { return agg_hist_; }
  const std::unordered_map<Dish, DishCounts>& dishes() const { return dishes_; }
  std::vector<Dish> sorted_dishes() const;
  bool empty() const { return customers_ == 0 && tables_ == 0; }

  bool operator==(const Restaurant& o) const {
    return customers_ == o.customers_ && tables_ == o.tables_ && dishes_ == o.dishes_;
  }

 private:
  friend class CountView;
  friend void apply_event_to_arena(class RestaurantArena&, const struct SeatEvent&);

  std::unordered_map<Dish, DishCounts> dishes_;
  SizeHistogram agg_hist_;
  std::int64_t customers_ = 0;
  std::int64_t tables_ = 0;
};

// One journal entry: a table serving `dish` in `rest` moved from size
// `from` to size `to` (|from - to| == 1; 0 means the table does not exist
// on that side). Applying a journal and then its inverse restores counts
// exactly.
struct SeatEvent {
  RestaurantId rest;
  Dish dish;
  std::uint32_t from;
  std::uint32_t to;

  SeatEvent inverted() const { return {rest, dish, to, from}; }
  bool operator==(const SeatEvent&) const = default;
};

class SeatingDelta {
 public:
  void append(const SeatEvent& ev) { events_.push_back(ev); }
  void clear() { events_.clear(); }
  bool empty() const { return events_.empty(); }
  std::size_t size() const { return events_.size(); }
  const std::vector<SeatEvent>& events() const { return events_; }

  // Reversed order with each event inverted: the rollback trajectory.
  SeatingDelta inverted() const;

 private:
  std::vector<SeatEvent> events_;
};

class RestaurantArena {
 public:
  RestaurantId create(Level level);
  Restaurant& at(RestaurantId id) { return rests_[id]; }
  const Restaurant& at(RestaurantId id) const { return rests_[id]; }
  Level level(RestaurantId id) const { return levels_[id]; }
  std::size_t size() const { return rests_.size(); }

 private:
  std::vector<Restaurant> rests_;
  std::vector<Level> levels_;
};

// Raw event application used by seat/unseat, delta replay and rollback.
void apply_event_to_arena(RestaurantArena& arena, const SeatEvent& ev);
void apply_delta(RestaurantArena& arena, const SeatingDelta& delta);
void revert_delta(RestaurantArena& arena, const SeatingDelta& delta);

// Particle-private difference against a frozen arena. Reads through
// CountView see base-plus-journal semantics.
class Overlay {
 public:
  struct DishDelta {
    std::int64_t customers = 0;
    std::int32_t tables = 0;
    SizeHistogram hist;
  };
  struct TotalsDelta {
    std::int64_t customers = 0;
    std::int64_t tables = 0;
  };

  void clear() {
    dish_.clear();
    totals_.clear();
  }
  bool empty() const { return dish_.empty() && totals_.empty(); }

  const DishDelta* find(RestaurantId r, Dish d) const;
  DishDelta& obtain(RestaurantId r, Dish d);
  const TotalsDelta* find_totals(RestaurantId r) const;
  TotalsDelta& obtain_totals(RestaurantId r);

 private:
  static std::uint64_t key(RestaurantId r, Dish d) {
    return (static_cast<std::uint64_t>(r) << 32) | d;
  }
  std::unordered_map<std::uint64_t, DishDelta> dish_;
  std::unordered_map<RestaurantId, TotalsDelta> totals_;
};

// Access point for all seating reads and writes. With a null overlay,
// writes mutate the arena directly; with an overlay the arena stays frozen
// and writes land in the overlay. Either way every change is appended to
// `journal` when one is given.
class CountView {
 public:
  CountView(RestaurantArena& arena, Overlay* overlay = nullptr)
      : arena_(&arena), overlay_(overlay) {}

  std::int64_t customers(RestaurantId r) const;
  std::int64_t tables(RestaurantId r) const;
  std::int64_t dish_customers(RestaurantId r, Dish d) const;
  std::int32_t dish_tables(RestaurantId r, Dish d) const;

  // Composed (size, count) buckets for one dish, ascending size.
  template <typename F>
  void visit_dish_hist(RestaurantId r, Dish d, F&& f) const;

  // P(dish) under Eq.-(1)-style PYP predictive with the given base mass.
  double predictive(RestaurantId r, Dish d, double base_prob, const PypParams& p) const;

  // Seats one customer; returns true when a new table opened (the caller
  // then owes one customer to the base distribution).
  bool seat(RestaurantId r, Dish d, double base_prob, const PypParams& p, Rng& rng,
            SeatingDelta* journal);

  // Removes one customer from a table chosen proportional to its size;
  // returns true when the table emptied (the caller then removes one
  // customer from the base distribution).
  bool unseat(RestaurantId r, Dish d, Rng& rng, SeatingDelta* journal);

  // Applies a prescribed event (replay paths); journals it when asked.
  void force(const SeatEvent& ev, SeatingDelta* journal);

  RestaurantArena& arena() { return *arena_; }
  const RestaurantArena& arena() const { return *arena_; }
  bool has_overlay() const { return overlay_ != nullptr; }

 private:
  void apply(const SeatEvent& ev);

  RestaurantArena* arena_;
  Overlay* overlay_;
};

template <typename F>
void CountView::visit_dish_hist(RestaurantId r, Dish d, F&& f) const {
  static const std::vector<SizeHistogram::Bucket> kEmpty;
  const DishCounts* base = arena_->at(r).find(d);
  const std::vector<SizeHistogram::Bucket>* bb = base ? &base->hist.buckets() : &kEmpty;
  const Overlay::DishDelta* delta = overlay_ ? overlay_->find(r, d) : nullptr;
  if (delta == nullptr) {
    for (const auto& [size, cnt] : *bb) f(size, cnt);
    return;
  }
  const auto& db = delta->hist.buckets();
  std::size_t i = 0, j = 0;
  while (i < bb->size() || j < db.size()) {
    std::uint32_t size;
    std::int32_t cnt = 0;
    if (i < bb->size() && (j >= db.size() || (*bb)[i].first <= db[j].first)) {
      size = (*bb)[i].first;
      cnt = (*bb)[i].second;
      if (j < db.size() && db[j].first == size) cnt += db[j++].second;
      ++i;
    } else {
      size = db[j].first;
      cnt = db[j].second;
      ++j;
    }
    if (cnt > 0) f(size, cnt);
  }
}

// Sequential CRP probability of the current arrangement of one restaurant,
// base factors excluded:
//   prod_{i=1}^{K-1}(b + i a) / prod_{j=1}^{n-1}(b + j) * prod_tables prod_{m=1}^{c_k-1}(m - a)
// computed in closed form from (n, K, size histogram).
double log_seating_prob(std::int64_t customers, std::int64_t tables,
                        const SizeHistogram& hist, const PypParams& p);
double log_seating_prob(const Restaurant& r, const PypParams& p);

// Seating probability times one base factor per table; exact for a node
// whose base distribution is fixed (a terminal base), and the per-level
// building block of the full franchise joint.
template <typename LogBase>
double log_arrangement_prob(const Restaurant& r, const PypParams& p, LogBase&& log_base) {
  double lp = log_seating_prob(r, p);
  for (Dish d : r.sorted_dishes()) {
    lp += static_cast<double>(r.find(d)->tables) * log_base(d);
  }
  return lp;
}

// Verifies per-dish and aggregate bookkeeping; returns false and fills
// `why` on the first violation.
bool check_restaurant_consistency(const Restaurant& r, std::string* why);

}  // namespace lexhmm
