#include "lexhmm/restaurant.hpp"

#include <algorithm>
#include <cmath>

namespace lexhmm {

void SizeHistogram::add(std::uint32_t size, std::int32_t delta) {
  LEXHMM_CHECK(size > 0, "zero-size bucket");
  auto it = std::lower_bound(buckets_.begin(), buckets_.end(), size,
                             [](const Bucket& b, std::uint32_t s) { return b.first < s; });
  if (it != buckets_.end() && it->first == size) {
    it->second += delta;
    LEXHMM_CHECK(it->second >= 0, "negative bucket count");
    if (it->second == 0) buckets_.erase(it);
  } else {
    LEXHMM_CHECK(delta > 0, "removing from empty bucket");
    buckets_.insert(it, {size, delta});
  }
}

void SizeHistogram::add_signed(std::uint32_t size, std::int32_t delta) {
  LEXHMM_CHECK(size > 0, "zero-size bucket");
  auto it = std::lower_bound(buckets_.begin(), buckets_.end(), size,
                             [](const Bucket& b, std::uint32_t s) { return b.first < s; });
  if (it != buckets_.end() && it->first == size) {
    it->second += delta;
    if (it->second == 0) buckets_.erase(it);
  } else if (delta != 0) {
    buckets_.insert(it, {size, delta});
  }
}

std::int32_t SizeHistogram::count(std::uint32_t size) const {
  auto it = std::lower_bound(buckets_.begin(), buckets_.end(), size,
                             [](const Bucket& b, std::uint32_t s) { return b.first < s; });
  return (it != buckets_.end() && it->first == size) ? it->second : 0;
}

const DishCounts* Restaurant::find(Dish d) const {
  auto it = dishes_.find(d);
  return it == dishes_.end() ? nullptr : &it->second;
}

std::vector<Dish> Restaurant::sorted_dishes() const {
  std::vector<Dish> out;
  out.reserve(dishes_.size());
  for (const auto& [d, _] : dishes_) out.push_back(d);
  std::sort(out.begin(), out.end());
  return out;
}

SeatingDelta SeatingDelta::inverted() const {
  SeatingDelta out;
  for (auto it = events_.rbegin(); it != events_.rend(); ++it) out.append(it->inverted());
  return out;
}

RestaurantId RestaurantArena::create(Level level) {
  rests_.emplace_back();
  levels_.push_back(level);
  return static_cast<RestaurantId>(rests_.size() - 1);
}

void apply_event_to_arena(RestaurantArena& arena, const SeatEvent& ev) {
  Restaurant& r = arena.at(ev.rest);
  DishCounts& dc = r.dishes_[ev.dish];
  if (ev.from > 0) {
    dc.hist.add(ev.from, -1);
    r.agg_hist_.add(ev.from, -1);
  } else {
    dc.tables += 1;
    r.tables_ += 1;
  }
  if (ev.to > 0) {
    dc.hist.add(ev.to, +1);
    r.agg_hist_.add(ev.to, +1);
  } else {
    dc.tables -= 1;
    r.tables_ -= 1;
    LEXHMM_CHECK(dc.tables >= 0, "negative table count");
  }
  const std::int64_t dcust = static_cast<std::int64_t>(ev.to) - static_cast<std::int64_t>(ev.from);
  dc.customers += dcust;
  r.customers_ += dcust;
  LEXHMM_CHECK(dc.customers >= 0, "negative customer count");
  if (dc.customers == 0 && dc.tables == 0) r.dishes_.erase(ev.dish);
}

void apply_delta(RestaurantArena& arena, const SeatingDelta& delta) {
  for (const SeatEvent& ev : delta.events()) apply_event_to_arena(arena, ev);
}

void revert_delta(RestaurantArena& arena, const SeatingDelta& delta) {
  const auto& evs = delta.events();
  for (auto it = evs.rbegin(); it != evs.rend(); ++it) {
    apply_event_to_arena(arena, it->inverted());
  }
}

const Overlay::DishDelta* Overlay::find(RestaurantId r, Dish d) const {
  auto it = dish_.find(key(r, d));
  return it == dish_.end() ? nullptr : &it->second;
}

Overlay::DishDelta& Overlay::obtain(RestaurantId r, Dish d) { return dish_[key(r, d)]; }

const Overlay::TotalsDelta* Overlay::find_totals(RestaurantId r) const {
  auto it = totals_.find(r);
  return it == totals_.end() ? nullptr : &it->second;
}

Overlay::TotalsDelta& Overlay::obtain_totals(RestaurantId r) { return totals_[r]; }

std::int64_t CountView::customers(RestaurantId r) const {
  std::int64_t n = arena_->at(r).customers();
  if (overlay_) {
    if (const auto* t = overlay_->find_totals(r)) n += t->customers;
  }
  return n;
}

std::int64_t CountView::tables(RestaurantId r) const {
  std::int64_t k = arena_->at(r).tables();
  if (overlay_) {
    if (const auto* t = overlay_->find_totals(r)) k += t->tables;
  }
  return k;
}

std::int64_t CountView::dish_customers(RestaurantId r, Dish d) const {
  std::int64_t c = 0;
  if (const DishCounts* dc = arena_->at(r).find(d)) c = dc->customers;
  if (overlay_) {
    if (const auto* dd = overlay_->find(r, d)) c += dd->customers;
  }
  return c;
}

std::int32_t CountView::dish_tables(RestaurantId r, Dish d) const {
  std::int32_t t = 0;
  if (const DishCounts* dc = arena_->at(r).find(d)) t = dc->tables;
  if (overlay_) {
    if (const auto* dd = overlay_->find(r, d)) t += dd->tables;
  }
  return t;
}

double CountView::predictive(RestaurantId r, Dish d, double base_prob,
                             const PypParams& p) const {
  const std::int64_t n = customers(r);
  if (n == 0) return base_prob;
  const std::int64_t k = tables(r);
  const double c_d = static_cast<double>(dish_customers(r, d));
  const double t_d = static_cast<double>(dish_tables(r, d));
  const double num =
      (c_d - p.discount * t_d) + (static_cast<double>(k) * p.discount + p.strength) * base_prob;
  return num / (static_cast<double>(n) + p.strength);
}

void CountView::apply(const SeatEvent& ev) {
  if (overlay_ == nullptr) {
    apply_event_to_arena(*arena_, ev);
    return;
  }
  Overlay::DishDelta& dd = overlay_->obtain(ev.rest, ev.dish);
  Overlay::TotalsDelta& td = overlay_->obtain_totals(ev.rest);
  if (ev.from > 0) {
    dd.hist.add_signed(ev.from, -1);
  } else {
    dd.tables += 1;
    td.tables += 1;
  }
  if (ev.to > 0) {
    dd.hist.add_signed(ev.to, +1);
  } else {
    dd.tables -= 1;
    td.tables -= 1;
  }
  const std::int64_t dcust = static_cast<std::int64_t>(ev.to) - static_cast<std::int64_t>(ev.from);
  dd.customers += dcust;
  td.customers += dcust;
}

void CountView::force(const SeatEvent& ev, SeatingDelta* journal) {
  apply(ev);
  if (journal) journal->append(ev);
}

bool CountView::seat(RestaurantId r, Dish d, double base_prob, const PypParams& p, Rng& rng,
                     SeatingDelta* journal) {
  const std::int64_t n = customers(r);
  bool open_new;
  std::uint32_t join_size = 0;
  if (n == 0) {
    open_new = true;
  } else {
    const double c_d = static_cast<double>(dish_customers(r, d));
    const double t_d = static_cast<double>(dish_tables(r, d));
    const double join_w = c_d - p.discount * t_d;
    const double new_w =
        (static_cast<double>(tables(r)) * p.discount + p.strength) * base_prob;
    LEXHMM_CHECK(join_w + new_w > 0.0, "no admissible seating choice");
    double u = rng.uniform() * (join_w + new_w);
    if (u < new_w) {
      open_new = true;
    } else {
      open_new = false;
      u -= new_w;
      // Choose a table-size class proportional to (size - a) * count.
      std::uint32_t last = 0;
      visit_dish_hist(r, d, [&](std::uint32_t size, std::int32_t cnt) {
        if (u < 0.0 && last != 0) return;
        last = size;
        u -= (static_cast<double>(size) - p.discount) * cnt;
      });
      // `u` may stay marginally positive from round-off; the last bucket absorbs it.
      LEXHMM_CHECK(last != 0, "join selected with no tables");
      join_size = last;
    }
  }
  if (open_new) {
    force({r, d, 0, 1}, journal);
    return true;
  }
  force({r, d, join_size, join_size + 1}, journal);
  return false;
}

bool CountView::unseat(RestaurantId r, Dish d, Rng& rng, SeatingDelta* journal) {
  const std::int64_t c_d = dish_customers(r, d);
  LEXHMM_CHECK(c_d > 0, "unseat of unserved dish");
  // Choose a table proportional to its size, i.e. a size class
  // proportional to size * count.
  double u = rng.uniform() * static_cast<double>(c_d);
  std::uint32_t chosen = 0;
  visit_dish_hist(r, d, [&](std::uint32_t size, std::int32_t cnt) {
    if (u < 0.0 && chosen != 0) return;
    chosen = size;
    u -= static_cast<double>(size) * cnt;
  });
  LEXHMM_CHECK(chosen != 0, "unseat found no table");
  force({r, d, chosen, chosen - 1}, journal);
  return chosen == 1;
}

double log_seating_prob(std::int64_t customers, std::int64_t tables,
                        const SizeHistogram& hist, const PypParams& p) {
  if (customers == 0) return 0.0;
  const double a = p.discount;
  const double b = p.strength;
  double lp = 0.0;
  // prod_{i=1}^{K-1} (b + i a)
  if (tables > 1) {
    if (a > 0.0) {
      lp += static_cast<double>(tables - 1) * std::log(a) +
            std::lgamma(b / a + static_cast<double>(tables)) - std::lgamma(b / a + 1.0);
    } else {
      lp += static_cast<double>(tables - 1) * std::log(b);
    }
  }
  // / prod_{j=1}^{n-1} (b + j)
  lp -= std::lgamma(b + static_cast<double>(customers)) - std::lgamma(b + 1.0);
  // prod over tables of prod_{m=1}^{c_k - 1} (m - a)
  const double lg1a = std::lgamma(1.0 - a);
  for (const auto& [size, cnt] : hist.buckets()) {
    if (size > 1) lp += cnt * (std::lgamma(static_cast<double>(size) - a) - lg1a);
  }
  return lp;
}

double log_seating_prob(const Restaurant& r, const PypParams& p) {
  return log_seating_prob(r.customers(), r.tables(), r.size_histogram(), p);
}

bool check_restaurant_consistency(const Restaurant& r, std::string* why) {
  auto fail = [&](const std::string& s) {
    if (why) *why = s;
    return false;
  };
  std::int64_t total_c = 0;
  std::int64_t total_t = 0;
  SizeHistogram agg;
  for (const auto& [dish, dc] : r.dishes()) {
    std::int64_t c = 0;
    std::int64_t t = 0;
    for (const auto& [size, cnt] : dc.hist.buckets()) {
      if (cnt <= 0) return fail("non-positive bucket");
      c += static_cast<std::int64_t>(size) * cnt;
      t += cnt;
      agg.add(size, cnt);
    }
    if (c != dc.customers) return fail("dish customers != histogram mass");
    if (t != dc.tables) return fail("dish tables != histogram count");
    if (dc.customers == 0 && dc.tables == 0) return fail("stale empty dish entry");
    total_c += c;
    total_t += t;
  }
  if (total_c != r.customers()) return fail("restaurant customers mismatch");
  if (total_t != r.tables()) return fail("restaurant tables mismatch");
  if (!(agg == r.size_histogram())) return fail("aggregate histogram mismatch");
  return true;
}

}  // namespace lexhmm
