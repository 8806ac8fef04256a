#pragma once

#include <cstdint>
#include <limits>
#include <sstream>
#include <stdexcept>
#include <string>

namespace lexhmm {

using TagId = std::uint32_t;   // 0..T-1 induced tags; T is the boundary tag $
using WordId = std::uint32_t;  // dense word-type ids in interning order
using CharId = std::uint32_t;  // dense character ids; alphabet_size is end-of-word
using ClassId = std::uint32_t; // interned ambiguity classes
using Dish = std::uint32_t;    // generic dish id inside a restaurant
using RestaurantId = std::uint32_t;

inline constexpr std::uint32_t kInvalidId = std::numeric_limits<std::uint32_t>::max();

// Logic errors (broken invariants, misuse of the API). I/O and parse
// problems use std::runtime_error with a message instead.
#define LEXHMM_CHECK(cond, msg)                                   \
  do {                                                            \
    if (!(cond)) {                                                \
      std::ostringstream os_;                                     \
      os_ << "check failed: " << #cond << " (" << msg << ")";     \
      throw std::logic_error(os_.str());                          \
    }                                                             \
  } while (0)

}  // namespace lexhmm
