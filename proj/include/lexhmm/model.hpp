#pragma once

#include <array>
#include <cstdint>
#include <vector>

#include "lexhmm/corpus.hpp"
#include "lexhmm/lexicon.hpp"
#include "lexhmm/restaurant.hpp"
#include "lexhmm/rng.hpp"
#include "lexhmm/types.hpp"

namespace lexhmm {

enum class EmissionMode : std::uint8_t { kUniform = 0, kCharLm = 1 };
enum class SamplerKind : std::uint8_t { kLex = 0, kPypType = 1, kLocal = 2 };

// Per-tag bigram character model: one restaurant per previous-character
// context backing off to a shared character unigram, which backs off to a
// uniform over the alphabet plus the end-of-word symbol.
struct CharLm {
  RestaurantId unigram = kInvalidId;
  std::vector<RestaurantId> bigram;  // contexts 0..A-1 are characters, A is start-of-word
};

// Resolves lexicon membership and e_t counts, optionally with one word
// type rebound to a different class (particle proposals evaluate emission
// bases under their proposed lexicon without touching shared state).
struct LexiconView {
  const Lexicon* lexicon = nullptr;
  const ClassRegistry* registry = nullptr;
  WordId overridden_word = kInvalidId;
  const std::vector<TagId>* override_tags = nullptr;  // sorted

  bool contains(TagId t, WordId w) const {
    if (w == overridden_word && override_tags != nullptr) {
      return std::binary_search(override_tags->begin(), override_tags->end(), t);
    }
    return lexicon->assigned(w) && registry->contains(lexicon->class_of(w), t);
  }

  std::int64_t types_with_tag(TagId t) const {
    std::int64_t e = lexicon->types_with_tag(t);
    if (override_tags != nullptr &&
        std::binary_search(override_tags->begin(), override_tags->end(), t)) {
      e += 1;
    }
    return e;
  }
};

// Full model state: transition hierarchy, emissions, char-LMs, lexicon,
// hyperparameters and the training-side tag assignment. Checkpointable.
class Model {
 public:
  Model(const Corpus& corpus, std::uint32_t num_tags, EmissionMode emission_mode,
        bool lexicon_enabled, double p_geom);

  const Corpus& corpus() const { return *corpus_; }
  const Tagset& tagset() const { return tagset_; }
  EmissionMode emission_mode() const { return emission_mode_; }
  bool lexicon_enabled() const { return lexicon_enabled_; }
  double p_geom() const { return p_geom_; }

  RestaurantId trigram_rest(TagId prev2, TagId prev1) const {
    return trigram_[prev2 * tagset_.num_dishes() + prev1];
  }
  RestaurantId bigram_rest(TagId prev1) const { return bigram_[prev1]; }
  RestaurantId unigram_rest() const { return unigram_; }
  RestaurantId emission_rest(TagId t) const { return emission_[t]; }
  RestaurantId class_rest() const { return class_rest_; }
  const CharLm& char_lm(TagId t) const { return charlm_[t]; }

  LexiconView lexicon_view() const { return {&lexicon, &classes, kInvalidId, nullptr}; }

  // P(next | prev1, prev2) through the trigram -> bigram -> unigram ->
  // uniform back-off chain. `next` may be the boundary tag.
  double transition_prob(const CountView& view, TagId prev2, TagId prev1, TagId next) const;

  // P(word | tag). In uniform mode the base is 1/e_t over the types whose
  // class admits the tag; excluded types get base 0 (and probability 0 in
  // an untrained restaurant) rather than an error. In char-LM mode the
  // base is the character model's word probability for admitted types and
  // 0 otherwise; the admitted mass is not renormalized.
  double emission_prob(const CountView& view, TagId t, WordId w, const LexiconView& lex) const;

  // Emission base distribution C_t evaluated at one word type.
  double word_base_prob(const CountView& view, TagId t, WordId w, const LexiconView& lex) const;

  // Character model word probability: product of bigram predictives over
  // the characters plus the end symbol.
  double charlm_word_prob(const CountView& view, TagId t, WordId w) const;

  // CRP predictive of an ambiguity class against the geometric base.
  double class_prior_prob(const CountView& view, ClassId c) const;
  double class_log_base(ClassId c) const;

  // Seating cascades. A new table at one level seats a customer in its
  // base level; removal of a table removes one.
  void seat_transition(CountView& view, TagId prev2, TagId prev1, TagId next, Rng& rng,
                       SeatingDelta* journal);
  void unseat_transition(CountView& view, TagId prev2, TagId prev1, TagId next, Rng& rng,
                         SeatingDelta* journal);
  void seat_emission(CountView& view, TagId t, WordId w, const LexiconView& lex, Rng& rng,
                     SeatingDelta* journal);
  void unseat_emission(CountView& view, TagId t, WordId w, Rng& rng, SeatingDelta* journal);
  void seat_class(CountView& view, ClassId c, Rng& rng, SeatingDelta* journal);
  void unseat_class(CountView& view, ClassId c, Rng& rng, SeatingDelta* journal);

  // Log probability of the complete seating state: per-restaurant seating
  // factors plus terminal base factors (uniform terminals, lexicon-uniform
  // emission bases, geometric class bases). -inf when a seated emission
  // violates the lexicon.
  double log_joint() const;

  // Draws an initial assignment: one tag per word type applied to all its
  // sites, singleton classes when the lexicon is enabled (the full tagset
  // otherwise), then seats every customer.
  void init_assignment(Rng& rng);

  // Sets tags/classes from a caller-provided assignment and seats everything.
  void set_assignment(const std::vector<std::vector<TagId>>& tags,
                      const std::vector<std::vector<TagId>>& class_tags_per_type);

  TagId tag_at(std::uint32_t sentence, std::int64_t pos) const {
    const auto& s = tags[sentence];
    if (pos < 0 || pos >= static_cast<std::int64_t>(s.size())) return tagset_.boundary();
    return s[pos];
  }

  std::vector<TagId> tags_flat() const;

  std::array<PypParams, kNumLevels> params;
  RestaurantArena arena;
  ClassRegistry classes;
  Lexicon lexicon;
  std::vector<std::vector<TagId>> tags;
  Rng rng;
  std::uint64_t iteration = 0;

 private:
  void seat_charlm_word(CountView& view, TagId t, WordId w, Rng& rng, SeatingDelta* journal);
  void unseat_charlm_word(CountView& view, TagId t, WordId w, Rng& rng, SeatingDelta* journal);
  void seat_initial(Rng& rng);

  const Corpus* corpus_;
  Tagset tagset_;
  EmissionMode emission_mode_;
  bool lexicon_enabled_;
  double p_geom_;

  RestaurantId unigram_ = kInvalidId;
  std::vector<RestaurantId> bigram_;
  std::vector<RestaurantId> trigram_;
  std::vector<RestaurantId> emission_;
  RestaurantId class_rest_ = kInvalidId;
  std::vector<CharLm> charlm_;
};

const PypParams& level_params(const Model& m, Level level);

// Walks the whole hierarchy checking per-restaurant bookkeeping and the
// franchise identity (child table counts equal customers contributed to
// the base restaurant per dish). Test and debug aid.
bool check_model_consistency(const Model& m, std::string* why);

}  // namespace lexhmm
