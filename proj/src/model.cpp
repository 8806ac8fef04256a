#include "lexhmm/model.hpp"

#include <cmath>

namespace lexhmm {

Model::Model(const Corpus& corpus, std::uint32_t num_tags, EmissionMode emission_mode,
             bool lexicon_enabled, double p_geom)
    : corpus_(&corpus),
      tagset_{num_tags},
      emission_mode_(emission_mode),
      lexicon_enabled_(lexicon_enabled),
      p_geom_(p_geom) {
  LEXHMM_CHECK(num_tags >= 1, "need at least one tag");
  const std::uint32_t d = tagset_.num_dishes();
  unigram_ = arena.create(Level::kUnigram);
  bigram_.reserve(d);
  for (std::uint32_t i = 0; i < d; ++i) bigram_.push_back(arena.create(Level::kBigram));
  trigram_.reserve(d * d);
  for (std::uint32_t i = 0; i < d * d; ++i) trigram_.push_back(arena.create(Level::kTrigram));
  emission_.reserve(num_tags);
  for (std::uint32_t t = 0; t < num_tags; ++t) emission_.push_back(arena.create(Level::kEmission));
  class_rest_ = arena.create(Level::kClass);
  if (emission_mode_ == EmissionMode::kCharLm) {
    const std::uint32_t a = corpus.alphabet_size();
    charlm_.resize(num_tags);
    for (std::uint32_t t = 0; t < num_tags; ++t) {
      charlm_[t].unigram = arena.create(Level::kCharUnigram);
      charlm_[t].bigram.reserve(a + 1);
      for (std::uint32_t c = 0; c <= a; ++c) {
        charlm_[t].bigram.push_back(arena.create(Level::kCharBigram));
      }
    }
  }
  lexicon.init(corpus.num_types(), num_tags);
  tags.resize(corpus.num_sentences());
  for (std::size_t s = 0; s < corpus.num_sentences(); ++s) {
    tags[s].assign(corpus.sentence(s).size(), 0);
  }
}

const PypParams& level_params(const Model& m, Level level) {
  return m.params[static_cast<std::size_t>(level)];
}

double Model::transition_prob(const CountView& view, TagId prev2, TagId prev1,
                              TagId next) const {
  double p = 1.0 / static_cast<double>(tagset_.num_dishes());
  p = view.predictive(unigram_, next, p, level_params(*this, Level::kUnigram));
  p = view.predictive(bigram_[prev1], next, p, level_params(*this, Level::kBigram));
  return view.predictive(trigram_rest(prev2, prev1), next, p,
                         level_params(*this, Level::kTrigram));
}

double Model::word_base_prob(const CountView& view, TagId t, WordId w,
                             const LexiconView& lex) const {
  if (!lex.contains(t, w)) return 0.0;
  if (emission_mode_ == EmissionMode::kUniform) {
    const std::int64_t e = lex.types_with_tag(t);
    LEXHMM_CHECK(e > 0, "admitted type but e_t == 0");
    return 1.0 / static_cast<double>(e);
  }
  return charlm_word_prob(view, t, w);
}

double Model::emission_prob(const CountView& view, TagId t, WordId w,
                            const LexiconView& lex) const {
  return view.predictive(emission_[t], w, word_base_prob(view, t, w, lex),
                         level_params(*this, Level::kEmission));
}

double Model::charlm_word_prob(const CountView& view, TagId t, WordId w) const {
  const CharLm& lm = charlm_[t];
  const std::uint32_t a = corpus_->alphabet_size();
  const double uniform = 1.0 / static_cast<double>(a + 1);
  const PypParams& pu = level_params(*this, Level::kCharUnigram);
  const PypParams& pb = level_params(*this, Level::kCharBigram);
  double p = 1.0;
  CharId prev = a;  // start-of-word context
  const std::vector<CharId>& cs = corpus_->type_chars(w);
  for (std::size_t i = 0; i <= cs.size(); ++i) {
    const CharId c = (i < cs.size()) ? cs[i] : a;  // end symbol
    const double base = view.predictive(lm.unigram, c, uniform, pu);
    p *= view.predictive(lm.bigram[prev], c, base, pb);
    prev = c;
  }
  return p;
}

double Model::class_log_base(ClassId c) const {
  return log_geometric_base_prob(classes.size_of(c), tagset_.size, p_geom_);
}

double Model::class_prior_prob(const CountView& view, ClassId c) const {
  return view.predictive(class_rest_, c, std::exp(class_log_base(c)),
                         level_params(*this, Level::kClass));
}

void Model::seat_transition(CountView& view, TagId prev2, TagId prev1, TagId next, Rng& rng,
                            SeatingDelta* journal) {
  const double p0 = 1.0 / static_cast<double>(tagset_.num_dishes());
  const PypParams& prm_u = level_params(*this, Level::kUnigram);
  const PypParams& prm_b = level_params(*this, Level::kBigram);
  const PypParams& prm_t = level_params(*this, Level::kTrigram);
  const double pu = view.predictive(unigram_, next, p0, prm_u);
  const double pb = view.predictive(bigram_[prev1], next, pu, prm_b);
  if (view.seat(trigram_rest(prev2, prev1), next, pb, prm_t, rng, journal)) {
    if (view.seat(bigram_[prev1], next, pu, prm_b, rng, journal)) {
      view.seat(unigram_, next, p0, prm_u, rng, journal);
    }
  }
}

void Model::unseat_transition(CountView& view, TagId prev2, TagId prev1, TagId next, Rng& rng,
                              SeatingDelta* journal) {
  if (view.unseat(trigram_rest(prev2, prev1), next, rng, journal)) {
    if (view.unseat(bigram_[prev1], next, rng, journal)) {
      view.unseat(unigram_, next, rng, journal);
    }
  }
}

void Model::seat_charlm_word(CountView& view, TagId t, WordId w, Rng& rng,
                             SeatingDelta* journal) {
  const CharLm& lm = charlm_[t];
  const std::uint32_t a = corpus_->alphabet_size();
  const double uniform = 1.0 / static_cast<double>(a + 1);
  const PypParams& pu = level_params(*this, Level::kCharUnigram);
  const PypParams& pb = level_params(*this, Level::kCharBigram);
  CharId prev = a;
  const std::vector<CharId>& cs = corpus_->type_chars(w);
  for (std::size_t i = 0; i <= cs.size(); ++i) {
    const CharId c = (i < cs.size()) ? cs[i] : a;
    const double base = view.predictive(lm.unigram, c, uniform, pu);
    if (view.seat(lm.bigram[prev], c, base, pb, rng, journal)) {
      view.seat(lm.unigram, c, uniform, pu, rng, journal);
    }
    prev = c;
  }
}

void Model::unseat_charlm_word(CountView& view, TagId t, WordId w, Rng& rng,
                               SeatingDelta* journal) {
  const CharLm& lm = charlm_[t];
  const std::uint32_t a = corpus_->alphabet_size();
  const std::vector<CharId>& cs = corpus_->type_chars(w);
  // Reverse of the seating order so particle-0 replay inverts exactly.
  for (std::size_t i = cs.size() + 1; i-- > 0;) {
    const CharId c = (i < cs.size()) ? cs[i] : a;
    const CharId prev = (i == 0) ? a : cs[i - 1];
    if (view.unseat(lm.bigram[prev], c, rng, journal)) {
      view.unseat(lm.unigram, c, rng, journal);
    }
  }
}

void Model::seat_emission(CountView& view, TagId t, WordId w, const LexiconView& lex, Rng& rng,
                          SeatingDelta* journal) {
  const double base = word_base_prob(view, t, w, lex);
  if (view.seat(emission_[t], w, base, level_params(*this, Level::kEmission), rng, journal)) {
    if (emission_mode_ == EmissionMode::kCharLm) seat_charlm_word(view, t, w, rng, journal);
  }
}

void Model::unseat_emission(CountView& view, TagId t, WordId w, Rng& rng,
                            SeatingDelta* journal) {
  if (view.unseat(emission_[t], w, rng, journal)) {
    if (emission_mode_ == EmissionMode::kCharLm) unseat_charlm_word(view, t, w, rng, journal);
  }
}

void Model::seat_class(CountView& view, ClassId c, Rng& rng, SeatingDelta* journal) {
  view.seat(class_rest_, c, std::exp(class_log_base(c)), level_params(*this, Level::kClass),
            rng, journal);
}

void Model::unseat_class(CountView& view, ClassId c, Rng& rng, SeatingDelta* journal) {
  view.unseat(class_rest_, c, rng, journal);
}

double Model::log_joint() const {
  double lp = 0.0;
  for (RestaurantId r = 0; r < arena.size(); ++r) {
    lp += log_seating_prob(arena.at(r), params[static_cast<std::size_t>(arena.level(r))]);
  }
  // Terminal base factors: one per table at the bottom of each chain.
  lp -= static_cast<double>(arena.at(unigram_).tables()) *
        std::log(static_cast<double>(tagset_.num_dishes()));
  const LexiconView lex = lexicon_view();
  for (std::uint32_t t = 0; t < tagset_.size; ++t) {
    const Restaurant& et = arena.at(emission_[t]);
    if (emission_mode_ == EmissionMode::kUniform) {
      const double e = static_cast<double>(lex.types_with_tag(t));
      for (Dish w : et.sorted_dishes()) {
        if (!lex.contains(t, w)) return -std::numeric_limits<double>::infinity();
        lp -= et.find(w)->tables * std::log(e);
      }
    } else {
      for (Dish w : et.sorted_dishes()) {
        if (!lex.contains(t, w)) return -std::numeric_limits<double>::infinity();
      }
      lp -= static_cast<double>(arena.at(charlm_[t].unigram).tables()) *
            std::log(static_cast<double>(corpus_->alphabet_size() + 1));
    }
  }
  if (lexicon_enabled_) {
    const Restaurant& cr = arena.at(class_rest_);
    for (Dish c : cr.sorted_dishes()) {
      lp += cr.find(c)->tables * class_log_base(c);
    }
  }
  return lp;
}

void Model::seat_initial(Rng& seat_rng) {
  CountView view(arena);
  const LexiconView lex = lexicon_view();
  if (lexicon_enabled_) {
    for (WordId w = 0; w < corpus_->num_types(); ++w) {
      seat_class(view, lexicon.class_of(w), seat_rng, nullptr);
    }
  }
  const TagId bd = tagset_.boundary();
  for (std::uint32_t s = 0; s < corpus_->num_sentences(); ++s) {
    const auto& sent = corpus_->sentence(s);
    const std::int64_t len = static_cast<std::int64_t>(sent.size());
    for (std::int64_t i = 0; i <= len; ++i) {
      const TagId next = (i < len) ? tags[s][i] : bd;
      seat_transition(view, tag_at(s, i - 2), tag_at(s, i - 1), next, seat_rng, nullptr);
      if (i < len) seat_emission(view, tags[s][i], sent[i], lex, seat_rng, nullptr);
    }
  }
}

void Model::init_assignment(Rng& init_rng) {
  std::vector<TagId> all_tags(tagset_.size);
  for (std::uint32_t t = 0; t < tagset_.size; ++t) all_tags[t] = t;
  std::vector<TagId> type_tag(corpus_->num_types());
  for (WordId w = 0; w < corpus_->num_types(); ++w) {
    type_tag[w] = static_cast<TagId>(init_rng.below(tagset_.size));
    const ClassId c = lexicon_enabled_ ? classes.intern({type_tag[w]}) : classes.intern(all_tags);
    lexicon.assign(w, c, classes);
  }
  for (std::uint32_t s = 0; s < corpus_->num_sentences(); ++s) {
    const auto& sent = corpus_->sentence(s);
    for (std::size_t i = 0; i < sent.size(); ++i) tags[s][i] = type_tag[sent[i]];
  }
  seat_initial(init_rng);
}

void Model::set_assignment(const std::vector<std::vector<TagId>>& new_tags,
                           const std::vector<std::vector<TagId>>& class_tags_per_type) {
  LEXHMM_CHECK(new_tags.size() == corpus_->num_sentences(), "sentence count mismatch");
  LEXHMM_CHECK(class_tags_per_type.size() == corpus_->num_types(), "type count mismatch");
  tags = new_tags;
  for (WordId w = 0; w < corpus_->num_types(); ++w) {
    lexicon.assign(w, classes.intern(class_tags_per_type[w]), classes);
  }
  Rng seat_rng(42);  // table choices only; callers needing exact control seat manually
  seat_initial(seat_rng);
}

std::vector<TagId> Model::tags_flat() const {
  std::vector<TagId> out;
  out.reserve(corpus_->num_tokens());
  for (const auto& s : tags) out.insert(out.end(), s.begin(), s.end());
  return out;
}

namespace {

// Customers contributed to `parent` per dish must equal table counts in the
// children pointing at it.
bool check_link(const RestaurantArena& arena, const std::vector<RestaurantId>& children,
                RestaurantId parent, std::string* why) {
  std::unordered_map<Dish, std::int64_t> expected;
  for (RestaurantId c : children) {
    for (const auto& [dish, dc] : arena.at(c).dishes()) expected[dish] += dc.tables;
  }
  const Restaurant& p = arena.at(parent);
  for (const auto& [dish, want] : expected) {
    const DishCounts* dc = p.find(dish);
    const std::int64_t got = dc ? dc->customers : 0;
    if (got != want) {
      if (why) *why = "franchise link broken: parent customers != child tables";
      return false;
    }
  }
  std::int64_t total = 0;
  for (const auto& [dish, dc] : p.dishes()) total += dc.customers;
  std::int64_t want_total = 0;
  for (const auto& [_, w] : expected) want_total += w;
  if (total != want_total) {
    if (why) *why = "franchise link broken: stray customers in parent";
    return false;
  }
  return true;
}

}  // namespace

bool check_model_consistency(const Model& m, std::string* why) {
  for (RestaurantId r = 0; r < m.arena.size(); ++r) {
    if (!check_restaurant_consistency(m.arena.at(r), why)) return false;
  }
  const std::uint32_t d = m.tagset().num_dishes();
  std::vector<RestaurantId> tri_children;
  for (std::uint32_t prev1 = 0; prev1 < d; ++prev1) {
    tri_children.clear();
    for (std::uint32_t prev2 = 0; prev2 < d; ++prev2) {
      tri_children.push_back(m.trigram_rest(prev2, prev1));
    }
    if (!check_link(m.arena, tri_children, m.bigram_rest(prev1), why)) return false;
  }
  std::vector<RestaurantId> bi_children;
  for (std::uint32_t prev1 = 0; prev1 < d; ++prev1) bi_children.push_back(m.bigram_rest(prev1));
  if (!check_link(m.arena, bi_children, m.unigram_rest(), why)) return false;
  if (m.emission_mode() == EmissionMode::kCharLm) {
    for (std::uint32_t t = 0; t < m.tagset().size; ++t) {
      if (!check_link(m.arena, m.char_lm(t).bigram, m.char_lm(t).unigram, why)) return false;
    }
  }
  return true;
}

}  // namespace lexhmm
