#include "lexhmm/inference.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>

#include "lexhmm/checkpoint.hpp"
#include "lexhmm/slice.hpp"
#include "lexhmm/thread_pool.hpp"

namespace lexhmm {
namespace {

struct SiteInfo {
  std::uint32_t sentence = 0;
  std::uint32_t position = 0;
  std::uint32_t sent_len = 0;
  bool owns_f1 = false;  // factor at position+1
  bool owns_f2 = false;  // factor at position+2
  // Site indices covering context positions (position-1, position-2) when
  // those are occurrences of the same word type, else -1.
  std::int32_t prev1_site = -1;
  std::int32_t prev2_site = -1;
};

// A factor at position m is seated by the latest site among {m-2..m}, so
// each affected transition factor is reseated exactly once per particle
// even when occurrences of the type sit within two positions of each other.
std::vector<SiteInfo> plan_sites(const Model& model, WordId word) {
  const auto& sites = model.corpus().sites_of_type(word);
  std::vector<SiteInfo> plan(sites.size());
  auto is_site = [&](std::size_t k, std::uint32_t sent, std::uint32_t pos) {
    return k < sites.size() && sites[k].sentence == sent && sites[k].position == pos;
  };
  for (std::size_t k = 0; k < sites.size(); ++k) {
    SiteInfo& si = plan[k];
    si.sentence = sites[k].sentence;
    si.position = sites[k].position;
    si.sent_len = static_cast<std::uint32_t>(model.corpus().sentence(si.sentence).size());
    const bool next1 = is_site(k + 1, si.sentence, si.position + 1);
    const bool next2 = is_site(k + 1, si.sentence, si.position + 2) ||
                       (next1 && is_site(k + 2, si.sentence, si.position + 2));
    si.owns_f1 = (si.position + 1 <= si.sent_len) && !next1;
    si.owns_f2 = (si.position + 2 <= si.sent_len) && !next1 && !next2;
    if (k >= 1 && sites[k - 1].sentence == si.sentence) {
      if (sites[k - 1].position + 1 == si.position) si.prev1_site = static_cast<std::int32_t>(k - 1);
      if (sites[k - 1].position + 2 == si.position) si.prev2_site = static_cast<std::int32_t>(k - 1);
    }
    if (k >= 2 && sites[k - 2].sentence == si.sentence &&
        sites[k - 2].position + 2 == si.position) {
      si.prev2_site = static_cast<std::int32_t>(k - 2);
    }
  }
  return plan;
}

void replay_slot(CountView& view, const SeatingDelta& unseat_journal, SeatingDelta* journal) {
  const auto& evs = unseat_journal.events();
  for (auto it = evs.rbegin(); it != evs.rend(); ++it) view.force(it->inverted(), journal);
}

ClassId propose_class(Model& model, ClassId old_class, Rng& rng) {
  const std::uint32_t num_tags = model.tagset().size;
  for (;;) {
    const std::uint64_t move = rng.below(num_tags + 1);
    if (move == num_tags) return old_class;
    const TagId t = static_cast<TagId>(move);
    const std::vector<TagId>& old_tags = model.classes.tags(old_class);
    std::vector<TagId> next;
    next.reserve(old_tags.size() + 1);
    bool removed = false;
    for (TagId x : old_tags) {
      if (x == t) {
        removed = true;
      } else {
        next.push_back(x);
      }
    }
    if (!removed) next.push_back(t);
    if (next.empty()) continue;  // re-propose instead of emptying the class
    return model.classes.intern(std::move(next));
  }
}

double log_sum_exp(const std::vector<Particle>& particles, std::vector<double>* norm) {
  double mx = -std::numeric_limits<double>::infinity();
  for (const Particle& p : particles) mx = std::max(mx, p.log_weight);
  double sum = 0.0;
  norm->resize(particles.size());
  for (std::size_t i = 0; i < particles.size(); ++i) {
    (*norm)[i] = std::exp(particles[i].log_weight - mx);
    sum += (*norm)[i];
  }
  for (double& w : *norm) w /= sum;
  return mx + std::log(sum);
}

void maybe_resample(std::vector<Particle>& particles, double threshold, Rng& main_rng) {
  const std::size_t num = particles.size();
  std::vector<double> w;
  log_sum_exp(particles, &w);
  double sq = 0.0;
  for (double x : w) sq += x * x;
  const double ess = 1.0 / sq;
  if (ess >= threshold * static_cast<double>(num)) return;

  // Systematic resampling; slot 0 always keeps the conditional particle.
  std::vector<std::uint32_t> ancestor(num, 0);
  const double u = main_rng.uniform();
  std::size_t a = 0;
  double cdf = w[0];
  for (std::size_t j = 1; j < num; ++j) {
    const double target = (static_cast<double>(j - 1) + u) / static_cast<double>(num - 1);
    while (cdf < target && a + 1 < num) cdf += w[++a];
    ancestor[j] = static_cast<std::uint32_t>(a);
  }
  std::vector<Particle> next(num);
  for (std::size_t j = 0; j < num; ++j) {
    const Particle& src = particles[ancestor[j]];
    next[j].proposed_class = src.proposed_class;
    next[j].class_tags = src.class_tags;
    next[j].tags = src.tags;
    next[j].overlay = src.overlay;
    next[j].journal = src.journal;
    next[j].log_weight = 0.0;
    next[j].rng = particles[j].rng;  // each slot continues its own stream
  }
  particles = std::move(next);
}

std::uint32_t select_particle(const std::vector<Particle>& particles, Rng& main_rng) {
  std::vector<double> w;
  log_sum_exp(particles, &w);
  return static_cast<std::uint32_t>(main_rng.categorical(w));
}

}  // namespace

SweepResult sweep_type(Model& model, WordId word, const SamplerConfig& config, Rng& main_rng,
                       ThreadPool* pool, const SweepHooks& hooks) {
  const auto& sites = model.corpus().sites_of_type(word);
  if (sites.empty()) return {};
  const bool lex = model.lexicon_enabled();
  LEXHMM_CHECK(config.particles >= 1, "need at least the conditional particle");
  const std::uint32_t num_particles = config.particles;
  const std::vector<SiteInfo> plan = plan_sites(model, word);
  const std::uint32_t num_sites = static_cast<std::uint32_t>(plan.size());

  // Phase 1: withdraw the type's customers, journaling per slot in exact
  // reverse of the reseat order so particle 0 can replay the inverse.
  std::vector<SeatingDelta> slot_journal(num_sites + 1);
  CountView base_view(model.arena);
  for (std::uint32_t k = num_sites; k >= 1; --k) {
    const SiteInfo& si = plan[k - 1];
    SeatingDelta* j = &slot_journal[k];
    const std::uint32_t s = si.sentence;
    const std::int64_t i = si.position;
    const TagId t_old = model.tags[s][i];
    const TagId cm1 = model.tag_at(s, i - 1);
    const TagId cm2 = model.tag_at(s, i - 2);
    const TagId n1 = model.tag_at(s, i + 1);
    const TagId n2 = model.tag_at(s, i + 2);
    model.unseat_emission(base_view, t_old, word, main_rng, j);
    if (si.owns_f2) model.unseat_transition(base_view, t_old, n1, n2, main_rng, j);
    if (si.owns_f1) model.unseat_transition(base_view, cm1, t_old, n1, main_rng, j);
    model.unseat_transition(base_view, cm2, cm1, t_old, main_rng, j);
  }
  ClassId old_class = kInvalidId;
  if (lex) {
    old_class = model.lexicon.class_of(word);
    model.unseat_class(base_view, old_class, main_rng, &slot_journal[0]);
    model.lexicon.unassign(word, model.classes);
  }

  // Phase 2: particle setup. Class proposals intern into the shared
  // registry, so this stays serial.
  std::vector<TagId> all_tags(model.tagset().size);
  for (std::uint32_t t = 0; t < model.tagset().size; ++t) all_tags[t] = t;
  std::vector<Particle> particles(num_particles);
  for (std::uint32_t p = 0; p < num_particles; ++p) {
    Particle& pp = particles[p];
    pp.rng = Rng(derive_stream(config.seed, model.iteration, word, p));
    pp.tags.resize(num_sites);
    if (p == 0) {
      for (std::uint32_t k = 0; k < num_sites; ++k) {
        pp.tags[k] = model.tags[plan[k].sentence][plan[k].position];
      }
    }
    if (!lex) continue;
    pp.proposed_class = (p == 0) ? old_class : propose_class(model, old_class, pp.rng);
  }
  for (std::uint32_t p = 0; p < num_particles; ++p) {
    Particle& pp = particles[p];
    if (!lex) {
      pp.class_tags = &all_tags;
      continue;
    }
    pp.class_tags = &model.classes.tags(pp.proposed_class);
    CountView pv(model.arena, &pp.overlay);
    pp.log_weight = std::log(model.class_prior_prob(pv, pp.proposed_class));
    if (model.emission_mode() == EmissionMode::kUniform) {
      // Corrects for the changed uniform base mass of tables already
      // seated under the old lexicon.
      for (std::uint32_t t = 0; t < model.tagset().size; ++t) {
        const std::int64_t num_tables = model.arena.at(model.emission_rest(t)).tables();
        if (num_tables == 0) continue;
        std::int64_t e = model.lexicon.types_with_tag(t);
        if (std::binary_search(pp.class_tags->begin(), pp.class_tags->end(), t)) e += 1;
        LEXHMM_CHECK(e > 0, "seated emission tables for a tag with no admitted types");
        pp.log_weight -= static_cast<double>(num_tables) * std::log(static_cast<double>(e));
      }
    }
    if (p == 0) {
      replay_slot(pv, slot_journal[0], &pp.journal);
    } else {
      model.seat_class(pv, pp.proposed_class, pp.rng, &pp.journal);
    }
  }

  // Phase 3: sequential proposal over the sites; every particle advances
  // one site per step so resampling can fire at site boundaries.
  auto propagate = [&](std::uint32_t p, std::uint32_t k) {
    Particle& pp = particles[p];
    const SiteInfo& si = plan[k - 1];
    CountView pv(model.arena, &pp.overlay);
    const std::uint32_t s = si.sentence;
    const std::int64_t i = si.position;
    const TagId cm1 =
        si.prev1_site >= 0 ? pp.tags[si.prev1_site] : model.tag_at(s, i - 1);
    const TagId cm2 =
        si.prev2_site >= 0 ? pp.tags[si.prev2_site] : model.tag_at(s, i - 2);
    const TagId n1 = model.tag_at(s, i + 1);
    const TagId n2 = model.tag_at(s, i + 2);
    const std::vector<TagId>& cand = *pp.class_tags;
    LexiconView lex_view{&model.lexicon, &model.classes, word, lex ? pp.class_tags : nullptr};
    std::vector<double> weights(cand.size());
    for (std::size_t ci = 0; ci < cand.size(); ++ci) {
      const TagId t = cand[ci];
      double w = model.transition_prob(pv, cm2, cm1, t);
      if (si.owns_f1) w *= model.transition_prob(pv, cm1, t, n1);
      if (si.owns_f2) w *= model.transition_prob(pv, t, n1, n2);
      w *= model.emission_prob(pv, t, word, lex_view);
      weights[ci] = w;
    }
    double z = 0.0;
    for (double w : weights) z += w;
    LEXHMM_CHECK(z > 0.0, "proposal has no admissible tag");
    pp.log_weight += std::log(z);
    TagId chosen;
    if (p == 0) {
      chosen = model.tags[s][i];
      replay_slot(pv, slot_journal[k], &pp.journal);
    } else {
      chosen = cand[pp.rng.categorical(weights)];
      model.seat_transition(pv, cm2, cm1, chosen, pp.rng, &pp.journal);
      if (si.owns_f1) model.seat_transition(pv, cm1, chosen, n1, pp.rng, &pp.journal);
      if (si.owns_f2) model.seat_transition(pv, chosen, n1, n2, pp.rng, &pp.journal);
      model.seat_emission(pv, chosen, word, lex_view, pp.rng, &pp.journal);
    }
    pp.tags[k - 1] = chosen;
  };
  for (std::uint32_t k = 1; k <= num_sites; ++k) {
    if (pool != nullptr && pool->size() > 1 && num_particles > 1) {
      pool->run(num_particles, [&](std::size_t p) { propagate(static_cast<std::uint32_t>(p), k); });
    } else {
      for (std::uint32_t p = 0; p < num_particles; ++p) propagate(p, k);
    }
    if (num_particles > 1 && config.resample_threshold > 0.0 && k < num_sites) {
      maybe_resample(particles, config.resample_threshold, main_rng);
    }
  }

  // Phase 4: choose one particle by weight and commit its deltas.
  const std::uint32_t selected = hooks.force_select.has_value()
                                     ? *hooks.force_select
                                     : (num_particles == 1 ? 0 : select_particle(particles, main_rng));
  LEXHMM_CHECK(selected < num_particles, "selected particle out of range");
  Particle& winner = particles[selected];
  apply_delta(model.arena, winner.journal);
  if (lex) model.lexicon.assign(word, winner.proposed_class, model.classes);
  for (std::uint32_t k = 0; k < num_sites; ++k) {
    model.tags[plan[k].sentence][plan[k].position] = winner.tags[k];
  }
  return {selected, lex && winner.proposed_class != old_class};
}

void local_gibbs_sweep(Model& model, Rng& rng) {
  std::vector<Site> order;
  order.reserve(model.corpus().num_tokens());
  for (std::uint32_t s = 0; s < model.corpus().num_sentences(); ++s) {
    for (std::uint32_t i = 0; i < model.corpus().sentence(s).size(); ++i) {
      order.push_back({s, i});
    }
  }
  local_gibbs_sweep(model, rng, order);
}

void local_gibbs_sweep(Model& model, Rng& rng, const std::vector<Site>& order) {
  CountView view(model.arena);
  const LexiconView lex_view = model.lexicon_view();
  std::vector<double> weights;
  for (const Site& st : order) {
    const std::uint32_t s = st.sentence;
    const std::int64_t i = st.position;
    const auto& sent = model.corpus().sentence(s);
    const std::int64_t len = static_cast<std::int64_t>(sent.size());
    const WordId word = sent[i];
    const TagId t_old = model.tags[s][i];
    const TagId cm1 = model.tag_at(s, i - 1);
    const TagId cm2 = model.tag_at(s, i - 2);
    const TagId n1 = model.tag_at(s, i + 1);
    const bool has_f2 = (i + 2 <= len);
    const TagId n2 = model.tag_at(s, i + 2);

    model.unseat_emission(view, t_old, word, rng, nullptr);
    if (has_f2) model.unseat_transition(view, t_old, n1, n2, rng, nullptr);
    model.unseat_transition(view, cm1, t_old, n1, rng, nullptr);
    model.unseat_transition(view, cm2, cm1, t_old, rng, nullptr);

    const std::vector<TagId>& cand = model.classes.tags(model.lexicon.class_of(word));
    weights.resize(cand.size());
    for (std::size_t ci = 0; ci < cand.size(); ++ci) {
      const TagId t = cand[ci];
      double w = model.transition_prob(view, cm2, cm1, t);
      w *= model.transition_prob(view, cm1, t, n1);
      if (has_f2) w *= model.transition_prob(view, t, n1, n2);
      w *= model.emission_prob(view, t, word, lex_view);
      weights[ci] = w;
    }
    const TagId t_new = cand[rng.categorical(weights)];
    model.tags[s][i] = t_new;
    model.seat_transition(view, cm2, cm1, t_new, rng, nullptr);
    model.seat_transition(view, cm1, t_new, n1, rng, nullptr);
    if (has_f2) model.seat_transition(view, t_new, n1, n2, rng, nullptr);
    model.seat_emission(view, t_new, word, lex_view, rng, nullptr);
  }
}

namespace {

struct LevelStats {
  std::vector<std::pair<std::int64_t, std::int64_t>> customers_tables;
  SizeHistogram agg;
  bool empty() const { return customers_tables.empty(); }
};

LevelStats collect_level(const Model& model, Level level) {
  LevelStats st;
  for (RestaurantId r = 0; r < model.arena.size(); ++r) {
    if (model.arena.level(r) != level) continue;
    const Restaurant& rest = model.arena.at(r);
    if (rest.customers() == 0) continue;
    st.customers_tables.push_back({rest.customers(), rest.tables()});
    for (const auto& [size, cnt] : rest.size_histogram().buckets()) st.agg.add(size, cnt);
  }
  return st;
}

double level_log_lik(const LevelStats& st, double a, double b) {
  double lp = 0.0;
  for (const auto& [n, k] : st.customers_tables) {
    if (k > 1) {
      lp += (a > 0.0) ? (static_cast<double>(k - 1) * std::log(a) +
                         std::lgamma(b / a + static_cast<double>(k)) - std::lgamma(b / a + 1.0))
                      : static_cast<double>(k - 1) * std::log(b);
    }
    lp -= std::lgamma(b + static_cast<double>(n)) - std::lgamma(b + 1.0);
  }
  const double lg1a = std::lgamma(1.0 - a);
  for (const auto& [size, cnt] : st.agg.buckets()) {
    if (size > 1) lp += cnt * (std::lgamma(static_cast<double>(size) - a) - lg1a);
  }
  return lp;
}

}  // namespace

void resample_hyperparameters(Model& model, Rng& rng) {
  static constexpr Level kAll[] = {Level::kTrigram,    Level::kBigram,      Level::kUnigram,
                                   Level::kEmission,   Level::kCharBigram,  Level::kCharUnigram,
                                   Level::kClass};
  for (Level level : kAll) {
    if (level == Level::kClass && !model.lexicon_enabled()) continue;
    const LevelStats st = collect_level(model, level);
    if (st.empty()) continue;
    PypParams& prm = model.params[static_cast<std::size_t>(level)];
    prm.discount = slice_sample(
        prm.discount, [&](double a) { return level_log_lik(st, a, prm.strength); }, 1e-6,
        1.0 - 1e-6, 0.1, rng);
    prm.strength = slice_sample(
        prm.strength,
        // Vague exponential prior keeps the strength proper on (0, inf).
        [&](double b) { return level_log_lik(st, prm.discount, b) - 0.1 * b; }, 1e-9, 1e6,
        std::max(1.0, prm.strength), rng);
  }
}

double mean_class_size(const Model& model) {
  const std::size_t num_types = model.corpus().num_types();
  if (num_types == 0) return 0.0;
  double total = 0.0;
  for (WordId w = 0; w < num_types; ++w) {
    total += model.classes.size_of(model.lexicon.class_of(w));
  }
  return total / static_cast<double>(num_types);
}

std::string format_diagnostics(const IterationDiagnostics& d) {
  char buf[192];
  std::snprintf(buf, sizeof(buf),
                "iter=%llu log_joint=%.6f seconds=%.3f new_class_frac=%.4f mean_class_size=%.4f",
                static_cast<unsigned long long>(d.iteration), d.log_joint, d.seconds,
                d.new_class_frac, d.mean_class_size);
  return buf;
}

TrainResult run_training(Model& model, const SamplerConfig& config,
                         const std::function<void(const IterationDiagnostics&)>& on_iteration) {
  TrainResult result;
  ThreadPool pool(config.threads);
  std::vector<WordId> type_order;
  std::vector<Site> token_order;
  if (config.kind == SamplerKind::kLocal) {
    token_order.reserve(model.corpus().num_tokens());
    for (std::uint32_t s = 0; s < model.corpus().num_sentences(); ++s) {
      for (std::uint32_t i = 0; i < model.corpus().sentence(s).size(); ++i) {
        token_order.push_back({s, i});
      }
    }
  } else {
    type_order.resize(model.corpus().num_types());
    for (WordId w = 0; w < type_order.size(); ++w) type_order[w] = w;
  }
  for (std::uint32_t it = 0; it < config.iterations; ++it) {
    const auto t0 = std::chrono::steady_clock::now();
    std::uint64_t changed = 0;
    std::uint64_t swept = 0;
    // Orders restart from canonical before each shuffle so that a resumed
    // run consumes the generator exactly like an uninterrupted one.
    if (config.kind == SamplerKind::kLocal) {
      std::sort(token_order.begin(), token_order.end(), [](const Site& a, const Site& b) {
        return a.sentence != b.sentence ? a.sentence < b.sentence : a.position < b.position;
      });
      model.rng.shuffle(token_order);
      local_gibbs_sweep(model, model.rng, token_order);
    } else {
      for (WordId w = 0; w < type_order.size(); ++w) type_order[w] = w;
      model.rng.shuffle(type_order);
      for (WordId w : type_order) {
        const SweepResult r = sweep_type(model, w, config, model.rng, &pool);
        changed += r.class_changed ? 1 : 0;
        swept += 1;
      }
    }
    model.iteration += 1;
    if (config.hyper_cadence > 0 && model.iteration % config.hyper_cadence == 0) {
      resample_hyperparameters(model, model.rng);
    }
    const double seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    IterationDiagnostics diag{model.iteration, model.log_joint(), seconds,
                              swept > 0 ? static_cast<double>(changed) / static_cast<double>(swept)
                                        : 0.0,
                              mean_class_size(model)};
    result.diagnostics.push_back(diag);
    if (on_iteration) on_iteration(diag);
    if (config.checkpoint_interval > 0 && !config.checkpoint_path.empty() &&
        model.iteration % config.checkpoint_interval == 0) {
      save_checkpoint(config.checkpoint_path, model, config);
    }
  }
  return result;
}

}  // namespace lexhmm
