#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "lexhmm/model.hpp"
#include "lexhmm/restaurant.hpp"
#include "lexhmm/rng.hpp"

namespace lexhmm {

class ThreadPool;

struct SamplerConfig {
  SamplerKind kind = SamplerKind::kLex;
  EmissionMode emission = EmissionMode::kUniform;
  // Total particle count; particle 0 is the conditional-SMC replay of the
  // previous iteration, so particles == 1 makes every sweep an identity.
  std::uint32_t particles = 10;
  std::uint32_t iterations = 200;
  std::uint64_t seed = 1;
  double p_geom = 0.5;
  // Systematic resampling fires when ESS < threshold * particles; 0 disables.
  double resample_threshold = 0.5;
  // Hyperparameters are slice-resampled every `hyper_cadence` iterations; 0 disables.
  std::uint32_t hyper_cadence = 1;
  std::uint32_t threads = 1;
  std::uint32_t checkpoint_interval = 0;
  std::string checkpoint_path;

  bool lexicon_enabled() const { return kind == SamplerKind::kLex; }
};

// One SMC hypothesis inside a type sweep: a proposed ambiguity class, tag
// choices for the word type's sites, the seating-count journal against the
// frozen base state, and a log importance weight.
struct Particle {
  ClassId proposed_class = kInvalidId;
  const std::vector<TagId>* class_tags = nullptr;  // candidate tags, sorted
  std::vector<TagId> tags;                         // one entry per site
  Overlay overlay;
  SeatingDelta journal;
  double log_weight = 0.0;
  Rng rng{0};
};

struct SweepResult {
  std::uint32_t selected = 0;
  bool class_changed = false;
};

// Test support: force the final particle selection.
struct SweepHooks {
  std::optional<std::uint32_t> force_select;
};

// Type-blocked Particle Gibbs: removes all of one word type's transition,
// emission and class customers, propagates `config.particles` particles
// over its sites under proposed ambiguity classes (particle 0 replays the
// previous state), then commits one particle chosen by weight.
SweepResult sweep_type(Model& model, WordId word, const SamplerConfig& config,
                       Rng& main_rng, ThreadPool* pool = nullptr,
                       const SweepHooks& hooks = {});

// Token-level Gibbs baseline: resamples each listed site's tag from the
// product of its three transition predictives and its emission predictive,
// restricted to the type's ambiguity class.
void local_gibbs_sweep(Model& model, Rng& rng);
void local_gibbs_sweep(Model& model, Rng& rng, const std::vector<Site>& order);

// Slice-resamples one (discount, strength) pair per hierarchy level,
// including the class level when the lexicon is enabled; p_geom is fixed.
void resample_hyperparameters(Model& model, Rng& rng);

struct IterationDiagnostics {
  std::uint64_t iteration = 0;
  double log_joint = 0.0;
  double seconds = 0.0;
  double new_class_frac = 0.0;
  double mean_class_size = 0.0;
};

std::string format_diagnostics(const IterationDiagnostics& d);

struct TrainResult {
  std::vector<IterationDiagnostics> diagnostics;
};

// Runs `config.iterations` additional iterations (resuming from
// model.iteration), sweeping word types in a fresh random order per
// iteration (or every token for the local sampler), with optional
// hyperparameter resampling and checkpointing.
TrainResult run_training(
    Model& model, const SamplerConfig& config,
    const std::function<void(const IterationDiagnostics&)>& on_iteration = nullptr);

double mean_class_size(const Model& model);

}  // namespace lexhmm
