#pragma once

#include <iosfwd>
#include <memory>
#include <string>

#include "lexhmm/inference.hpp"
#include "lexhmm/model.hpp"

namespace lexhmm {

// Versioned little-endian binary dump of the full sampler state: corpus
// fingerprint, run configuration, hyperparameters, every restaurant,
// lexicon assignments, tag assignment and RNG state. Dishes and classes
// are written in canonical sorted order so that logically equal states
// serialize to identical bytes.
void save_checkpoint(std::ostream& out, const Model& model, const SamplerConfig& config);
void save_checkpoint(const std::string& path, const Model& model, const SamplerConfig& config);

// Serialized model bytes without the RNG section; used by tests that
// compare states irrespective of generator position.
std::string state_digest(const Model& model);

// Rebuilds the model against `corpus`. Throws on fingerprint or
// configuration mismatch with `expected` (pass nullptr to skip the
// config check).
std::unique_ptr<Model> load_checkpoint(std::istream& in, const Corpus& corpus,
                                       const SamplerConfig* expected, SamplerConfig* loaded);
std::unique_ptr<Model> load_checkpoint(const std::string& path, const Corpus& corpus,
                                       const SamplerConfig* expected, SamplerConfig* loaded);

}  // namespace lexhmm
