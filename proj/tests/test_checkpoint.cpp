#include "lexhmm/checkpoint.hpp"

#include <filesystem>
#include <fstream>
#include <sstream>

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

Corpus ckpt_corpus() {
  return tiny_corpus("lexhmm_ck.txt", "m\nn\nm\no\n\nn\no\nm\n\no\nm\n\n");
}

}  // namespace

TEST_CASE("checkpoint round-trips the full sampler state exactly") {
  const Corpus corpus = ckpt_corpus();
  for (const EmissionMode mode : {EmissionMode::kUniform, EmissionMode::kCharLm}) {
    Model m(corpus, 3, mode, true, 0.4);
    m.rng = Rng(101);
    Rng init(100);
    m.init_assignment(init);
    SamplerConfig config;
    config.emission = mode;
    config.p_geom = 0.4;
    config.iterations = 5;
    run_training(m, config);

    std::stringstream buf(std::ios::in | std::ios::out | std::ios::binary);
    save_checkpoint(buf, m, config);
    SamplerConfig loaded_config;
    const auto loaded = load_checkpoint(buf, corpus, &config, &loaded_config);

    CHECK(state_digest(*loaded) == state_digest(m));
    CHECK(loaded->rng.serialize() == m.rng.serialize());
    CHECK(loaded->iteration == m.iteration);
    CHECK(loaded_config.particles == config.particles);

    // The reloaded model keeps sampling identically to the original.
    SamplerConfig cont = config;
    cont.iterations = 2;
    run_training(m, cont);
    run_training(*loaded, cont);
    CHECK(state_digest(*loaded) == state_digest(m));
  }
}

TEST_CASE("checkpoint refuses a different corpus or configuration") {
  const Corpus corpus = ckpt_corpus();
  Model m(corpus, 2, EmissionMode::kUniform, true, 0.5);
  m.rng = Rng(7);
  Rng init(6);
  m.init_assignment(init);
  SamplerConfig config;

  std::stringstream buf(std::ios::in | std::ios::out | std::ios::binary);
  save_checkpoint(buf, m, config);

  const Corpus other = tiny_corpus("lexhmm_ck_other.txt", "different\nwords\n\n");
  CHECK_THROWS_WITH_AS(load_checkpoint(buf, other, &config, nullptr),
                       doctest::Contains("different corpus"), std::runtime_error);

  buf.clear();
  buf.seekg(0);
  SamplerConfig wrong = config;
  wrong.particles = config.particles + 5;
  CHECK_THROWS_WITH_AS(load_checkpoint(buf, corpus, &wrong, nullptr),
                       doctest::Contains("configuration"), std::runtime_error);

  std::stringstream junk(std::ios::in | std::ios::out | std::ios::binary);
  junk << "not a checkpoint at all";
  CHECK_THROWS_AS(load_checkpoint(junk, corpus, nullptr, nullptr), std::runtime_error);
}

TEST_CASE("resume equals the uninterrupted run bit-for-bit") {
  const Corpus corpus = ckpt_corpus();
  SamplerConfig config;
  config.particles = 5;
  config.seed = 31;
  config.iterations = 6;
  config.hyper_cadence = 2;

  auto fresh = [&] {
    auto m = std::make_unique<Model>(corpus, 3, config.emission, true, config.p_geom);
    m->rng = Rng(config.seed);
    m->init_assignment(m->rng);
    return m;
  };

  // Uninterrupted: 6 iterations in one go.
  auto full = fresh();
  run_training(*full, config);

  // Interrupted: 3 iterations, checkpoint, reload, 3 more.
  auto part = fresh();
  SamplerConfig first = config;
  first.iterations = 3;
  run_training(*part, first);
  std::stringstream buf(std::ios::in | std::ios::out | std::ios::binary);
  save_checkpoint(buf, *part, config);
  auto resumed = load_checkpoint(buf, corpus, &config, nullptr);
  SamplerConfig rest = config;
  rest.iterations = 3;
  run_training(*resumed, rest);

  CHECK(state_digest(*resumed) == state_digest(*full));
  CHECK(resumed->rng.serialize() == full->rng.serialize());
}
