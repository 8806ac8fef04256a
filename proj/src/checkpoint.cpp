#include "lexhmm/checkpoint.hpp"

#include <algorithm>
#include <cstring>
#include <fstream>
#include <sstream>

namespace lexhmm {
namespace {

constexpr char kMagic[4] = {'L', 'X', 'H', 'M'};
constexpr std::uint32_t kVersion = 1;

template <typename T>
void put(std::ostream& out, T v) {
  static_assert(std::is_trivially_copyable_v<T>);
  out.write(reinterpret_cast<const char*>(&v), sizeof(T));
}

template <typename T>
T get(std::istream& in) {
  T v;
  in.read(reinterpret_cast<char*>(&v), sizeof(T));
  if (!in) throw std::runtime_error("truncated checkpoint");
  return v;
}

void put_string(std::ostream& out, const std::string& s) {
  put<std::uint32_t>(out, static_cast<std::uint32_t>(s.size()));
  out.write(s.data(), static_cast<std::streamsize>(s.size()));
}

std::string get_string(std::istream& in) {
  const auto n = get<std::uint32_t>(in);
  std::string s(n, '\0');
  in.read(s.data(), n);
  if (!in) throw std::runtime_error("truncated checkpoint");
  return s;
}

void put_restaurant(std::ostream& out, const Restaurant& r,
                    const std::vector<ClassId>* class_remap) {
  put<std::int64_t>(out, r.customers());
  put<std::int64_t>(out, r.tables());
  // (written dish id, id inside the arena); class dishes are renumbered
  // into canonical registry order.
  std::vector<std::pair<Dish, Dish>> dishes;
  dishes.reserve(r.dishes().size());
  for (const auto& [d, _] : r.dishes()) {
    dishes.push_back({class_remap != nullptr ? (*class_remap)[d] : d, d});
  }
  std::sort(dishes.begin(), dishes.end());
  put<std::uint32_t>(out, static_cast<std::uint32_t>(dishes.size()));
  for (const auto& [d, original] : dishes) {
    const DishCounts* dc = r.find(original);
    put<std::uint32_t>(out, d);
    put<std::int64_t>(out, dc->customers);
    put<std::int32_t>(out, dc->tables);
    put<std::uint32_t>(out, static_cast<std::uint32_t>(dc->hist.buckets().size()));
    for (const auto& [size, cnt] : dc->hist.buckets()) {
      put<std::uint32_t>(out, size);
      put<std::int32_t>(out, cnt);
    }
  }
}

void get_restaurant(std::istream& in, RestaurantArena& arena, RestaurantId rid) {
  const auto customers = get<std::int64_t>(in);
  const auto tables = get<std::int64_t>(in);
  const auto ndishes = get<std::uint32_t>(in);
  CountView view(arena);
  for (std::uint32_t i = 0; i < ndishes; ++i) {
    const auto dish = get<std::uint32_t>(in);
    const auto dcust = get<std::int64_t>(in);
    const auto dtables = get<std::int32_t>(in);
    const auto nbuckets = get<std::uint32_t>(in);
    std::int64_t seen_c = 0;
    std::int64_t seen_t = 0;
    for (std::uint32_t bkt = 0; bkt < nbuckets; ++bkt) {
      const auto size = get<std::uint32_t>(in);
      const auto cnt = get<std::int32_t>(in);
      if (size == 0 || cnt <= 0) throw std::runtime_error("corrupt checkpoint histogram");
      for (std::int32_t rep = 0; rep < cnt; ++rep) {
        view.force({rid, dish, 0, 1}, nullptr);
        for (std::uint32_t sz = 1; sz < size; ++sz) {
          view.force({rid, dish, sz, sz + 1}, nullptr);
        }
      }
      seen_c += static_cast<std::int64_t>(size) * cnt;
      seen_t += cnt;
    }
    if (seen_c != dcust || seen_t != dtables) {
      throw std::runtime_error("corrupt checkpoint dish counts");
    }
  }
  if (arena.at(rid).customers() != customers || arena.at(rid).tables() != tables) {
    throw std::runtime_error("corrupt checkpoint restaurant totals");
  }
}

void write_body(std::ostream& out, const Model& model, const SamplerConfig& config,
                bool include_rng) {
  out.write(kMagic, 4);
  put<std::uint32_t>(out, kVersion);
  put<std::uint64_t>(out, model.corpus().fingerprint());
  put<std::uint8_t>(out, static_cast<std::uint8_t>(config.kind));
  put<std::uint8_t>(out, static_cast<std::uint8_t>(model.emission_mode()));
  put<std::uint32_t>(out, model.tagset().size);
  put<std::uint32_t>(out, config.particles);
  put<std::uint64_t>(out, config.seed);
  put<double>(out, model.p_geom());
  put<double>(out, config.resample_threshold);
  put<std::uint32_t>(out, config.hyper_cadence);
  put<std::uint64_t>(out, model.iteration);
  for (const PypParams& p : model.params) {
    put<double>(out, p.discount);
    put<double>(out, p.strength);
  }
  put<std::uint8_t>(out, include_rng ? 1 : 0);
  if (include_rng) put_string(out, model.rng.serialize());

  put<std::uint32_t>(out, static_cast<std::uint32_t>(model.tags.size()));
  for (const auto& sent : model.tags) {
    put<std::uint32_t>(out, static_cast<std::uint32_t>(sent.size()));
    for (TagId t : sent) put<std::uint32_t>(out, t);
  }

  // Referenced ambiguity classes in canonical (size, tags) order; stale
  // registry entries from rejected proposals are dropped.
  std::vector<bool> referenced(model.classes.size(), false);
  for (ClassId c : model.lexicon.assignments()) {
    if (c != kInvalidId) referenced[c] = true;
  }
  for (const auto& [dish, _] : model.arena.at(model.class_rest()).dishes()) {
    referenced[dish] = true;
  }
  std::vector<ClassId> order;
  for (ClassId c = 0; c < referenced.size(); ++c) {
    if (referenced[c]) order.push_back(c);
  }
  std::sort(order.begin(), order.end(), [&](ClassId x, ClassId y) {
    const auto& tx = model.classes.tags(x);
    const auto& ty = model.classes.tags(y);
    if (tx.size() != ty.size()) return tx.size() < ty.size();
    return tx < ty;
  });
  std::vector<ClassId> remap(model.classes.size(), kInvalidId);
  for (std::uint32_t i = 0; i < order.size(); ++i) remap[order[i]] = i;
  put<std::uint32_t>(out, static_cast<std::uint32_t>(order.size()));
  for (ClassId c : order) {
    const auto& tags = model.classes.tags(c);
    put<std::uint32_t>(out, static_cast<std::uint32_t>(tags.size()));
    for (TagId t : tags) put<std::uint32_t>(out, t);
  }
  put<std::uint32_t>(out, static_cast<std::uint32_t>(model.lexicon.assignments().size()));
  for (ClassId c : model.lexicon.assignments()) {
    put<std::uint32_t>(out, c == kInvalidId ? kInvalidId : remap[c]);
  }

  put<std::uint32_t>(out, static_cast<std::uint32_t>(model.arena.size()));
  for (RestaurantId r = 0; r < model.arena.size(); ++r) {
    put<std::uint8_t>(out, static_cast<std::uint8_t>(model.arena.level(r)));
    const bool is_class = (r == model.class_rest());
    put_restaurant(out, model.arena.at(r), is_class ? &remap : nullptr);
  }
}

}  // namespace

void save_checkpoint(std::ostream& out, const Model& model, const SamplerConfig& config) {
  write_body(out, model, config, /*include_rng=*/true);
  if (!out) throw std::runtime_error("checkpoint write failed");
}

void save_checkpoint(const std::string& path, const Model& model, const SamplerConfig& config) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path);
  save_checkpoint(out, model, config);
}

std::string state_digest(const Model& model) {
  std::ostringstream os(std::ios::binary);
  SamplerConfig dummy;
  dummy.kind = model.lexicon_enabled() ? SamplerKind::kLex : SamplerKind::kPypType;
  write_body(os, model, dummy, /*include_rng=*/false);
  return os.str();
}

std::unique_ptr<Model> load_checkpoint(std::istream& in, const Corpus& corpus,
                                       const SamplerConfig* expected, SamplerConfig* loaded) {
  char magic[4];
  in.read(magic, 4);
  if (!in || std::memcmp(magic, kMagic, 4) != 0) throw std::runtime_error("not a checkpoint");
  if (get<std::uint32_t>(in) != kVersion) throw std::runtime_error("unsupported checkpoint version");
  const auto fingerprint = get<std::uint64_t>(in);
  if (fingerprint != corpus.fingerprint()) {
    throw std::runtime_error("checkpoint was written for a different corpus");
  }
  SamplerConfig config;
  config.kind = static_cast<SamplerKind>(get<std::uint8_t>(in));
  config.emission = static_cast<EmissionMode>(get<std::uint8_t>(in));
  const auto num_tags = get<std::uint32_t>(in);
  config.particles = get<std::uint32_t>(in);
  config.seed = get<std::uint64_t>(in);
  config.p_geom = get<double>(in);
  config.resample_threshold = get<double>(in);
  config.hyper_cadence = get<std::uint32_t>(in);
  if (expected != nullptr) {
    if (expected->kind != config.kind || expected->emission != config.emission ||
        expected->particles != config.particles || expected->seed != config.seed ||
        expected->p_geom != config.p_geom ||
        expected->resample_threshold != config.resample_threshold ||
        expected->hyper_cadence != config.hyper_cadence) {
      throw std::runtime_error("checkpoint configuration does not match the requested run");
    }
  }

  auto model = std::make_unique<Model>(corpus, num_tags, config.emission,
                                       config.kind == SamplerKind::kLex, config.p_geom);
  model->iteration = get<std::uint64_t>(in);
  for (PypParams& p : model->params) {
    p.discount = get<double>(in);
    p.strength = get<double>(in);
  }
  if (get<std::uint8_t>(in) != 0) model->rng.deserialize(get_string(in));

  const auto nsent = get<std::uint32_t>(in);
  if (nsent != corpus.num_sentences()) throw std::runtime_error("checkpoint sentence count mismatch");
  for (std::uint32_t s = 0; s < nsent; ++s) {
    const auto len = get<std::uint32_t>(in);
    if (len != corpus.sentence(s).size()) throw std::runtime_error("checkpoint sentence length mismatch");
    for (std::uint32_t i = 0; i < len; ++i) model->tags[s][i] = get<std::uint32_t>(in);
  }

  const auto nclasses = get<std::uint32_t>(in);
  std::vector<ClassId> class_ids(nclasses);
  for (std::uint32_t c = 0; c < nclasses; ++c) {
    const auto sz = get<std::uint32_t>(in);
    std::vector<TagId> tags(sz);
    for (std::uint32_t i = 0; i < sz; ++i) tags[i] = get<std::uint32_t>(in);
    class_ids[c] = model->classes.intern(std::move(tags));
  }
  const auto ntypes = get<std::uint32_t>(in);
  if (ntypes != corpus.num_types()) throw std::runtime_error("checkpoint type count mismatch");
  for (WordId w = 0; w < ntypes; ++w) {
    const auto c = get<std::uint32_t>(in);
    if (c != kInvalidId) model->lexicon.assign(w, class_ids[c], model->classes);
  }

  const auto nrest = get<std::uint32_t>(in);
  if (nrest != model->arena.size()) throw std::runtime_error("checkpoint restaurant count mismatch");
  for (RestaurantId r = 0; r < nrest; ++r) {
    const auto level = get<std::uint8_t>(in);
    if (level != static_cast<std::uint8_t>(model->arena.level(r))) {
      throw std::runtime_error("checkpoint restaurant layout mismatch");
    }
    get_restaurant(in, model->arena, r);
  }
  if (loaded != nullptr) *loaded = config;
  return model;
}

std::unique_ptr<Model> load_checkpoint(const std::string& path, const Corpus& corpus,
                                       const SamplerConfig* expected, SamplerConfig* loaded) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open " + path);
  return load_checkpoint(in, corpus, expected, loaded);
}

}  // namespace lexhmm
