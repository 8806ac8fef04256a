#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "lexhmm/checkpoint.hpp"
#include "lexhmm/corpus.hpp"
#include "lexhmm/eval.hpp"
#include "lexhmm/inference.hpp"
#include "lexhmm/model.hpp"

namespace py = pybind11;
using namespace lexhmm;

namespace {

SamplerKind parse_kind(const std::string& s) {
  if (s == "lex") return SamplerKind::kLex;
  if (s == "pyp-type") return SamplerKind::kPypType;
  if (s == "local") return SamplerKind::kLocal;
  throw std::invalid_argument("sampler must be lex, pyp-type, or local");
}

EmissionMode parse_emission(const std::string& s) {
  if (s == "uniform") return EmissionMode::kUniform;
  if (s == "charlm") return EmissionMode::kCharLm;
  throw std::invalid_argument("emission must be uniform or charlm");
}

py::dict train_py(const Corpus& corpus, std::uint32_t tags, const std::string& sampler,
                  const std::string& emission, std::uint32_t particles, std::uint32_t iterations,
                  std::uint64_t seed, double p_geom, double resample_threshold,
                  std::uint32_t hyper_cadence, std::uint32_t threads) {
  SamplerConfig config;
  config.kind = parse_kind(sampler);
  config.emission = parse_emission(emission);
  config.particles = particles;
  config.iterations = iterations;
  config.seed = seed;
  config.p_geom = p_geom;
  config.resample_threshold = resample_threshold;
  config.hyper_cadence = hyper_cadence;
  config.threads = threads;

  Model model(corpus, tags, config.emission, config.lexicon_enabled(), config.p_geom);
  model.rng = Rng(config.seed);
  model.init_assignment(model.rng);
  TrainResult result;
  {
    py::gil_scoped_release release;
    result = run_training(model, config);
  }

  py::dict out;
  out["tags"] = model.tags;
  std::vector<std::vector<TagId>> lexicon;
  lexicon.reserve(corpus.num_types());
  for (WordId w = 0; w < corpus.num_types(); ++w) {
    lexicon.push_back(model.classes.tags(model.lexicon.class_of(w)));
  }
  out["lexicon"] = lexicon;
  out["log_joint"] = model.log_joint();
  py::list diagnostics;
  for (const IterationDiagnostics& d : result.diagnostics) {
    py::dict row;
    row["iteration"] = d.iteration;
    row["log_joint"] = d.log_joint;
    row["seconds"] = d.seconds;
    row["new_class_frac"] = d.new_class_frac;
    row["mean_class_size"] = d.mean_class_size;
    diagnostics.append(row);
  }
  out["diagnostics"] = diagnostics;
  if (corpus.has_gold()) {
    out["m1"] = many_to_one(model.tags_flat(), corpus.gold_flat());
    out["v_measure"] = v_measure(model.tags_flat(), corpus.gold_flat());
  }
  return out;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Pitman-Yor lexicon HMM for unsupervised part-of-speech induction";

  py::class_<Site>(m, "Site")
      .def_readonly("sentence", &Site::sentence)
      .def_readonly("position", &Site::position)
      .def("__repr__", [](const Site& s) {
        return "Site(" + std::to_string(s.sentence) + ", " + std::to_string(s.position) + ")";
      });

  py::class_<Corpus>(m, "Corpus")
      .def_static("read_conllx", &Corpus::read_conllx, py::arg("path"),
                  py::arg("use_postag") = false)
      .def_static("read_vertical", &Corpus::read_vertical, py::arg("path"))
      .def_property_readonly("num_tokens", &Corpus::num_tokens)
      .def_property_readonly("num_sentences", &Corpus::num_sentences)
      .def_property_readonly("num_types", &Corpus::num_types)
      .def_property_readonly("sentences", &Corpus::sentences)
      .def_property_readonly("gold", &Corpus::gold)
      .def_property_readonly("gold_tag_names", &Corpus::gold_tag_names)
      .def("has_gold", &Corpus::has_gold)
      .def("surface", [](const Corpus& c, WordId w) { return c.type(w).surface; })
      .def("frequency", [](const Corpus& c, WordId w) { return c.type(w).frequency; })
      .def("lookup",
           [](const Corpus& c, const std::string& s) -> py::object {
             const auto id = c.lookup(s);
             if (!id) return py::none();
             return py::int_(*id);
           })
      .def("sites_of_type", &Corpus::sites_of_type, py::return_value_policy::copy)
      .def("write_vertical", &Corpus::write_vertical, py::arg("path"), py::arg("tags"));

  m.def("train", &train_py, py::arg("corpus"), py::arg("tags"), py::arg("sampler") = "lex",
        py::arg("emission") = "uniform", py::arg("particles") = 10,
        py::arg("iterations") = 200, py::arg("seed") = 1, py::arg("p_geom") = 0.5,
        py::arg("resample_threshold") = 0.5, py::arg("hyper_cadence") = 1,
        py::arg("threads") = 1,
        "Runs the sampler and returns tags, the committed lexicon and diagnostics");

  m.def("many_to_one", &many_to_one, py::arg("pred"), py::arg("gold"));
  m.def("v_measure", &v_measure, py::arg("pred"), py::arg("gold"));
  m.def("extract_classes", &extract_classes, py::arg("tags"), py::arg("corpus"));
  m.def(
      "zipf_table",
      [](const std::vector<std::vector<std::uint32_t>>& classes) {
        py::list rows;
        for (const ZipfRow& r : zipf_table(classes)) {
          rows.append(py::make_tuple(r.rank, r.type_count, r.class_tags));
        }
        return rows;
      },
      py::arg("classes"));
  m.def(
      "fit_log_log",
      [](const std::vector<std::vector<std::uint32_t>>& classes) {
        const LogLogFit f = fit_log_log(zipf_table(classes));
        return py::make_tuple(f.slope, f.intercept, f.r_squared);
      },
      py::arg("classes"));
}
