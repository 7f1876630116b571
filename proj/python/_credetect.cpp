// Thin Python surface over the core: fingerprints, calibration, detection
// against an in-memory registry, the hybrid envelope, chain verification and
// the scenario runner. Rich C++ objects come back as plain dicts.

#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include <fstream>

#include "json.hpp"

#include "credetect/calibration.hpp"
#include "credetect/crypto.hpp"
#include "credetect/detector.hpp"
#include "credetect/errors.hpp"
#include "credetect/fingerprint.hpp"
#include "credetect/ledger.hpp"
#include "credetect/simulation.hpp"

namespace py = pybind11;
using namespace credetect;

namespace {

ByteView view(const py::bytes& b) {
  const std::string_view s = b;
  return {reinterpret_cast<const std::uint8_t*>(s.data()), s.size()};
}

py::bytes to_py(const Bytes& b) { return {reinterpret_cast<const char*>(b.data()), b.size()}; }

SimHashParams make_params(std::size_t shingle_width, const std::string& weighting) {
  SimHashParams p;
  p.shingle_width = shingle_width;
  p.weighting = weighting_from_string(weighting);
  p.validate();
  return p;
}

// Registry of legal media keyed by serial, as a DA would keep locally.
class Registry {
 public:
  explicit Registry(unsigned theta, std::size_t shingle_width, const std::string& weighting)
      : theta_(theta), params_(make_params(shingle_width, weighting)) {}

  Serial add(const std::string& text) {
    const auto fp = fingerprint_media(text, params_);
    index_.insert(next_, fp.hash_id, fp.lshv);
    return next_++;
  }

  py::dict detect_text(const std::string& text) const {
    const auto v = detect(as_bytes(text), index_, params_, theta_);
    py::dict d;
    d["verdict"] = std::string(to_string(v.kind));
    d["serial"] = v.kind == Verdict::Legitimate ? py::object(py::none()) : py::int_(v.serial);
    d["distance"] = v.kind == Verdict::PartialPiracy ? py::object(py::int_(v.distance.value)) : py::object(py::none());
    d["hash_id"] = v.fingerprint.hash_id.hex();
    d["lshv"] = v.fingerprint.lshv.value;
    return d;
  }

  void enable_multi_index() { index_.enable_multi_index(theta_); }
  std::size_t size() const { return index_.size(); }
  unsigned theta() const { return theta_.theta(); }

 private:
  Threshold theta_;
  SimHashParams params_;
  LocalIndex index_;
  Serial next_ = 1;
};

py::object json_to_py(const nlohmann::ordered_json& j) {
  return py::module_::import("json").attr("loads")(j.dump());
}

}  // namespace

PYBIND11_MODULE(_credetect, m) {
  m.doc() = "Media fingerprinting, piracy detection and escrow arbitration";

  py::register_exception<Error>(m, "Error");

  m.attr("DEFAULT_THETA") = Threshold::kDefault;

  m.def(
      "hash_id", [](const py::bytes& data) { return compute_hash_id(view(data)).hex(); }, py::arg("data"),
      "SHA-256 hashID of raw bytes, lowercase hex.");
  m.def(
      "simhash",
      [](const std::string& text, std::size_t shingle_width, const std::string& weighting) {
        return simhash(text, make_params(shingle_width, weighting)).value;
      },
      py::arg("text"), py::arg("shingle_width") = 4, py::arg("weighting") = "tf");
  m.def(
      "hamming_distance", [](std::uint64_t a, std::uint64_t b) { return hamming_distance({a}, {b}).value; },
      py::arg("a"), py::arg("b"));
  m.def("reference_similarity", &reference_similarity, py::arg("a"), py::arg("b"),
        "Jaccard similarity of character 3-shingle sets.");
  m.def("perturb_text", &perturb_text, py::arg("text"), py::arg("edit_rate"), py::arg("seed"));
  m.def("synthetic_corpus", &generate_synthetic_corpus, py::arg("count") = kBundledCorpusSize,
        py::arg("seed") = kBundledCorpusSeed);

  m.def(
      "calibrate",
      [](const std::vector<std::string>& corpus, std::size_t n_base, std::size_t n_perturbed, std::uint64_t seed,
         double min_similarity, double max_edit_rate) {
        CalibrationOptions o;
        o.n_base = n_base;
        o.n_perturbed = n_perturbed;
        o.seed = seed;
        o.min_pirate_similarity = min_similarity;
        o.max_edit_rate = max_edit_rate;
        const auto r = calibrate(corpus, o);
        py::list samples;
        for (const auto& s : r.samples()) samples.append(py::make_tuple(s.distance.value, s.similarity));
        py::dict d;
        d["slope"] = r.model.slope;
        d["intercept"] = r.model.intercept;
        d["r_squared"] = r.model.r_squared;
        d["pearson_r"] = r.pearson_r;
        d["theta"] = r.threshold.theta();
        d["samples"] = samples;
        return d;
      },
      py::arg("corpus"), py::arg("n_base") = 1000, py::arg("n_perturbed") = 500, py::arg("seed") = 1,
      py::arg("min_similarity") = 0.8, py::arg("max_edit_rate") = 0.04);

  py::class_<Registry>(m, "Registry")
      .def(py::init<unsigned, std::size_t, const std::string&>(), py::arg("theta") = Threshold::kDefault,
           py::arg("shingle_width") = 4, py::arg("weighting") = "tf")
      .def("add", &Registry::add, py::arg("text"), "Register a medium; returns its serial N.")
      .def("detect", &Registry::detect_text, py::arg("text"))
      .def("enable_multi_index", &Registry::enable_multi_index)
      .def_property_readonly("theta", &Registry::theta)
      .def("__len__", &Registry::size);

  py::class_<KeyPair>(m, "KeyPair")
      .def_static("from_seed", &KeyPair::from_seed, py::arg("seed"))
      .def_property_readonly("public_key", [](const KeyPair& k) { return k.public_key.to_base64(); });

  m.def(
      "encrypt",
      [](const KeyPair& recipient, const py::bytes& data, std::uint64_t seed) {
        return to_py(hybrid_encrypt(recipient.public_key, view(data), seed).serialize());
      },
      py::arg("recipient"), py::arg("data"), py::arg("seed"), "Hybrid envelope addressed to recipient.");
  m.def(
      "decrypt",
      [](const KeyPair& recipient, const py::bytes& blob) {
        return to_py(hybrid_decrypt(recipient.secret_key, HybridCiphertext::deserialize(view(blob))));
      },
      py::arg("recipient"), py::arg("blob"));

  m.def(
      "verify_chain",
      [](const std::string& jsonl) {
        const auto c = verify_chain_text(jsonl);
        py::dict d;
        d["ok"] = c.ok();
        if (c.violation) {
          d["block"] = c.violation->block;
          d["tx"] = c.violation->tx ? py::object(py::int_(*c.violation->tx)) : py::object(py::none());
          d["reason"] = c.violation->reason;
        }
        return d;
      },
      py::arg("jsonl"), "Validate an exported chain.jsonl text.");

  m.def(
      "run_scenario",
      [](const std::filesystem::path& config, const std::filesystem::path& store_dir) {
        std::ifstream in(config);
        if (!in) throw Error(ErrorCode::IoError, "cannot open " + config.string());
        const auto cfg = ScenarioConfig::from_json(nlohmann::json::parse(in), config.parent_path());
        const auto report = [&] {
          py::gil_scoped_release release;
          return run_scenario(cfg, store_dir);
        }();
        py::dict d = json_to_py(report.to_json());
        d["ok"] = report.ok();
        d["event_log"] = report.event_log_text();
        d["chain_jsonl"] = export_chain(report.chain);
        return d;
      },
      py::arg("config"), py::arg("store_dir"), "Run a scenario JSON; returns the report as a dict.");
}
