#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <set>
#include <string>
#include <tuple>
#include <vector>

#include "vcd/descriptor.hpp"
#include "vcd/descriptor_io.hpp"
#include "vcd/edit_gate.hpp"
#include "vcd/evaluation.hpp"
#include "vcd/pipeline.hpp"
#include "vcd/scene_split.hpp"
#include "vcd/ssl_loss.hpp"

namespace py = pybind11;

namespace {

using FloatArray = py::array_t<float, py::array::c_style | py::array::forcecast>;

vcd::Frame to_frame(const FloatArray& a) {
  if (a.ndim() != 2) throw std::invalid_argument("frame must be a 2-D array (height, width)");
  vcd::Frame f(static_cast<int>(a.shape(1)), static_cast<int>(a.shape(0)));
  std::copy(a.data(), a.data() + a.size(), f.pixels.begin());
  return f;
}

py::array_t<float> to_array(const vcd::Frame& f) {
  py::array_t<float> out({f.height, f.width});
  std::copy(f.pixels.begin(), f.pixels.end(), out.mutable_data());
  return out;
}

std::vector<vcd::Frame> to_frames(const std::vector<FloatArray>& arrays) {
  std::vector<vcd::Frame> frames;
  frames.reserve(arrays.size());
  for (const auto& a : arrays) frames.push_back(to_frame(a));
  return frames;
}

vcd::loss::EmbeddingBatch make_batch(const vcd::loss::Matrix& vectors,
                                     const std::vector<std::pair<std::size_t, std::size_t>>& pairs) {
  return {vectors, pairs};
}

py::dict layout_dict(const vcd::scene::SceneLayout& l) {
  py::dict d;
  d["kind"] = vcd::scene::to_string(l.kind);
  d["x"] = l.x;
  d["y"] = l.y;
  d["confidence"] = l.confidence;
  return d;
}

vcd::scene::SceneLayout layout_from(const std::string& kind, int x, int y) {
  using vcd::scene::LayoutKind;
  for (const auto k : {LayoutKind::Single, LayoutKind::VSplit, LayoutKind::HSplit, LayoutKind::Grid}) {
    if (vcd::scene::to_string(k) == kind) return {k, x, y, 1.0};
  }
  throw std::invalid_argument("unknown layout kind '" + kind + "'");
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Video copy detection core: descriptors, losses, scene splitting, gating, evaluation.";

  m.def("reference_embed", [](const FloatArray& frame) { return vcd::reference_embed(to_frame(frame)); },
        py::arg("frame"), "32-d block intensity/gradient descriptor of a grayscale frame in [0,1].");
  m.def("l2_normalize", [](const std::vector<double>& v) { return vcd::l2_normalize(v); }, py::arg("v"));
  m.def("cosine", [](const std::vector<double>& a, const std::vector<double>& b) { return vcd::cosine(a, b); },
        py::arg("a"), py::arg("b"));
  m.def("random_small_descriptor", &vcd::random_small_descriptor, py::arg("dimension"),
        py::arg("epsilon") = vcd::kDefaultEpsilon, py::arg("seed") = 0);

  m.def("info_nce", [](const vcd::loss::Matrix& z, const std::vector<std::pair<std::size_t, std::size_t>>& pairs,
                       double tau) { return vcd::loss::info_nce(make_batch(z, pairs), tau); },
        py::arg("vectors"), py::arg("positive_pairs"), py::arg("tau") = 0.05);
  m.def("info_nce_grad", [](const vcd::loss::Matrix& z, const std::vector<std::pair<std::size_t, std::size_t>>& pairs,
                            double tau) { return vcd::loss::info_nce_grad(make_batch(z, pairs), tau); },
        py::arg("vectors"), py::arg("positive_pairs"), py::arg("tau") = 0.05);
  m.def("koleo", [](const vcd::loss::Matrix& z) { return vcd::loss::koleo(make_batch(z, {})); }, py::arg("vectors"));
  m.def("koleo_grad", [](const vcd::loss::Matrix& z) { return vcd::loss::koleo_grad(make_batch(z, {})); },
        py::arg("vectors"));
  m.def("combined_loss",
        [](const vcd::loss::Matrix& z, const std::vector<std::pair<std::size_t, std::size_t>>& pairs, double tau,
           double lambda) {
          const auto r = vcd::loss::combined_loss(make_batch(z, pairs), {tau, lambda});
          return std::make_tuple(r.value, r.gradient);
        },
        py::arg("vectors"), py::arg("positive_pairs"), py::arg("tau") = 0.05, py::arg("lambda_") = 1.0,
        "Returns (value, gradient).");
  m.def("toy_train",
        [](const vcd::loss::Matrix& z, const std::vector<std::pair<std::size_t, std::size_t>>& pairs, double tau,
           double lambda, int steps, double lr) {
          auto r = vcd::loss::toy_train(make_batch(z, pairs), {tau, lambda}, steps, lr);
          return std::make_tuple(r.batch.vectors, r.trace);
        },
        py::arg("vectors"), py::arg("positive_pairs"), py::arg("tau") = 0.05, py::arg("lambda_") = 1.0,
        py::arg("steps") = 100, py::arg("learning_rate") = 0.01, "Returns (vectors, loss_trace).");

  m.def("detect_layout",
        [](const std::vector<FloatArray>& frames) { return layout_dict(vcd::scene::detect_layout(to_frames(frames))); },
        py::arg("frames"));
  m.def("split_video",
        [](const std::vector<FloatArray>& frames, const std::string& kind, int x, int y) {
          const auto tracks = vcd::scene::split_video("py", to_frames(frames), layout_from(kind, x, y));
          std::vector<std::vector<py::array_t<float>>> out;
          for (const auto& t : tracks) {
            std::vector<py::array_t<float>> fs;
            for (const auto& f : t.frames) fs.push_back(to_array(f));
            out.push_back(std::move(fs));
          }
          return out;
        },
        py::arg("frames"), py::arg("kind"), py::arg("x") = -1, py::arg("y") = -1);

  m.def("edit_score",
        [](const std::vector<double>& features, const std::vector<double>& weights, double bias) {
          if (weights.size() != vcd::gate::kFeatureCount) throw std::invalid_argument("expected 5 weights");
          vcd::gate::GateModel model;
          std::copy(weights.begin(), weights.end(), model.weights.begin());
          model.bias = bias;
          return vcd::gate::edit_score(features, model);
        },
        py::arg("features"), py::arg("weights"), py::arg("bias"));

  m.def("micro_ap",
        [](const std::vector<std::tuple<std::string, std::string, double>>& pairs,
           const std::set<std::pair<std::string, std::string>>& truth) {
          std::vector<vcd::retrieval::CandidatePair> cands;
          for (const auto& [q, r, s] : pairs) cands.push_back({q, r, s});
          return vcd::eval::micro_ap(std::move(cands), vcd::eval::GroundTruth{{truth.begin(), truth.end()}});
        },
        py::arg("pairs"), py::arg("truth"));

  m.def("encode_descriptors",
        [](std::uint32_t dimension, const std::vector<std::tuple<std::string, float, std::vector<float>>>& records) {
          vcd::DescriptorSet set{dimension, {}};
          for (const auto& [id, t, v] : records) set.records.push_back({id, t, v});
          const auto bytes = vcd::encode_descriptors(set);
          return py::bytes(reinterpret_cast<const char*>(bytes.data()), bytes.size());
        },
        py::arg("dimension"), py::arg("records"));
  m.def("decode_descriptors",
        [](const py::bytes& data) {
          const std::string s = data;
          const auto set = vcd::decode_descriptors(std::vector<std::uint8_t>(s.begin(), s.end()));
          std::vector<std::tuple<std::string, float, std::vector<float>>> records;
          for (const auto& r : set.records) records.emplace_back(r.video_id, r.timestamp_s, r.vector);
          return std::make_tuple(set.dimension, records);
        },
        py::arg("data"), "Returns (dimension, [(video_id, timestamp_s, vector)]).");

  m.def("run_losscheck",
        [](double tau, double lambda, int batches, std::uint64_t seed) {
          vcd::pipeline::LossCheckOptions o;
          o.tau = tau;
          o.lambda = lambda;
          o.batches = batches;
          o.seed = seed;
          const auto r = vcd::pipeline::run_losscheck(o);
          return std::make_tuple(r.passed, r.json.dump());
        },
        py::arg("tau") = 0.05, py::arg("lambda_") = 1.0, py::arg("batches") = 20, py::arg("seed") = 0,
        "Returns (passed, json_report).");
}
