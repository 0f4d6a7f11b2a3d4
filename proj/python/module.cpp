#include <optional>
#include <string>
#include <tuple>
#include <vector>

#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "drasp/autograd.hpp"
#include "drasp/metrics.hpp"
#include "drasp/pooling.hpp"
#include "drasp/synthbench.hpp"

namespace py = pybind11;
using namespace pybind11::literals;

namespace {

using Array = py::array_t<double, py::array::c_style | py::array::forcecast>;
using Head = std::tuple<Array, Array, Array>;

drasp::Tensor to_tensor(const Array& a) {
  drasp::Shape shape(a.shape(), a.shape() + a.ndim());
  return {shape, std::vector<double>(a.data(), a.data() + a.size())};
}

Array to_array(const drasp::Tensor& t) {
  std::vector<py::ssize_t> shape(t.shape().begin(), t.shape().end());
  Array out(shape);
  std::copy(t.values().begin(), t.values().end(), out.mutable_data());
  return out;
}

drasp::FrameMatrix frames(const Array& x) {
  if (x.ndim() != 2) throw std::invalid_argument("frames must be a 2-d array (T x d)");
  return drasp::FrameMatrix(to_tensor(x));
}

drasp::AttentionParams attention(const Head& h) {
  return drasp::AttentionParams::fixed(to_tensor(std::get<0>(h)), to_tensor(std::get<1>(h)), to_tensor(std::get<2>(h)));
}

std::vector<drasp::AttentionParams> attention(const std::vector<Head>& heads) {
  std::vector<drasp::AttentionParams> out;
  for (const auto& h : heads) out.push_back(attention(h));
  return out;
}

drasp::SegmentationSpec segmentation(std::size_t n, bool drop_partial) {
  return {n, drop_partial ? drasp::PartialSegment::Drop : drasp::PartialSegment::Include};
}

std::pair<Array, Array> stats(const drasp::PooledStats& s) { return {to_array(s.mean.value()), to_array(s.std.value())}; }

/// DRASP output plus gradients of <upstream, output> with respect to every input.
py::dict drasp_backward(const Array& x, std::size_t n, const Head& h, double alpha, double beta, const Array& upstream,
                        bool drop_partial) {
  auto xv = drasp::Var::leaf(to_tensor(x));
  auto p = drasp::AttentionParams::leaves(to_tensor(std::get<0>(h)), to_tensor(std::get<1>(h)),
                                          to_tensor(std::get<2>(h)));
  auto f = drasp::FusionParams::leaves(alpha, beta);
  auto out = drasp::drasp_pool(drasp::FrameMatrix(xv), segmentation(n, drop_partial), p, f);
  drasp::backward(drasp::sum(drasp::mul(out, drasp::Var::constant(to_tensor(upstream)))));
  return py::dict("output"_a = to_array(out.value()), "frames"_a = to_array(xv.grad()),
                  "weight"_a = to_array(p.weight.grad()), "bias"_a = to_array(p.bias.grad()),
                  "vector"_a = to_array(p.vector.grad()), "alpha"_a = f.alpha.grad().item(),
                  "beta"_a = f.beta.grad().item());
}

py::dict clip_dict(const drasp::SyntheticClip& c) {
  return py::dict("system_id"_a = c.system_id, "system_index"_a = c.system_index, "clip_index"_a = c.clip_index,
                  "frames"_a = to_array(c.frames), "artifact_mask"_a = c.artifact_mask, "true_mos"_a = c.true_mos,
                  "split"_a = std::string(drasp::to_string(c.split)));
}

}  // namespace

PYBIND11_MODULE(_drasp, m) {
  m.doc() = "Pooling operators, system-level metrics and the synthetic MOS benchmark";

  m.def("softmax", [](const Array& z, double t) { return to_array(drasp::softmax(to_tensor(z), t)); }, "logits"_a,
        "temperature"_a = 1.0);
  m.def("clamped_sqrt", [](const Array& x) { return to_array(drasp::clamped_sqrt(to_tensor(x))); });

  m.def("average_pool", [](const Array& x) { return to_array(drasp::average_pool(frames(x)).value()); });
  m.def("statistics_pool", [](const Array& x) { return stats(drasp::statistics_pool(frames(x))); },
        "Returns (mean, std) with population variance.");
  m.def("attention_weights",
        [](const Array& x, const Head& h, double t) {
          return to_array(drasp::attention_weights(frames(x).frames(), attention(h), t).value());
        },
        "frames"_a, "head"_a, "temperature"_a = 1.0);
  m.def("attentive_pool",
        [](const Array& x, const Head& h, double t) {
          return to_array(drasp::attentive_pool(frames(x), attention(h), t).value());
        },
        "frames"_a, "head"_a, "temperature"_a = 1.0);
  m.def("attentive_statistics_pool",
        [](const Array& x, const Head& h) { return stats(drasp::attentive_statistics_pool(frames(x), attention(h))); });
  m.def("segment_average",
        [](const Array& x, std::size_t n, bool drop) {
          return to_array(drasp::segment_average(frames(x), segmentation(n, drop)).value());
        },
        "frames"_a, "segment_length"_a, "drop_partial"_a = false);
  m.def("segmental_attentive_statistics_pool",
        [](const Array& x, std::size_t n, const Head& h, bool drop) {
          return stats(drasp::segmental_attentive_statistics_pool(frames(x), segmentation(n, drop), attention(h)));
        },
        "frames"_a, "segment_length"_a, "head"_a, "drop_partial"_a = false);
  m.def("drasp_pool",
        [](const Array& x, std::size_t n, const Head& h, double alpha, double beta, bool drop) {
          return to_array(
              drasp::drasp_pool(frames(x), segmentation(n, drop), attention(h), drasp::FusionParams::fixed(alpha, beta))
                  .value());
        },
        "frames"_a, "segment_length"_a, "head"_a, "alpha"_a = 1.0, "beta"_a = 0.0, "drop_partial"_a = false);
  m.def("drasp_pool_backward", &drasp_backward, "frames"_a, "segment_length"_a, "head"_a, "alpha"_a, "beta"_a,
        "upstream"_a, "drop_partial"_a = false);
  m.def("multihead_attentive_pool", [](const Array& x, const std::vector<Head>& heads) {
    return to_array(drasp::multihead_attentive_pool(frames(x), attention(heads)).value());
  });
  m.def("multires_multihead_attentive_pool",
        [](const Array& x, const std::vector<Head>& heads, const std::vector<double>& temperatures) {
          return to_array(drasp::multires_multihead_attentive_pool(frames(x), attention(heads), temperatures).value());
        });
  m.def("pooling_methods", [] {
    std::vector<std::string> names;
    for (auto method : drasp::all_pooling_methods()) names.emplace_back(drasp::to_string(method));
    return names;
  });

  m.def("mse", [](const std::vector<double>& x, const std::vector<double>& y) { return drasp::mse(x, y); });
  m.def("lcc", [](const std::vector<double>& x, const std::vector<double>& y) { return drasp::lcc(x, y); });
  m.def("srcc", [](const std::vector<double>& x, const std::vector<double>& y) { return drasp::srcc(x, y); });
  m.def("ktau", [](const std::vector<double>& x, const std::vector<double>& y) { return drasp::ktau(x, y); });
  m.def("average_ranks", [](const std::vector<double>& x) { return drasp::average_ranks(x); });
  m.def("system_aggregate", &drasp::system_aggregate, "clip_scores"_a);

  py::class_<drasp::BenchConfig>(m, "BenchConfig")
      .def(py::init<>())
      .def_readwrite("num_systems", &drasp::BenchConfig::num_systems)
      .def_readwrite("clips_per_system", &drasp::BenchConfig::clips_per_system)
      .def_readwrite("min_frames", &drasp::BenchConfig::min_frames)
      .def_readwrite("max_frames", &drasp::BenchConfig::max_frames)
      .def_readwrite("input_width", &drasp::BenchConfig::input_width)
      .def_readwrite("noise", &drasp::BenchConfig::noise)
      .def_readwrite("global_signal", &drasp::BenchConfig::global_signal)
      .def_readwrite("max_artifact_drop", &drasp::BenchConfig::max_artifact_drop)
      .def_readwrite("artifact_amplitude", &drasp::BenchConfig::artifact_amplitude)
      .def_readwrite("min_spike_fraction", &drasp::BenchConfig::min_spike_fraction)
      .def_readwrite("max_spike_fraction", &drasp::BenchConfig::max_spike_fraction)
      .def_readwrite("max_spike_severity", &drasp::BenchConfig::max_spike_severity)
      .def_readwrite("severity_coupling", &drasp::BenchConfig::severity_coupling)
      .def_readwrite("seed", &drasp::BenchConfig::seed);

  m.def(
      "generate",
      [](const drasp::BenchConfig& config) {
        const auto ds = drasp::generate(config);
        py::list clips;
        for (const auto& c : ds.clips) clips.append(clip_dict(c));
        return py::dict("clips"_a = clips, "truth"_a = drasp::system_truth(ds));
      },
      "config"_a = drasp::BenchConfig{},
      "Returns {'clips': [...], 'truth': {system_id: mean true MOS}}.");
}
