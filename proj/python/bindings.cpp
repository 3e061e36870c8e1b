#include <pybind11/eigen.h>
#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include "analogy/checkpoint.hpp"
#include "analogy/eval.hpp"
#include "analogy/inference.hpp"
#include "analogy/io.hpp"
#include "analogy/preview.hpp"
#include "analogy/trainer.hpp"
#include "analogy/video.hpp"

namespace py = pybind11;
using namespace analogy;

namespace {

using Array = py::array_t<double, py::array::c_style | py::array::forcecast>;

// Python side images are (H, W, 3) float arrays; the library stores planes.
Image to_image(const Array& a) {
  if (a.ndim() != 3 || a.shape(2) != 3) throw std::invalid_argument("expected an (H, W, 3) array");
  const int h = static_cast<int>(a.shape(0)), w = static_cast<int>(a.shape(1));
  Image img({h, w});
  auto v = a.unchecked<3>();
  for (int c = 0; c < 3; ++c)
    for (int y = 0; y < h; ++y)
      for (int x = 0; x < w; ++x) img.at(c, y, x) = v(y, x, c);
  return img;
}

Array to_array(const Image& img) {
  Array a({img.height(), img.width(), 3});
  auto v = a.mutable_unchecked<3>();
  for (int c = 0; c < 3; ++c)
    for (int y = 0; y < img.height(); ++y)
      for (int x = 0; x < img.width(); ++x) v(y, x, c) = img.at(c, y, x);
  return a;
}

TrainConfig config_from(const std::string& json_text) {
  return train_config_from_json(nlohmann::json::parse(json_text));
}

Domain direction(const std::string& s) {
  if (s == "a2b") return Domain::A;
  if (s == "b2a") return Domain::B;
  throw std::invalid_argument("direction must be a2b or b2a");
}

InferenceRequest request(const std::string& dir, int inject, bool noise, std::uint64_t seed) {
  InferenceRequest r;
  r.from = direction(dir);
  r.inject = inject;
  r.noise = noise;
  r.seed = seed;
  return r;
}

struct TrainOutput {
  ModelBundle bundle;
  std::vector<LossReport> losses;
};

TrainOptions options(const std::string& checkpoint_dir, int stop_after_scale) {
  TrainOptions o;
  o.checkpoint_dir = checkpoint_dir;
  o.stop_after_scale = stop_after_scale;
  return o;
}

std::vector<std::uint64_t> fingerprints(const ModelBundle& m) {
  std::vector<std::uint64_t> out;
  for (const auto& s : m.nets) out.push_back(s.fingerprint());
  return out;
}

}  // namespace

PYBIND11_MODULE(_analogy, m) {
  m.doc() = "Native core of the analogy package";
  ad::tune_allocator();

  m.def("default_config_json", [] { return to_json(TrainConfig{}).dump(); });
  m.def("validate_config_json", [](const std::string& j) {
    const TrainConfig c = config_from(j);
    c.validate();
    return to_json(c).dump();
  });

  m.def("load_image", [](const std::filesystem::path& p) { return to_array(load_image(p)); });
  m.def("save_image", [](const std::filesystem::path& p, const Array& a) { save_image(p, to_image(a)); });
  m.def("resize", [](const Array& a, int h, int w) { return to_array(resize(to_image(a), {h, w})); });
  m.def("schedule_sizes", [](int h, int w, double r, int min_size, int max_size, int k_offset) {
    const ScaleSchedule s = build_schedule({h, w}, r, min_size, max_size, k_offset);
    std::vector<std::pair<int, int>> sizes;
    for (int n = 0; n <= s.N; ++n) sizes.emplace_back(s.at(n).height, s.at(n).width);
    return sizes;
  });

  py::class_<LossReport>(m, "LossReport")
      .def_readonly("scale", &LossReport::scale)
      .def_readonly("iteration", &LossReport::iteration)
      .def_readonly("adv_A1", &LossReport::adv_A1)
      .def_readonly("adv_B1", &LossReport::adv_B1)
      .def_readonly("adv_A2", &LossReport::adv_A2)
      .def_readonly("adv_B2", &LossReport::adv_B2)
      .def_readonly("gp_A", &LossReport::gp_A)
      .def_readonly("gp_B", &LossReport::gp_B)
      .def_readonly("recon_A", &LossReport::recon_A)
      .def_readonly("recon_B", &LossReport::recon_B)
      .def_readonly("cycle", &LossReport::cycle)
      .def_readonly("total_G", &LossReport::total_G)
      .def_readonly("total_D", &LossReport::total_D);

  py::class_<ModelBundle>(m, "Model")
      .def_property_readonly("N", &ModelBundle::N)
      .def_property_readonly("K", &ModelBundle::K)
      .def_readonly("trained_up_to", &ModelBundle::trained_up_to)
      .def_readonly("refinement", &ModelBundle::refinement)
      .def_property_readonly("config_json", [](const ModelBundle& b) { return to_json(b.config).dump(); })
      .def_property_readonly("sizes",
                             [](const ModelBundle& b) {
                               std::vector<std::pair<int, int>> out;
                               for (int n = 0; n <= b.N(); ++n) out.emplace_back(b.sched.at(n).height, b.sched.at(n).width);
                               return out;
                             })
      .def("sigma", [](const ModelBundle& b, const std::string& d, int n) {
        return b.plan.sigma(d == "A" ? Domain::A : Domain::B, n);
      })
      .def("fingerprints", &fingerprints)
      .def("reconstruct", [](const ModelBundle& b, const std::string& d) {
        return to_array(uncond_chain(b, d == "A" ? Domain::A : Domain::B, b.N(), ChainMode::reconstruction,
                                     nullptr).back());
      });

  py::class_<TrainOutput>(m, "TrainOutput")
      .def_readonly("model", &TrainOutput::bundle)
      .def_readonly("losses", &TrainOutput::losses);

  m.def(
      "train_pair",
      [](const Array& a, const Array& b, const std::string& config, const std::string& checkpoint_dir,
         int stop_after_scale) {
        const Image ia = to_image(a), ib = to_image(b);
        const TrainConfig c = config_from(config);
        py::gil_scoped_release release;
        TrainResult r = train_pair(ia, ib, c, options(checkpoint_dir, stop_after_scale));
        return TrainOutput{std::move(r.bundle), std::move(r.losses)};
      },
      py::arg("a"), py::arg("b"), py::arg("config"), py::arg("checkpoint_dir") = "",
      py::arg("stop_after_scale") = -1);
  m.def(
      "train_video",
      [](const std::vector<Array>& frames, const Array& b, const std::string& config,
         const std::string& checkpoint_dir) {
        std::vector<Image> fs;
        for (const auto& f : frames) fs.push_back(to_image(f));
        const Image ib = to_image(b);
        const TrainConfig c = config_from(config);
        py::gil_scoped_release release;
        TrainResult r = train_video(fs, ib, c, options(checkpoint_dir, -1));
        return TrainOutput{std::move(r.bundle), std::move(r.losses)};
      },
      py::arg("frames"), py::arg("b"), py::arg("config"), py::arg("checkpoint_dir") = "");
  m.def(
      "train_refinement",
      [](const Array& target, const std::string& config, const std::string& checkpoint_dir) {
        const Image t = to_image(target);
        const TrainConfig c = config_from(config);
        py::gil_scoped_release release;
        TrainResult r = train_refinement(t, c, options(checkpoint_dir, -1));
        return TrainOutput{std::move(r.bundle), std::move(r.losses)};
      },
      py::arg("target"), py::arg("config"), py::arg("checkpoint_dir") = "");
  m.def("resume_training", [](const std::filesystem::path& dir) {
    py::gil_scoped_release release;
    TrainResult r = resume_training(dir);
    return TrainOutput{std::move(r.bundle), std::move(r.losses)};
  });
  m.def("load_model", [](const std::filesystem::path& dir) { return load_bundle(dir); });

  m.def(
      "translate",
      [](const ModelBundle& b, const Array& src, const std::string& dir, int inject, bool noise,
         std::uint64_t seed, std::optional<int> early) {
        const InferenceRequest req = request(dir, inject, noise, seed);
        const Image s = to_image(src);
        return to_array(early ? translate_early(b, s, resolve_scale(*early, b.N()), req) : translate(b, s, req));
      },
      py::arg("model"), py::arg("source"), py::arg("direction") = "a2b", py::arg("inject") = -2,
      py::arg("noise") = true, py::arg("seed") = 0, py::arg("early") = py::none());
  m.def(
      "injection_sweep",
      [](const ModelBundle& b, const Array& src, const std::string& dir, bool noise, std::uint64_t seed) {
        std::vector<Array> out;
        for (const auto& img : injection_sweep(b, to_image(src), request(dir, 0, noise, seed)))
          out.push_back(to_array(img));
        return out;
      },
      py::arg("model"), py::arg("source"), py::arg("direction") = "a2b", py::arg("noise") = true,
      py::arg("seed") = 0);
  m.def(
      "random_analogy",
      [](const ModelBundle& b, const std::string& dir, std::uint64_t seed) {
        const AnalogyPair p = random_analogy(b, request(dir, -2, true, seed));
        return py::make_tuple(to_array(p.sample), to_array(p.mapped));
      },
      py::arg("model"), py::arg("direction") = "a2b", py::arg("seed") = 0);
  m.def(
      "refine",
      [](const ModelBundle& refiner, const Array& img, std::optional<int> scale) {
        return to_array(refine(refiner, to_image(img), scale));
      },
      py::arg("refiner"), py::arg("image"), py::arg("scale") = py::none());
  m.def(
      "translate_video",
      [](const ModelBundle& b, const std::vector<Array>& frames, std::uint64_t seed,
         std::optional<int> quantize_colors, bool freeze_norm_stats) {
        if (frames.empty()) throw std::invalid_argument("no frames");
        const VideoJob job = make_video_job(b, to_image(frames.front()), seed, quantize_colors, freeze_norm_stats);
        std::vector<Array> out;
        for (const auto& f : frames) out.push_back(to_array(translate_frame(b, to_image(f), job)));
        return out;
      },
      py::arg("model"), py::arg("frames"), py::arg("seed") = 0, py::arg("quantize_colors") = py::none(),
      py::arg("freeze_norm_stats") = true);
  m.def("preview_grid", [](const ModelBundle& b, int n, std::uint64_t seed) {
    return to_array(preview_grid(b, n, seed));
  });

  m.def(
      "sifid",
      [](const Array& ref, const Array& cand, const std::string& extractor, std::uint64_t seed) {
        return sifid(to_image(ref), to_image(cand), *make_extractor(extractor, seed));
      },
      py::arg("reference"), py::arg("candidate"), py::arg("extractor") = "random-conv", py::arg("seed") = 0);
  m.def("frechet_distance", [](const Eigen::VectorXd& mu1, const Eigen::MatrixXd& s1,
                               const Eigen::VectorXd& mu2, const Eigen::MatrixXd& s2) {
    FeatureStats a, b;
    a.d = static_cast<int>(mu1.size());
    a.mu = mu1;
    a.sigma = s1;
    b.d = static_cast<int>(mu2.size());
    b.mu = mu2;
    b.sigma = s2;
    return frechet_distance(a, b);
  });

  py::register_exception<NonFiniteError>(m, "NonFiniteError", PyExc_FloatingPointError);
}
