#include "analogy/eval.hpp"

#include <Eigen/Eigenvalues>
#include <Eigen/SVD>
#include <cmath>
#include <cstdio>
#include <limits>
#include <ostream>
#include <stdexcept>

#include "analogy/backend/ops.hpp"
#include "analogy/backend/rng.hpp"
#include "analogy/checkpoint.hpp"
#include "analogy/io.hpp"

namespace analogy {

namespace {

std::string layer_name(int i, const char* part) {
  return "layer" + std::to_string(i) + "." + part;
}

/// Symmetric PSD square root; negative eigenvalues are clamped to zero.
Eigen::MatrixXd psd_sqrt(const Eigen::MatrixXd& m, double* min_eig) {
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(0.5 * (m + m.transpose()));
  Eigen::VectorXd ev = es.eigenvalues();
  if (min_eig) *min_eig = ev.size() ? ev.minCoeff() : 0.0;
  // Eigenvalues within rounding of zero are zero; their square roots would
  // otherwise surface as sqrt(machine epsilon) noise.
  const double tol = ev.size() ? ev.size() * std::numeric_limits<double>::epsilon() *
                                     ev.cwiseAbs().maxCoeff()
                               : 0.0;
  for (Eigen::Index i = 0; i < ev.size(); ++i) ev[i] = ev[i] > tol ? std::sqrt(ev[i]) : 0.0;
  return es.eigenvectors() * ev.asDiagonal() * es.eigenvectors().transpose();
}

}  // namespace

ConvFeatureExtractor::ConvFeatureExtractor(std::uint64_t seed, int layers, int width)
    : layers_(layers), dim_(width), name_("random-conv") {
  if (layers < 1 || width < 1) throw std::invalid_argument("extractor needs layers, width >= 1");
  Rng rng = Rng::derive(seed, Stream::extractor);
  int cin = Image::kChannels;
  for (int i = 0; i < layers; ++i) {
    const double stddev = std::sqrt(2.0 / (cin * 9.0));
    weights_.add(layer_name(i, "weight"), rng.normal_tensor({width, cin, 3, 3}, stddev));
    weights_.add(layer_name(i, "bias"), ad::Tensor::zeros({width}));
    cin = width;
  }
}

ConvFeatureExtractor::ConvFeatureExtractor(ad::ParameterSet weights)
    : weights_(std::move(weights)), name_("weights") {
  int cin = Image::kChannels;
  while (weights_.contains(layer_name(layers_, "weight"))) {
    const ad::Tensor& w = weights_.at(layer_name(layers_, "weight"));
    if (w.rank() != 4 || w.dim(1) != cin || w.dim(2) != w.dim(3) || w.dim(2) % 2 == 0) {
      throw std::invalid_argument("extractor weight " + layer_name(layers_, "weight") +
                                  " has an incompatible shape " + ad::to_string(w.shape()));
    }
    cin = w.dim(0);
    ++layers_;
  }
  if (layers_ == 0) throw std::invalid_argument("extractor weights contain no layer0.weight");
  dim_ = cin;
}

Eigen::MatrixXd ConvFeatureExtractor::extract(const Image& img) const {
  ad::NoGradGuard no_grad;
  ad::Tensor x = img.to_tensor();
  for (int i = 0; i < layers_; ++i) {
    const std::string b = layer_name(i, "bias");
    x = ad::conv2d(x, weights_.at(layer_name(i, "weight")),
                   weights_.contains(b) ? weights_.at(b) : ad::Tensor());
    if (i + 1 < layers_) x = ad::leaky_relu(x, 0.2);
  }
  const int c = x.dim(0);
  const long positions = static_cast<long>(x.dim(1)) * x.dim(2);
  // Planar [C, P] values viewed as the transpose of a [P, C] matrix.
  return Eigen::Map<const Eigen::MatrixXd>(x.values().data(), positions, c);
}

Eigen::MatrixXd PatchFeatureExtractor::extract(const Image& img) const {
  const int k = kernel_, p = k / 2, h = img.height(), w = img.width();
  Eigen::MatrixXd f = Eigen::MatrixXd::Zero(static_cast<long>(h) * w, dim());
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      int col = 0;
      for (int c = 0; c < 3; ++c) {
        for (int dy = -p; dy <= p; ++dy) {
          for (int dx = -p; dx <= p; ++dx, ++col) {
            const int yy = y + dy, xx = x + dx;
            if (yy >= 0 && yy < h && xx >= 0 && xx < w) {
              f(static_cast<long>(y) * w + x, col) = img.at(c, yy, xx);
            }
          }
        }
      }
    }
  }
  return f;
}

std::unique_ptr<FeatureExtractor> make_extractor(const std::string& spec, std::uint64_t seed) {
  if (spec.empty() || spec == "random-conv") return std::make_unique<ConvFeatureExtractor>(seed);
  if (spec == "patch") return std::make_unique<PatchFeatureExtractor>(3);
  const std::string prefix = "weights:";
  if (spec.rfind(prefix, 0) == 0) {
    return std::make_unique<ConvFeatureExtractor>(read_parameters(spec.substr(prefix.size())));
  }
  throw std::invalid_argument("unknown extractor '" + spec +
                              "' (expected random-conv, patch or weights:<file>)");
}

FeatureStats feature_stats(const Eigen::MatrixXd& features) {
  if (features.rows() == 0) throw std::invalid_argument("feature map has no positions");
  FeatureStats s;
  s.d = static_cast<int>(features.cols());
  s.count = static_cast<long>(features.rows());
  s.mu = features.colwise().mean().transpose();
  const Eigen::MatrixXd centered = features.rowwise() - s.mu.transpose();
  s.sigma = (centered.transpose() * centered) / static_cast<double>(s.count);
  return s;
}

FeatureStats patch_stats(const Image& img, const FeatureExtractor& extractor) {
  FeatureStats s = feature_stats(extractor.extract(img));
  if (s.count < s.d) {
    std::fprintf(stderr, "warning: %ld feature positions for %d dimensions; covariance is singular\n",
                 s.count, s.d);
  }
  return s;
}

double frechet_distance(const FeatureStats& a, const FeatureStats& b,
                        std::vector<std::string>* warnings) {
  if (a.d != b.d || a.mu.size() != b.mu.size()) {
    throw std::invalid_argument("feature dimensions differ: " + std::to_string(a.d) + " vs " +
                                std::to_string(b.d));
  }
  double min_a = 0.0, min_b = 0.0;
  const Eigen::MatrixXd root_a = psd_sqrt(a.sigma, &min_a);
  const Eigen::MatrixXd root_b = psd_sqrt(b.sigma, &min_b);
  // Tr (S1 S2)^(1/2) is the nuclear norm of S1^(1/2) S2^(1/2): its singular
  // values are the square roots of the eigenvalues of S1^(1/2) S2 S1^(1/2).
  const Eigen::BDCSVD<Eigen::MatrixXd> svd(root_a * root_b);
  const double trace_root = svd.singularValues().sum();
  if (warnings) {
    for (double v : {min_a, min_b}) {
      if (v < -1e-6) warnings->push_back("clamped eigenvalue " + std::to_string(v));
    }
  }
  const double d = (a.mu - b.mu).squaredNorm() + a.sigma.trace() + b.sigma.trace() - 2.0 * trace_root;
  return std::max(d, 0.0);
}

double sifid(const Image& reference, const Image& candidate, const FeatureExtractor& extractor) {
  return frechet_distance(patch_stats(reference, extractor), patch_stats(candidate, extractor));
}

EvalSummary eval_batch(const Image& reference, const std::filesystem::path& dir,
                       const FeatureExtractor& extractor) {
  const auto files = list_images(dir);
  if (files.empty()) throw std::invalid_argument("no PNG images in " + dir.string());
  const FeatureStats ref = patch_stats(reference, extractor);
  EvalSummary s;
  double total = 0.0;
  for (const auto& f : files) {
    const double v = frechet_distance(ref, patch_stats(load_image(f), extractor));
    s.scores.emplace_back(f, v);
    total += v;
  }
  s.mean = total / static_cast<double>(files.size());
  return s;
}

void write_eval_csv(std::ostream& out, const EvalSummary& s) {
  char buf[64];
  out << "file,sifid\n";
  for (const auto& [f, v] : s.scores) {
    std::snprintf(buf, sizeof buf, "%.10g", v);
    out << f.filename().string() << ',' << buf << '\n';
  }
  std::snprintf(buf, sizeof buf, "%.10g", s.mean);
  out << "mean," << buf << '\n';
}

}  // namespace analogy
