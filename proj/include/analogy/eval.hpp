#pragma once

#include <Eigen/Core>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <memory>
#include <string>
#include <vector>

#include "analogy/backend/parameters.hpp"
#include "analogy/image.hpp"

namespace analogy {

/// Deterministic map from an image to a feature map, returned as one row per
/// spatial position and one column per feature.
class FeatureExtractor {
 public:
  virtual ~FeatureExtractor() = default;
  virtual Eigen::MatrixXd extract(const Image& img) const = 0;
  virtual int dim() const = 0;
  virtual std::string name() const = 0;
};

/// Stack of 3x3 convolutions with LeakyReLU(0.2) between them. The default
/// constructor draws He-scaled weights from a seeded stream; the adapter
/// constructor takes trained weights ("layerI.weight", "layerI.bias").
class ConvFeatureExtractor : public FeatureExtractor {
 public:
  explicit ConvFeatureExtractor(std::uint64_t seed = 0, int layers = 5, int width = 16);
  explicit ConvFeatureExtractor(ad::ParameterSet weights);

  Eigen::MatrixXd extract(const Image& img) const override;
  int dim() const override { return dim_; }
  std::string name() const override { return name_; }

 private:
  ad::ParameterSet weights_;
  int layers_ = 0;
  int dim_ = 0;
  std::string name_;
};

/// Raw k x k patches (d = 3 k^2), zero padded.
class PatchFeatureExtractor : public FeatureExtractor {
 public:
  explicit PatchFeatureExtractor(int kernel = 3) : kernel_(kernel) {}
  Eigen::MatrixXd extract(const Image& img) const override;
  int dim() const override { return 3 * kernel_ * kernel_; }
  std::string name() const override { return "patch" + std::to_string(kernel_); }

 private:
  int kernel_;
};

/// "random-conv" (default), "patch", or "weights:<file>" for a parameter file.
std::unique_ptr<FeatureExtractor> make_extractor(const std::string& spec, std::uint64_t seed = 0);

struct FeatureStats {
  Eigen::VectorXd mu;
  Eigen::MatrixXd sigma;  // population covariance (divides by count)
  int d = 0;
  long count = 0;
};

/// Mean and covariance over the rows of a feature matrix.
FeatureStats feature_stats(const Eigen::MatrixXd& features);
FeatureStats patch_stats(const Image& img, const FeatureExtractor& extractor);

/// ||mu1 - mu2||^2 + Tr(S1 + S2 - 2 (S1 S2)^(1/2)), with the trace of the root
/// taken as the sum of singular values of S1^(1/2) S2^(1/2). Covariance
/// eigenvalues below zero are clamped; those below -1e-6 add a message to
/// `warnings`.
double frechet_distance(const FeatureStats& a, const FeatureStats& b,
                        std::vector<std::string>* warnings = nullptr);

double sifid(const Image& reference, const Image& candidate, const FeatureExtractor& extractor);

struct EvalSummary {
  double mean = 0.0;
  std::vector<std::pair<std::filesystem::path, double>> scores;
};

/// SIFID of every PNG in `dir` against `reference`. Throws for an empty directory.
EvalSummary eval_batch(const Image& reference, const std::filesystem::path& dir,
                       const FeatureExtractor& extractor);

/// "file,sifid" rows followed by a "mean,<value>" row.
void write_eval_csv(std::ostream& out, const EvalSummary& s);

}  // namespace analogy
