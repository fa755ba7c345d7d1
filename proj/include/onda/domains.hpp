#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "onda/network.hpp"
#include "onda/rng.hpp"

namespace onda {

// Synthetic acquisition-condition grid: 3 illuminations x 2 cameras x
// 2 backgrounds = 12 domains over feature vectors. Illumination is an
// additive brightness vector plus a contrast scalar, the camera a per
// dimension gain vector plus sensor noise, the background a mean vector
// written over a clutter sub-block.
enum class Illumination { kArtificial = 0, kCloudy = 1, kDirected = 2 };
enum class Camera { kKinect = 0, kWebcam = 1 };
enum class Background { kWhite = 0, kBrown = 1 };

struct DomainSpec {
  Illumination illumination = Illumination::kArtificial;
  Camera camera = Camera::kKinect;
  Background background = Background::kWhite;

  std::string id() const;  // e.g. "artificial-kinect-white"
  static DomainSpec parse(const std::string& id);
  bool operator==(const DomainSpec&) const = default;
};

struct IlluminationEffect {
  double contrast = 1.0;
  std::vector<double> brightness;
};

struct CameraEffect {
  std::vector<double> gain;
  double noise_std = 0.0;
};

struct BackgroundEffect {
  std::vector<double> clutter_mean;
};

struct DomainEffects {
  std::size_t clutter_offset = 12;
  std::array<IlluminationEffect, 3> illumination;
  std::array<CameraEffect, 2> camera;
  std::array<BackgroundEffect, 2> background;

  static DomainEffects defaults(std::size_t dim = 16, std::size_t clutter_dims = 4);
  std::size_t clutter_size() const { return background[0].clutter_mean.size(); }
  void validate(std::size_t dim) const;
};

struct Prototypes {
  Tensor means;               // num_classes x dim
  double within_std = 1.0;
  std::vector<int> category;  // class -> category
};

// Class means clustered around category anchors, redrawn with growing spread
// until every pairwise distance reaches separation * within_std.
Prototypes make_prototypes(RngStream& rng, std::size_t num_classes = 9, std::size_t dim = 16,
                           std::size_t num_categories = 3, double separation = 3.0,
                           double within_std = 1.0, double anchor_scale = 5.0,
                           double class_scale = 0.9);

// Same, with caller-supplied anchors; identical anchors are rejected.
Prototypes make_prototypes_with_anchors(RngStream& rng, const Tensor& anchors,
                                        std::size_t num_classes, double separation = 3.0,
                                        double within_std = 1.0, double class_scale = 0.9);

// x <- gain (.) (contrast x + brightness) + noise, then the clutter block is
// overwritten with the background mean plus noise.
void apply_domain_transform(std::vector<double>& x, const DomainSpec& spec,
                            const DomainEffects& fx, RngStream& rng);

// n_per_class draws per class, class-major order.
Dataset sample_domain(RngStream& rng, const Prototypes& proto, const DomainSpec& spec,
                      const DomainEffects& fx, std::size_t n_per_class = 40);

std::vector<DomainSpec> domain_grid();

// Number of acquisition conditions on which the two specs differ (0..3).
int shift_distance(const DomainSpec& a, const DomainSpec& b);

struct DatasetManifest {
  DomainSpec domain;
  std::uint64_t spec_hash = 0;
  std::size_t num_classes = 9;
  std::size_t num_categories = 3;
  std::vector<int> category;  // class -> category
  std::size_t n_per_class = 40;
  std::uint64_t seed = 0;
};

std::uint64_t domain_effects_hash(const DomainSpec& spec, const DomainEffects& fx);

// base_path + ".manifest.json" and base_path + ".csv"; features carry 17
// significant digits so the round trip is lossless.
void save_dataset(const std::string& base_path, const DatasetManifest& manifest,
                  const Dataset& ds);
std::pair<DatasetManifest, Dataset> load_dataset(const std::string& base_path);

}  // namespace onda
