#include "onda/domains.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>

#include <json.hpp>

#include "onda/csv.hpp"
#include "onda/hashing.hpp"

namespace onda {

namespace {

using nlohmann::json;

void require(bool ok, const std::string& msg) {
  if (!ok) throw std::invalid_argument(msg);
}

const char* kIlluminationNames[] = {"artificial", "cloudy", "directed"};
const char* kCameraNames[] = {"kinect", "webcam"};
const char* kBackgroundNames[] = {"white", "brown"};

template <typename E, std::size_t N>
E parse_level(const std::string& token, const char* (&names)[N], const char* axis) {
  for (std::size_t i = 0; i < N; ++i)
    if (token == names[i]) return static_cast<E>(i);
  throw std::invalid_argument(std::string("unknown ") + axis + " level '" + token + "'");
}

std::vector<double> ramp(std::size_t dim, double lo, double hi) {
  std::vector<double> v(dim);
  for (std::size_t i = 0; i < dim; ++i)
    v[i] = dim > 1 ? lo + (hi - lo) * static_cast<double>(i) / static_cast<double>(dim - 1)
                   : lo;
  return v;
}

double row_distance(const Tensor& m, std::size_t a, std::size_t b) {
  double sq = 0.0;
  for (std::size_t j = 0; j < m.cols(); ++j) {
    const double d = m.at(a, j) - m.at(b, j);
    sq += d * d;
  }
  return std::sqrt(sq);
}

double min_pairwise_distance(const Tensor& m) {
  double best = std::numeric_limits<double>::infinity();
  for (std::size_t a = 0; a < m.rows(); ++a)
    for (std::size_t b = a + 1; b < m.rows(); ++b) best = std::min(best, row_distance(m, a, b));
  return best;
}

}  // namespace

std::string DomainSpec::id() const {
  return std::string(kIlluminationNames[static_cast<int>(illumination)]) + "-" +
         kCameraNames[static_cast<int>(camera)] + "-" +
         kBackgroundNames[static_cast<int>(background)];
}

DomainSpec DomainSpec::parse(const std::string& id) {
  const auto first = id.find('-');
  const auto second = id.find('-', first == std::string::npos ? 0 : first + 1);
  require(first != std::string::npos && second != std::string::npos,
          "domain id must be <illumination>-<camera>-<background>: '" + id + "'");
  DomainSpec spec;
  spec.illumination = parse_level<Illumination>(id.substr(0, first), kIlluminationNames,
                                                "illumination");
  spec.camera =
      parse_level<Camera>(id.substr(first + 1, second - first - 1), kCameraNames, "camera");
  spec.background =
      parse_level<Background>(id.substr(second + 1), kBackgroundNames, "background");
  return spec;
}

DomainEffects DomainEffects::defaults(std::size_t dim, std::size_t clutter_dims) {
  require(clutter_dims <= dim, "effects: clutter block larger than the feature vector");
  DomainEffects fx;
  fx.clutter_offset = dim - clutter_dims;

  fx.illumination[0] = {1.0, std::vector<double>(dim, 0.0)};
  fx.illumination[1] = {0.8, ramp(dim, -0.9, -1.5)};
  fx.illumination[2] = {1.25, ramp(dim, 1.1, 1.9)};

  fx.camera[0] = {std::vector<double>(dim, 1.0), 0.15};
  fx.camera[1] = {ramp(dim, 0.75, 1.3), 0.3};

  fx.background[0] = {std::vector<double>(clutter_dims, 1.2)};
  fx.background[1] = {std::vector<double>(clutter_dims, -1.8)};
  return fx;
}

void DomainEffects::validate(std::size_t dim) const {
  for (const auto& ill : illumination)
    require(ill.brightness.size() == dim, "effects: brightness vector length mismatch");
  for (const auto& cam : camera) {
    require(cam.gain.size() == dim, "effects: gain vector length mismatch");
    require(cam.noise_std >= 0.0, "effects: noise std must be nonnegative");
    for (double g : cam.gain) require(g > 0.0, "effects: gain entries must be positive");
  }
  require(background[0].clutter_mean.size() == background[1].clutter_mean.size(),
          "effects: backgrounds must share the clutter block size");
  require(clutter_offset + clutter_size() <= dim, "effects: clutter block out of range");
}

Prototypes make_prototypes_with_anchors(RngStream& rng, const Tensor& anchors,
                                        std::size_t num_classes, double separation,
                                        double within_std, double class_scale) {
  const std::size_t num_categories = anchors.rows();
  const std::size_t dim = anchors.cols();
  require(num_classes >= 2, "prototypes: need at least 2 classes");
  require(dim >= 4, "prototypes: need at least 4 dimensions");
  require(num_classes >= num_categories, "prototypes: more categories than classes");
  require(within_std > 0.0, "prototypes: within-class std must be positive");
  if (num_categories > 1 && min_pairwise_distance(anchors) < 1e-9)
    throw std::invalid_argument("prototypes: category anchors coincide");

  Prototypes proto;
  proto.within_std = within_std;
  proto.category.resize(num_classes);
  for (std::size_t c = 0; c < num_classes; ++c)
    proto.category[c] = static_cast<int>(c % num_categories);

  double spread = class_scale;
  for (int attempt = 0; attempt < 64; ++attempt) {
    proto.means = Tensor::matrix(num_classes, dim);
    for (std::size_t c = 0; c < num_classes; ++c)
      for (std::size_t j = 0; j < dim; ++j)
        proto.means.at(c, j) =
            anchors.at(static_cast<std::size_t>(proto.category[c]), j) +
            spread * rng.gaussian();
    if (min_pairwise_distance(proto.means) >= separation * within_std) return proto;
    spread *= 1.25;
  }
  throw std::runtime_error("prototypes: could not reach the requested separation");
}

Prototypes make_prototypes(RngStream& rng, std::size_t num_classes, std::size_t dim,
                           std::size_t num_categories, double separation, double within_std,
                           double anchor_scale, double class_scale) {
  require(num_categories >= 1, "prototypes: need at least one category");
  require(dim >= 4, "prototypes: need at least 4 dimensions");
  Tensor anchors = gaussian_sample(rng, {num_categories, dim});
  for (double& v : anchors.data) v *= anchor_scale;
  return make_prototypes_with_anchors(rng, anchors, num_classes, separation, within_std,
                                      class_scale);
}

void apply_domain_transform(std::vector<double>& x, const DomainSpec& spec,
                            const DomainEffects& fx, RngStream& rng) {
  const auto& ill = fx.illumination[static_cast<int>(spec.illumination)];
  const auto& cam = fx.camera[static_cast<int>(spec.camera)];
  const auto& bg = fx.background[static_cast<int>(spec.background)];
  require(x.size() == ill.brightness.size(), "transform: feature dimension mismatch");

  for (std::size_t j = 0; j < x.size(); ++j)
    x[j] = cam.gain[j] * (ill.contrast * x[j] + ill.brightness[j]) + cam.noise_std * rng.gaussian();
  for (std::size_t i = 0; i < bg.clutter_mean.size(); ++i)
    x[fx.clutter_offset + i] = bg.clutter_mean[i] + cam.noise_std * rng.gaussian();
}

Dataset sample_domain(RngStream& rng, const Prototypes& proto, const DomainSpec& spec,
                      const DomainEffects& fx, std::size_t n_per_class) {
  const std::size_t num_classes = proto.means.rows();
  const std::size_t dim = proto.means.cols();
  fx.validate(dim);
  require(n_per_class >= 1, "sample_domain: n_per_class must be positive");

  Dataset ds;
  ds.x = Tensor::matrix(num_classes * n_per_class, dim);
  ds.y.reserve(num_classes * n_per_class);
  std::vector<double> sample(dim);
  std::size_t row = 0;
  for (std::size_t c = 0; c < num_classes; ++c) {
    for (std::size_t s = 0; s < n_per_class; ++s) {
      for (std::size_t j = 0; j < dim; ++j)
        sample[j] = proto.means.at(c, j) + proto.within_std * rng.gaussian();
      apply_domain_transform(sample, spec, fx, rng);
      for (std::size_t j = 0; j < dim; ++j) ds.x.at(row, j) = sample[j];
      ds.y.push_back(static_cast<int>(c));
      ++row;
    }
  }
  return ds;
}

std::vector<DomainSpec> domain_grid() {
  std::vector<DomainSpec> grid;
  for (int ill = 0; ill < 3; ++ill)
    for (int cam = 0; cam < 2; ++cam)
      for (int bg = 0; bg < 2; ++bg)
        grid.push_back({static_cast<Illumination>(ill), static_cast<Camera>(cam),
                        static_cast<Background>(bg)});
  return grid;
}

int shift_distance(const DomainSpec& a, const DomainSpec& b) {
  int d = 0;
  d += a.illumination != b.illumination;
  d += a.camera != b.camera;
  d += a.background != b.background;
  return d;
}

std::uint64_t domain_effects_hash(const DomainSpec& spec, const DomainEffects& fx) {
  std::uint64_t h = fnv1a(spec.id());
  h = fnv1a_bytes(&fx.clutter_offset, sizeof(fx.clutter_offset), h);
  for (const auto& ill : fx.illumination) {
    h = fnv1a_bytes(&ill.contrast, sizeof(double), h);
    h = fnv1a(ill.brightness, h);
  }
  for (const auto& cam : fx.camera) {
    h = fnv1a(cam.gain, h);
    h = fnv1a_bytes(&cam.noise_std, sizeof(double), h);
  }
  for (const auto& bg : fx.background) h = fnv1a(bg.clutter_mean, h);
  return h;
}

void save_dataset(const std::string& base_path, const DatasetManifest& manifest,
                  const Dataset& ds) {
  json j;
  j["domain"] = manifest.domain.id();
  j["spec_hash"] = manifest.spec_hash;
  j["num_classes"] = manifest.num_classes;
  j["num_categories"] = manifest.num_categories;
  j["category"] = manifest.category;
  j["n_per_class"] = manifest.n_per_class;
  j["seed"] = manifest.seed;
  write_file_atomic(base_path + ".manifest.json", j.dump(2) + "\n");

  const std::size_t dim = ds.x.cols();
  std::string csv = "label,category";
  for (std::size_t j2 = 0; j2 < dim; ++j2) csv += ",f" + std::to_string(j2);
  csv += '\n';
  for (std::size_t i = 0; i < ds.size(); ++i) {
    std::vector<std::string> fields;
    fields.reserve(dim + 2);
    fields.push_back(std::to_string(ds.y[i]));
    fields.push_back(std::to_string(manifest.category.at(static_cast<std::size_t>(ds.y[i]))));
    for (std::size_t j2 = 0; j2 < dim; ++j2) fields.push_back(format_double(ds.x.at(i, j2)));
    csv += csv_join(fields);
    csv += '\n';
  }
  write_file_atomic(base_path + ".csv", csv);
}

std::pair<DatasetManifest, Dataset> load_dataset(const std::string& base_path) {
  const json j = json::parse(read_file(base_path + ".manifest.json"));
  DatasetManifest manifest;
  manifest.domain = DomainSpec::parse(j.at("domain").get<std::string>());
  manifest.spec_hash = j.at("spec_hash").get<std::uint64_t>();
  manifest.num_classes = j.at("num_classes").get<std::size_t>();
  manifest.num_categories = j.at("num_categories").get<std::size_t>();
  manifest.category = j.at("category").get<std::vector<int>>();
  manifest.n_per_class = j.at("n_per_class").get<std::size_t>();
  manifest.seed = j.at("seed").get<std::uint64_t>();

  const auto rows = parse_csv(read_file(base_path + ".csv"));
  if (rows.size() < 2) throw std::runtime_error("dataset csv has no samples");
  const std::size_t dim = rows[0].size() - 2;
  Dataset ds;
  ds.x = Tensor::matrix(rows.size() - 1, dim);
  ds.y.reserve(rows.size() - 1);
  for (std::size_t i = 1; i < rows.size(); ++i) {
    if (rows[i].size() != dim + 2) throw std::runtime_error("dataset csv has a ragged row");
    ds.y.push_back(static_cast<int>(parse_double(rows[i][0])));
    for (std::size_t j2 = 0; j2 < dim; ++j2)
      ds.x.at(i - 1, j2) = parse_double(rows[i][j2 + 2]);
  }
  return {manifest, ds};
}

}  // namespace onda
