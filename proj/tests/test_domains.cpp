#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <set>
#include <stdexcept>

#include "onda/domains.hpp"

using namespace onda;

namespace {

double row_distance(const Tensor& m, std::size_t a, std::size_t b) {
  double sq = 0;
  for (std::size_t j = 0; j < m.cols(); ++j) {
    const double d = m.at(a, j) - m.at(b, j);
    sq += d * d;
  }
  return std::sqrt(sq);
}

}  // namespace

TEST_CASE("prototypes are deterministic and separated") {
  RngStream a(7), b(7);
  Prototypes pa = make_prototypes(a);
  Prototypes pb = make_prototypes(b);
  CHECK(pa.means == pb.means);
  CHECK(pa.category == pb.category);

  // Post-generation audit: every pair at least 3x the within-class std.
  for (std::size_t i = 0; i < pa.means.rows(); ++i)
    for (std::size_t j = i + 1; j < pa.means.rows(); ++j)
      CHECK(row_distance(pa.means, i, j) >= 3.0 * pa.within_std);

  // 3 categories, every class mapped.
  std::set<int> cats(pa.category.begin(), pa.category.end());
  CHECK(cats == std::set<int>{0, 1, 2});
}

TEST_CASE("identical anchors are a degenerate request") {
  RngStream rng(9);
  Tensor anchors = Tensor::matrix(2, 8, 1.5);  // two coinciding anchors
  CHECK_THROWS_AS(make_prototypes_with_anchors(rng, anchors, 2), std::invalid_argument);
}

TEST_CASE("prototype preconditions") {
  RngStream rng(11);
  CHECK_THROWS_AS(make_prototypes(rng, 1, 16), std::invalid_argument);
  CHECK_THROWS_AS(make_prototypes(rng, 9, 3), std::invalid_argument);
  CHECK_THROWS_AS(make_prototypes(rng, 2, 16, 3), std::invalid_argument);
}

TEST_CASE("the identity transform is exact") {
  DomainEffects fx = DomainEffects::defaults(6, 0);
  fx.illumination[0] = {1.0, std::vector<double>(6, 0.0)};
  fx.camera[0] = {std::vector<double>(6, 1.0), 0.0};

  DomainSpec spec;  // artificial-kinect-white picks the identity levels
  RngStream rng(13);
  std::vector<double> x = {0.1, -2.5, 3.75, 0.0, 1e-7, 42.0};
  std::vector<double> before = x;
  apply_domain_transform(x, spec, fx, rng);
  CHECK(x == before);
}

TEST_CASE("illumination difference shows up as gain times brightness delta") {
  const std::size_t dim = 8;
  DomainEffects fx = DomainEffects::defaults(dim, 2);
  fx.illumination[0] = {0.9, std::vector<double>(dim, 0.25)};
  fx.illumination[1] = {0.9, std::vector<double>(dim, -1.0)};  // same contrast

  RngStream proto_rng(17);
  Prototypes proto = make_prototypes(proto_rng, 2, dim, 2, 3.0, 1.0, 2.0, 0.5);

  DomainSpec da;  // artificial
  DomainSpec db;
  db.illumination = Illumination::kCloudy;

  const std::size_t n_per_class = 5000;  // 1e4 samples per domain
  RngStream ra(21), rb(21);
  Dataset a = sample_domain(ra, proto, da, fx, n_per_class);
  Dataset b = sample_domain(rb, proto, db, fx, n_per_class);

  const std::size_t n = a.size();
  for (std::size_t j = 0; j < dim - 2; ++j) {  // clutter block excluded
    double ma = 0, mb = 0, va = 0;
    for (std::size_t i = 0; i < n; ++i) {
      ma += a.x.at(i, j);
      mb += b.x.at(i, j);
    }
    ma /= double(n);
    mb /= double(n);
    for (std::size_t i = 0; i < n; ++i) va += (a.x.at(i, j) - ma) * (a.x.at(i, j) - ma);
    va /= double(n);
    const double want = fx.camera[0].gain[j] * (0.25 - (-1.0));
    const double se = std::sqrt(2.0 * va / double(n));
    CHECK(std::abs((ma - mb) - want) < 3.0 * se);
  }
}

TEST_CASE("dataset size is classes times samples per class") {
  RngStream proto_rng(23);
  Prototypes proto = make_prototypes(proto_rng);
  DomainEffects fx = DomainEffects::defaults();
  RngStream rng(25);
  Dataset ds = sample_domain(rng, proto, DomainSpec{}, fx, 40);
  CHECK(ds.size() == 360);
  CHECK(ds.x.rows() == 360);
  CHECK(ds.x.all_finite());
}

TEST_CASE("the grid is the full 3x2x2 product") {
  const std::vector<DomainSpec> grid = domain_grid();
  CHECK(grid.size() == 12);

  std::set<std::string> ids;
  std::set<Illumination> ills;
  std::set<Camera> cams;
  std::set<Background> bgs;
  for (const DomainSpec& spec : grid) {
    ids.insert(spec.id());
    ills.insert(spec.illumination);
    cams.insert(spec.camera);
    bgs.insert(spec.background);
  }
  CHECK(ids.size() == 12);  // every pair differs in at least one condition
  CHECK(ills.size() == 3);
  CHECK(cams.size() == 2);
  CHECK(bgs.size() == 2);
}

TEST_CASE("shift distance counts differing conditions") {
  const DomainSpec a = DomainSpec::parse("artificial-kinect-white");
  CHECK(shift_distance(a, a) == 0);
  CHECK(shift_distance(a, DomainSpec::parse("cloudy-kinect-white")) == 1);
  CHECK(shift_distance(a, DomainSpec::parse("artificial-webcam-brown")) == 2);
  CHECK(shift_distance(a, DomainSpec::parse("directed-webcam-brown")) == 3);
}

TEST_CASE("domain ids parse and round trip") {
  for (const DomainSpec& spec : domain_grid()) CHECK(DomainSpec::parse(spec.id()) == spec);
  CHECK_THROWS_AS(DomainSpec::parse("sunny-kinect-white"), std::invalid_argument);
  CHECK_THROWS_AS(DomainSpec::parse("nonsense"), std::invalid_argument);
}

TEST_CASE("regeneration from (seed, spec) is bit-exact") {
  RngStream proto_rng(27);
  Prototypes proto = make_prototypes(proto_rng);
  DomainEffects fx = DomainEffects::defaults();
  const DomainSpec spec = DomainSpec::parse("directed-webcam-brown");

  RngStream r1(99, 5), r2(99, 5);
  Dataset a = sample_domain(r1, proto, spec, fx, 10);
  Dataset b = sample_domain(r2, proto, spec, fx, 10);
  CHECK(a.x == b.x);
  CHECK(a.y == b.y);
}

TEST_CASE("dataset persistence round trips losslessly") {
  RngStream proto_rng(29);
  Prototypes proto = make_prototypes(proto_rng);
  DomainEffects fx = DomainEffects::defaults();
  const DomainSpec spec = DomainSpec::parse("cloudy-kinect-brown");
  RngStream rng(31);
  Dataset ds = sample_domain(rng, proto, spec, fx, 7);

  DatasetManifest manifest;
  manifest.domain = spec;
  manifest.spec_hash = domain_effects_hash(spec, fx);
  manifest.num_classes = 9;
  manifest.num_categories = 3;
  manifest.category = proto.category;
  manifest.n_per_class = 7;
  manifest.seed = 31;

  const std::string base = std::filesystem::temp_directory_path().string() + "/domain_rt";
  save_dataset(base, manifest, ds);
  auto [loaded_manifest, loaded] = load_dataset(base);

  CHECK(loaded.x == ds.x);  // bitwise, via 17 significant digits
  CHECK(loaded.y == ds.y);
  CHECK(loaded_manifest.domain == spec);
  CHECK(loaded_manifest.spec_hash == manifest.spec_hash);
  CHECK(loaded_manifest.category == proto.category);
  CHECK(loaded_manifest.n_per_class == 7);

  std::filesystem::remove(base + ".csv");
  std::filesystem::remove(base + ".manifest.json");
}
