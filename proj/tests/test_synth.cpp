#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <set>
#include <sstream>

#include "demand/error.hpp"
#include "demand/ingest.hpp"
#include "demand/preprocess.hpp"
#include "demand/synth.hpp"

using namespace demand;

TEST_CASE("default archetypes are valid shapes") {
  for (int r : {1, 2, 3, 4, 6}) {
    const auto types = default_archetypes(r);
    REQUIRE(types.size() == 4);
    std::set<std::string> names;
    for (const auto& t : types) {
      CHECK(t.base_profile.size() == 24 / r);
      CHECK(t.base_profile.minCoeff() >= 0.0);
      CHECK(t.base_profile.maxCoeff() > 0.0);
      CHECK(t.scale_min > 0.0);
      CHECK(t.noise_sigma == 0.05);
      names.insert(t.name);
    }
    CHECK(names.size() == 4);
  }
}

TEST_CASE("household and label counts") {
  const auto data = generate(default_archetypes(), SynthOptions{7, 20, 0.0, 1});
  CHECK(data.labels.size() == 28);
  CHECK(data.readings.size() == 28u * 20u * 24u);
  std::set<std::string> archetypes;
  for (const auto& g : data.labels) archetypes.insert(g.archetype);
  CHECK(archetypes.size() == 4);

  std::ostringstream out;
  write_labels_csv(out, data.labels);
  const std::string csv = out.str();
  CHECK(csv.rfind("household_id,archetype\n", 0) == 0);
  CHECK(std::count(csv.begin(), csv.end(), '\n') == 29);
}

TEST_CASE("zero noise gives identical normalized rows within an archetype") {
  const auto data = generate(default_archetypes(1, 0.0), SynthOptions{5, 12, 0.0, 2});
  const auto days = build_day_matrices(data.readings, 1);
  const auto profiles = preprocess(days.households, 1);
  std::map<std::string, int> archetype;
  for (const auto& g : data.labels) archetype[g.household_id] = g.archetype_index;
  for (Eigen::Index i = 0; i < profiles.rows(); ++i)
    for (Eigen::Index j = 0; j < profiles.rows(); ++j) {
      if (archetype[profiles.household_ids[i]] != archetype[profiles.household_ids[j]]) continue;
      // Different scales round differently in the last place.
      CHECK((profiles.matrix.row(i) - profiles.matrix.row(j)).cwiseAbs().maxCoeff() <= 1e-15);
    }
  // Each median equals base x scale for the household's drawn scale.
  const auto types = default_archetypes(1, 0.0);
  for (const auto& g : data.labels) {
    const auto med = median_daily_profile(days.households.at(g.household_id));
    const double scale = med(0) / types[g.archetype_index].base_profile(0);
    CHECK(scale >= 0.5);
    CHECK(scale <= 2.0);
    CHECK((med - scale * types[g.archetype_index].base_profile).cwiseAbs().maxCoeff() <= 1e-12);
  }
}

TEST_CASE("missing-day rate matches the binomial expectation") {
  double total = 0.0;
  int households = 0;
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    const auto data = generate(default_archetypes(), SynthOptions{2, 400, 0.1, seed});
    const auto days = build_day_matrices(data.readings, 1);
    for (const auto& [id, s] : days.households) {
      // 4 sigma of Binomial(400, 0.9) is 24 days.
      CHECK(std::abs(static_cast<double>(s.day_matrix.rows()) - 360.0) <= 24.0);
      total += static_cast<double>(s.day_matrix.rows());
      ++households;
    }
  }
  CHECK(std::abs(total / households - 360.0) <= 4.0 * 6.0 / std::sqrt(static_cast<double>(households)));
}

TEST_CASE("fixed seed, fixed bytes") {
  auto csv = [](std::uint64_t seed) {
    std::ostringstream out;
    write_readings_csv(out, generate(default_archetypes(), SynthOptions{2, 15, 0.2, seed}).readings, 1);
    return out.str();
  };
  CHECK(csv(5) == csv(5));
  CHECK(csv(5) != csv(6));
}

TEST_CASE("energies are non-negative under heavy noise") {
  const auto data = generate(default_archetypes(1, 2.0), SynthOptions{1, 30, 0.0, 3});
  for (const auto& m : data.readings) CHECK(m.energy >= 0.0);
}

TEST_CASE("generate rejects bad inputs") {
  CHECK_THROWS_AS(generate({}, SynthOptions{}), InputError);
  CHECK_THROWS_AS(generate(default_archetypes(), SynthOptions{1, 0}), InputError);
  auto bad = default_archetypes();
  bad[0].base_profile.setZero();
  CHECK_THROWS_AS(generate(bad, SynthOptions{1, 3}), InputError);
  bad = default_archetypes();
  bad[1].scale_min = 0.0;
  CHECK_THROWS_AS(generate(bad, SynthOptions{1, 3}), InputError);
}
