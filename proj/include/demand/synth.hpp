#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "demand/ingest.hpp"

namespace demand {

/// A household behaviour class for synthetic data.
struct Archetype {
  std::string name;
  Eigen::VectorXd base_profile;  // 24/r non-negative kWh shape values
  double scale_min = 1.0;
  double scale_max = 1.0;
  double noise_sigma = 0.0;  // relative per-slot Gaussian noise
};

/// Morning peak, evening peak, double peak and night-heavy shapes.
std::vector<Archetype> default_archetypes(int resolution_hours = 1, double noise_sigma = 0.05);

struct SynthOptions {
  int households_per_archetype = 7;
  int days = 400;
  double missing_day_rate = 0.0;
  std::uint64_t seed = 0;
  int resolution_hours = 1;
  Date start{std::chrono::year{2018}, std::chrono::January, std::chrono::day{1}};
};

struct GroundTruth {
  std::string household_id;
  std::string archetype;
  int archetype_index = 0;
};

struct SynthDataset {
  std::vector<MeterReading> readings;
  std::vector<GroundTruth> labels;  // sorted by household_id
};

/// Households are assigned to archetypes round-robin. Each draws one scale
/// uniformly from its archetype's range and emits base * scale * (1 + sigma z)
/// per slot, clipped at 0; whole days are dropped with probability
/// missing_day_rate. Household h uses stream derive_seed(seed, h).
SynthDataset generate(std::span<const Archetype> archetypes, const SynthOptions& options);

void write_labels_csv(std::ostream& out, std::span<const GroundTruth> labels);

}  // namespace demand
