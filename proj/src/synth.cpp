#include "demand/synth.hpp"

#include <algorithm>
#include <cmath>
#include <ostream>

#include "demand/error.hpp"
#include "demand/rng.hpp"

namespace demand {

namespace {

double bump(double hour, double center, double width) {
  // Distance on the 24 h circle so shapes wrap around midnight.
  double d = std::abs(hour - center);
  d = std::min(d, 24.0 - d);
  return std::exp(-0.5 * (d / width) * (d / width));
}

template <typename Shape>
Eigen::VectorXd sample_shape(int resolution_hours, Shape shape) {
  const int slots = slots_per_day(resolution_hours);
  Eigen::VectorXd out = Eigen::VectorXd::Zero(slots);
  for (int h = 0; h < 24; ++h) out(h / resolution_hours) += shape(h + 0.5);
  return out;
}

}  // namespace

std::vector<Archetype> default_archetypes(int resolution_hours, double noise_sigma) {
  const int r = resolution_hours;
  std::vector<Archetype> out;
  // A standby load under every shape keeps the relative noise spread over all slots.
  out.push_back({"morning_peak",
                 sample_shape(r, [](double h) { return 0.6 + 0.6 * bump(h, 7.5, 1.5) + 0.12 * bump(h, 19.0, 2.0); }),
                 0.5, 2.0, noise_sigma});
  out.push_back({"evening_peak",
                 sample_shape(r, [](double h) { return 0.6 + 0.1 * bump(h, 8.0, 1.5) + 0.6 * bump(h, 19.5, 2.0); }),
                 0.5, 2.0, noise_sigma});
  out.push_back({"double_peak",
                 sample_shape(r, [](double h) {
                   return 0.6 + 0.45 * bump(h, 7.0, 1.2) + 0.1 * bump(h, 13.0, 2.0) + 0.45 * bump(h, 20.5, 1.2);
                 }),
                 0.5, 2.0, noise_sigma});
  out.push_back({"night_heavy",
                 sample_shape(r, [](double h) { return 0.9 + 0.5 * bump(h, 2.5, 2.5) + 0.07 * bump(h, 18.0, 3.0); }),
                 0.5, 2.0, noise_sigma});
  return out;
}

SynthDataset generate(std::span<const Archetype> archetypes, const SynthOptions& options) {
  if (archetypes.empty()) throw InputError("synth", "generate", "no archetypes");
  if (options.days < 1) throw InputError("synth", "generate", "days must be at least 1");
  if (options.households_per_archetype < 1) {
    throw InputError("synth", "generate", "households_per_archetype must be at least 1");
  }
  if (!(options.missing_day_rate >= 0.0 && options.missing_day_rate < 1.0)) {
    throw InputError("synth", "generate", "missing_day_rate must be in [0, 1)");
  }
  const int slots = slots_per_day(options.resolution_hours);
  for (const auto& a : archetypes) {
    if (a.base_profile.size() != slots) {
      throw InputError("synth", "generate", "archetype " + a.name + " has the wrong number of slots");
    }
    if ((a.base_profile.array() < 0.0).any() || !(a.base_profile.maxCoeff() > 0.0)) {
      throw InputError("synth", "generate", "archetype " + a.name + " needs a non-negative, non-zero profile");
    }
    if (!(a.scale_min > 0.0) || a.scale_max < a.scale_min || a.noise_sigma < 0.0) {
      throw InputError("synth", "generate", "archetype " + a.name + " has an invalid scale range or noise level");
    }
  }

  const int n_types = static_cast<int>(archetypes.size());
  const int n = n_types * options.households_per_archetype;
  const int width = std::max(3, static_cast<int>(std::to_string(n).size()));
  const std::chrono::sys_days start{options.start};

  SynthDataset out;
  for (int h = 0; h < n; ++h) {
    const int type = h % n_types;
    const auto& a = archetypes[static_cast<std::size_t>(type)];
    std::string id = std::to_string(h + 1);
    id = "H" + std::string(static_cast<std::size_t>(width) - id.size(), '0') + id;
    out.labels.push_back({id, a.name, type});

    Rng rng(derive_seed(options.seed, static_cast<std::uint64_t>(h)));
    const double scale = rng.uniform(a.scale_min, a.scale_max);
    for (int d = 0; d < options.days; ++d) {
      if (rng.uniform() < options.missing_day_rate) continue;
      const Date day{start + std::chrono::days{d}};
      for (int s = 0; s < slots; ++s) {
        const double noise = a.noise_sigma > 0.0 ? a.noise_sigma * rng.normal() : 0.0;
        const double kwh = std::max(0.0, a.base_profile(s) * scale * (1.0 + noise));
        out.readings.push_back({id, day, s, kwh});
      }
    }
  }
  return out;
}

void write_labels_csv(std::ostream& out, std::span<const GroundTruth> labels) {
  out << "household_id,archetype\n";
  for (const auto& l : labels) out << l.household_id << ',' << l.archetype << '\n';
}

}  // namespace demand
