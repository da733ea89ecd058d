#include "demand/validate.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "demand/error.hpp"
#include "demand/io.hpp"
#include "demand/numeric.hpp"
#include "demand/parallel.hpp"
#include "demand/preprocess.hpp"

namespace demand {

std::vector<Eigen::MatrixXd> partition_days(const Eigen::MatrixXd& day_matrix, int p, Rng& rng) {
  const auto n_days = day_matrix.rows();
  if (p < 1) throw InputError("validate", "partition_days", "p must be at least 1");
  if (n_days < p) {
    throw InputError("validate", "partition_days",
                     std::to_string(n_days) + " days cannot form " + std::to_string(p) + " partitions");
  }
  std::vector<Eigen::Index> order(static_cast<std::size_t>(n_days));
  std::iota(order.begin(), order.end(), Eigen::Index{0});
  rng.shuffle(order.begin(), order.end());

  const auto base = n_days / p;
  const auto extra = n_days % p;
  std::vector<Eigen::MatrixXd> parts;
  parts.reserve(static_cast<std::size_t>(p));
  std::size_t next = 0;
  for (int part = 0; part < p; ++part) {
    const auto rows = base + (part < extra ? 1 : 0);
    Eigen::MatrixXd m(rows, day_matrix.cols());
    for (Eigen::Index r = 0; r < rows; ++r) m.row(r) = day_matrix.row(order[next++]);
    parts.push_back(std::move(m));
  }
  return parts;
}

double percent_matches(double avg_matches, int n, int p) {
  if (n < 1 || p < 1) throw InputError("validate", "percent_matches", "n and p must be positive");
  return avg_matches * 100.0 / (static_cast<double>(n) * p);
}

ValidationReport objective_validate(const std::map<std::string, HouseholdSeries>& households,
                                    const std::vector<std::string>& household_ids, const Reducer& reducer,
                                    const ClusterModel& model, const ValidationOptions& options,
                                    std::string framework) {
  const int p = options.p;
  const int reps = options.repetitions;
  if (p < 1) throw ConfigError("validate", "objective_validate", "p must be at least 1");
  if (reps < 1) throw ConfigError("validate", "objective_validate", "repetitions must be at least 1");
  if (household_ids.size() != model.labels.size()) {
    throw InputError("validate", "objective_validate", "model labels are not aligned with the household list");
  }
  if (household_ids.empty()) throw InputError("validate", "objective_validate", "no households");

  ValidationReport report;
  report.framework = std::move(framework);
  report.p = p;
  report.repetitions = reps;
  report.n = static_cast<int>(household_ids.size());

  std::vector<const HouseholdSeries*> series;
  series.reserve(household_ids.size());
  for (const auto& id : household_ids) {
    const auto it = households.find(id);
    if (it == households.end()) {
      throw InputError("validate", "objective_validate", "household " + id + " is in the model but not in the data");
    }
    const auto n_days = it->second.day_matrix.rows();
    if (n_days < p) {
      throw InputError("validate", "objective_validate",
                       "household " + id + " has " + std::to_string(n_days) + " days, fewer than p = " +
                           std::to_string(p));
    }
    if (static_cast<Eigen::Index>(p) * 10 > n_days) {
      report.warnings.push_back("household " + id + ": p = " + std::to_string(p) + " exceeds a tenth of its " +
                                std::to_string(n_days) + " days");
    }
    series.push_back(&it->second);
  }

  const std::size_t n = series.size();
  std::vector<std::vector<int>> matches(static_cast<std::size_t>(reps), std::vector<int>(n, 0));
  parallel_for(static_cast<std::size_t>(reps), options.threads, [&](std::size_t rep) {
    Rng rng(derive_seed(options.seed, rep));
    for (std::size_t h = 0; h < n; ++h) {
      const auto parts = partition_days(series[h]->day_matrix, p, rng);
      Eigen::MatrixXd medians(p, series[h]->day_matrix.cols());
      for (int part = 0; part < p; ++part) medians.row(part) = median_daily_profile(parts[static_cast<std::size_t>(part)]).transpose();
      const auto normalized =
          normalize_rows(std::move(medians), std::vector<std::string>(static_cast<std::size_t>(p), household_ids[h]));
      const Eigen::MatrixXd reduced = transform(reducer, normalized.matrix);
      for (int part = 0; part < p; ++part) {
        if (nearest_row(model.centers, reduced.row(part)) == model.labels[h]) ++matches[rep][h];
      }
    }
  });

  long long total = 0;
  std::vector<long long> per_household(n, 0);
  for (const auto& rep : matches) {
    for (std::size_t h = 0; h < n; ++h) {
      total += rep[h];
      per_household[h] += rep[h];
    }
  }
  const long long trials = static_cast<long long>(n) * p * reps;
  report.avg_matches = static_cast<double>(total) / reps;
  report.avg_mismatches = static_cast<double>(trials - total) / reps;
  report.pct_matches = percent_matches(report.avg_matches, report.n, p);
  report.pct_mismatches = percent_matches(report.avg_mismatches, report.n, p);
  for (std::size_t h = 0; h < n; ++h) {
    report.per_household[household_ids[h]] = static_cast<double>(per_household[h]) / (static_cast<double>(p) * reps);
  }
  return report;
}

namespace {

struct Clusters {
  int k = 0;
  std::vector<int> sizes;
  Eigen::MatrixXd centroids;
};

Clusters clusters_of(const Eigen::MatrixXd& x, std::span<const int> labels, const char* op) {
  if (static_cast<Eigen::Index>(labels.size()) != x.rows()) {
    throw InputError("validate", op, "label count does not match row count");
  }
  Clusters c;
  for (int l : labels) {
    if (l < 0) throw InputError("validate", op, "negative label");
    c.k = std::max(c.k, l + 1);
  }
  if (c.k < 2) throw InputError("validate", op, "need at least 2 clusters");
  c.sizes.assign(static_cast<std::size_t>(c.k), 0);
  for (int l : labels) ++c.sizes[static_cast<std::size_t>(l)];
  for (int s : c.sizes)
    if (s == 0) throw InputError("validate", op, "empty cluster");
  c.centroids = cluster_means(x, labels, c.k);
  return c;
}

}  // namespace

double silhouette(const Eigen::MatrixXd& x, std::span<const int> labels) {
  const auto c = clusters_of(x, labels, "silhouette");
  const auto n = x.rows();
  double total = 0.0;
  std::vector<double> sums(static_cast<std::size_t>(c.k));
  for (Eigen::Index i = 0; i < n; ++i) {
    const int own = labels[static_cast<std::size_t>(i)];
    if (c.sizes[static_cast<std::size_t>(own)] == 1) continue;
    std::fill(sums.begin(), sums.end(), 0.0);
    for (Eigen::Index j = 0; j < n; ++j)
      if (j != i) sums[static_cast<std::size_t>(labels[static_cast<std::size_t>(j)])] += euclidean(x.row(i), x.row(j));
    const double a = sums[static_cast<std::size_t>(own)] / (c.sizes[static_cast<std::size_t>(own)] - 1);
    double b = std::numeric_limits<double>::infinity();
    for (int other = 0; other < c.k; ++other)
      if (other != own) b = std::min(b, sums[static_cast<std::size_t>(other)] / c.sizes[static_cast<std::size_t>(other)]);
    const double denom = std::max(a, b);
    if (denom > 0.0) total += (b - a) / denom;
  }
  return total / static_cast<double>(n);
}

double davies_bouldin(const Eigen::MatrixXd& x, std::span<const int> labels) {
  const auto c = clusters_of(x, labels, "davies_bouldin");
  std::vector<double> scatter(static_cast<std::size_t>(c.k), 0.0);
  for (Eigen::Index i = 0; i < x.rows(); ++i) {
    const int l = labels[static_cast<std::size_t>(i)];
    scatter[static_cast<std::size_t>(l)] += euclidean(x.row(i), c.centroids.row(l));
  }
  for (int l = 0; l < c.k; ++l) scatter[static_cast<std::size_t>(l)] /= c.sizes[static_cast<std::size_t>(l)];
  double total = 0.0;
  for (int i = 0; i < c.k; ++i) {
    double worst = 0.0;
    for (int j = 0; j < c.k; ++j) {
      if (i == j) continue;
      const double sep = euclidean(c.centroids.row(i), c.centroids.row(j));
      if (sep == 0.0) {
        throw NumericalError("validate", "davies_bouldin",
                             "clusters " + std::to_string(i) + " and " + std::to_string(j) + " have coincident centroids");
      }
      worst = std::max(worst, (scatter[static_cast<std::size_t>(i)] + scatter[static_cast<std::size_t>(j)]) / sep);
    }
    total += worst;
  }
  return total / c.k;
}

double calinski_harabasz(const Eigen::MatrixXd& x, std::span<const int> labels) {
  const auto c = clusters_of(x, labels, "calinski_harabasz");
  const auto n = x.rows();
  const Eigen::RowVectorXd mean = x.colwise().mean();
  double between = 0.0;
  for (int l = 0; l < c.k; ++l) between += c.sizes[static_cast<std::size_t>(l)] * (c.centroids.row(l) - mean).squaredNorm();
  double within = 0.0;
  for (Eigen::Index i = 0; i < n; ++i) within += (x.row(i) - c.centroids.row(labels[static_cast<std::size_t>(i)])).squaredNorm();
  if (within == 0.0) return 1.0;
  return (between / (c.k - 1)) / (within / static_cast<double>(n - c.k));
}

CviScores cvi_scores(const Eigen::MatrixXd& x, std::span<const int> labels) {
  return {silhouette(x, labels), davies_bouldin(x, labels), calinski_harabasz(x, labels)};
}

double adjusted_rand_index(std::span<const int> a, std::span<const int> b) {
  if (a.size() != b.size()) throw InputError("validate", "adjusted_rand_index", "label vectors differ in length");
  const auto choose2 = [](double v) { return v * (v - 1.0) / 2.0; };
  std::map<std::pair<int, int>, int> table;
  std::map<int, int> rows, cols;
  for (std::size_t i = 0; i < a.size(); ++i) {
    ++table[{a[i], b[i]}];
    ++rows[a[i]];
    ++cols[b[i]];
  }
  double index = 0.0, sum_rows = 0.0, sum_cols = 0.0;
  for (const auto& [key, count] : table) index += choose2(count);
  for (const auto& [key, count] : rows) sum_rows += choose2(count);
  for (const auto& [key, count] : cols) sum_cols += choose2(count);
  const double pairs = choose2(static_cast<double>(a.size()));
  if (pairs == 0.0) return 1.0;
  const double expected = sum_rows * sum_cols / pairs;
  const double maximum = (sum_rows + sum_cols) / 2.0;
  if (maximum == expected) return 1.0;
  return (index - expected) / (maximum - expected);
}

void to_json(nlohmann::json& j, const ValidationReport& r) {
  j = {{"framework", r.framework},
       {"p", r.p},
       {"repetitions", r.repetitions},
       {"n", r.n},
       {"avg_matches", r.avg_matches},
       {"avg_mismatches", r.avg_mismatches},
       {"pct_matches", r.pct_matches},
       {"pct_mismatches", r.pct_mismatches},
       {"per_household", r.per_household},
       {"warnings", r.warnings}};
}

void to_json(nlohmann::json& j, const CviScores& s) {
  j = {{"silhouette", s.silhouette}, {"davies_bouldin", s.davies_bouldin}, {"calinski_harabasz", s.calinski_harabasz}};
}

std::string validation_csv_header(bool with_cvi) {
  std::string h = "framework,p,pct_matches,pct_mismatches";
  if (with_cvi) h += ",silhouette,davies_bouldin,calinski_harabasz";
  return h + '\n';
}

std::string validation_csv_row(const ValidationReport& r, const CviScores* cvi) {
  std::string row = r.framework + ',' + std::to_string(r.p) + ',' + format_double(r.pct_matches) + ',' +
                    format_double(r.pct_mismatches);
  if (cvi) {
    row += ',' + format_double(cvi->silhouette) + ',' + format_double(cvi->davies_bouldin) + ',' +
           format_double(cvi->calinski_harabasz);
  }
  return row + '\n';
}

}  // namespace demand
