#include "demand/ingest.hpp"

#include <charconv>
#include <cmath>
#include <cstdio>
#include <optional>

#include "demand/error.hpp"
#include "demand/io.hpp"

namespace demand {

namespace {

constexpr std::string_view header = "household_id,timestamp,kwh";

bool parse_fixed_int(std::string_view text, int& value) {
  if (text.empty()) return false;
  for (char c : text)
    if (c < '0' || c > '9') return false;
  const auto res = std::from_chars(text.data(), text.data() + text.size(), value);
  return res.ec == std::errc{} && res.ptr == text.data() + text.size();
}

// YYYY-MM-DDTHH, optionally followed by :00 and :00.
std::optional<std::pair<Date, int>> parse_timestamp(std::string_view ts) {
  if (ts.size() != 13 && ts.size() != 16 && ts.size() != 19) return std::nullopt;
  if (ts[4] != '-' || ts[7] != '-' || ts[10] != 'T') return std::nullopt;
  int y = 0, m = 0, d = 0, h = 0;
  if (!parse_fixed_int(ts.substr(0, 4), y) || !parse_fixed_int(ts.substr(5, 2), m) ||
      !parse_fixed_int(ts.substr(8, 2), d) || !parse_fixed_int(ts.substr(11, 2), h)) {
    return std::nullopt;
  }
  if (ts.size() >= 16 && (ts[13] != ':' || ts.substr(14, 2) != "00")) return std::nullopt;
  if (ts.size() == 19 && (ts[16] != ':' || ts.substr(17, 2) != "00")) return std::nullopt;
  const Date day{std::chrono::year{y}, std::chrono::month{static_cast<unsigned>(m)},
                 std::chrono::day{static_cast<unsigned>(d)}};
  if (!day.ok() || h < 0 || h > 23) return std::nullopt;
  return std::pair{day, h};
}

}  // namespace

int slots_per_day(int resolution_hours) {
  if (resolution_hours < 1 || 24 % resolution_hours != 0) {
    throw ConfigError("ingest", "resolution",
                      "resolution " + std::to_string(resolution_hours) + " h does not divide 24");
  }
  return 24 / resolution_hours;
}

std::vector<MeterReading> parse_readings(std::istream& csv, int resolution_hours) {
  const int slots = slots_per_day(resolution_hours);
  std::vector<MeterReading> readings;
  std::string line;
  std::size_t line_no = 0;
  bool seen_header = false;
  while (std::getline(csv, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    std::string_view view(line);
    if (line_no == 1 && view.starts_with("\xEF\xBB\xBF")) view.remove_prefix(3);
    if (!seen_header) {
      if (view != header) throw ParseError("parse_readings", line_no, "expected header '" + std::string(header) + "'");
      seen_header = true;
      continue;
    }
    if (view.empty()) continue;
    const auto fields = split_csv_line(view);
    if (fields.size() != 3) {
      throw ParseError("parse_readings", line_no, "expected 3 fields, got " + std::to_string(fields.size()));
    }
    if (fields[0].empty()) throw ParseError("parse_readings", line_no, "empty household_id");
    const auto ts = parse_timestamp(fields[1]);
    if (!ts) throw ParseError("parse_readings", line_no, "malformed timestamp '" + std::string(fields[1]) + "'");
    if (ts->second % resolution_hours != 0) {
      throw ParseError("parse_readings", line_no,
                       "hour " + std::to_string(ts->second) + " not aligned to " + std::to_string(resolution_hours) +
                           " h resolution");
    }
    double energy = 0.0;
    if (!parse_double(fields[2], energy) || !std::isfinite(energy)) {
      throw ParseError("parse_readings", line_no, "malformed energy '" + std::string(fields[2]) + "'");
    }
    if (energy < 0.0) throw ParseError("parse_readings", line_no, "negative energy");
    const int slot = ts->second / resolution_hours;
    if (slot >= slots) throw ParseError("parse_readings", line_no, "slot out of range");
    readings.push_back({std::string(fields[0]), ts->first, slot, energy});
  }
  if (!seen_header) throw ParseError("parse_readings", 1, "missing header row");
  return readings;
}

DayMatrices build_day_matrices(std::span<const MeterReading> readings, int resolution_hours, int min_complete_days) {
  const int slots = slots_per_day(resolution_hours);
  if (min_complete_days < 1) {
    throw ConfigError("ingest", "build_day_matrices", "min_complete_days must be positive");
  }
  using Day = std::vector<std::optional<double>>;
  std::map<std::string, std::map<std::chrono::sys_days, Day>> grouped;
  for (const auto& r : readings) {
    if (r.slot < 0 || r.slot >= slots) {
      throw InputError("ingest", "build_day_matrices",
                       "slot " + std::to_string(r.slot) + " out of range for household " + r.household_id);
    }
    if (r.energy < 0.0) {
      throw InputError("ingest", "build_day_matrices", "negative energy for household " + r.household_id);
    }
    auto& day = grouped[r.household_id][std::chrono::sys_days{r.day}];
    if (day.empty()) day.resize(static_cast<std::size_t>(slots));
    auto& cell = day[static_cast<std::size_t>(r.slot)];
    if (cell) {
      throw InputError("ingest", "build_day_matrices",
                       "duplicate reading for household " + r.household_id + " on " + format_date(r.day) +
                           " slot " + std::to_string(r.slot));
    }
    cell = r.energy;
  }

  DayMatrices out;
  for (const auto& [id, days] : grouped) {
    HouseholdSeries series;
    series.household_id = id;
    std::vector<const Day*> complete;
    for (const auto& [when, values] : days) {
      bool full = true;
      for (const auto& v : values) full = full && v.has_value();
      if (full) {
        complete.push_back(&values);
        series.days.emplace_back(when);
      } else {
        ++series.n_days_dropped;
      }
    }
    const int n_complete = static_cast<int>(complete.size());
    if (n_complete < min_complete_days) {
      out.excluded.push_back({id, "fewer than " + std::to_string(min_complete_days) + " complete days", n_complete});
      continue;
    }
    series.day_matrix.resize(n_complete, slots);
    for (int d = 0; d < n_complete; ++d)
      for (int s = 0; s < slots; ++s) series.day_matrix(d, s) = *(*complete[static_cast<std::size_t>(d)])[static_cast<std::size_t>(s)];
    out.households.emplace(id, std::move(series));
  }
  if (out.households.empty()) {
    throw InputError("ingest", "build_day_matrices", "no household has enough complete days");
  }
  return out;
}

std::string format_date(const Date& day) {
  char buf[16];
  std::snprintf(buf, sizeof(buf), "%04d-%02u-%02u", static_cast<int>(day.year()), static_cast<unsigned>(day.month()),
                static_cast<unsigned>(day.day()));
  return buf;
}

std::string format_timestamp(const Date& day, int hour) {
  char buf[8];
  std::snprintf(buf, sizeof(buf), "T%02d:00", hour);
  return format_date(day) + buf;
}

void write_readings_csv(std::ostream& out, std::span<const MeterReading> readings, int resolution_hours) {
  slots_per_day(resolution_hours);
  out << header << '\n';
  for (const auto& r : readings) {
    out << r.household_id << ',' << format_timestamp(r.day, r.slot * resolution_hours) << ','
        << format_double(r.energy) << '\n';
  }
}

void write_readings_csv(std::ostream& out, const std::map<std::string, HouseholdSeries>& households,
                        int resolution_hours) {
  slots_per_day(resolution_hours);
  out << header << '\n';
  for (const auto& [id, series] : households) {
    for (std::size_t d = 0; d < series.days.size(); ++d) {
      for (Eigen::Index s = 0; s < series.day_matrix.cols(); ++s) {
        out << id << ',' << format_timestamp(series.days[d], static_cast<int>(s) * resolution_hours) << ','
            << format_double(series.day_matrix(static_cast<Eigen::Index>(d), s)) << '\n';
      }
    }
  }
}

void write_exclusions_csv(std::ostream& out, std::span<const Exclusion> excluded) {
  out << "household_id,reason,n_complete_days\n";
  for (const auto& e : excluded) out << e.household_id << ',' << e.reason << ',' << e.n_complete_days << '\n';
}

}  // namespace demand
