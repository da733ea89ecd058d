#include "demand/io.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>

#include "demand/error.hpp"

namespace demand {

std::string format_double(double value) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof(buf), value);
  return std::string(buf, res.ptr);
}

bool parse_double(std::string_view text, double& value) {
  if (text.empty()) return false;
  if (text.front() == '+') text.remove_prefix(1);
  const auto res = std::from_chars(text.data(), text.data() + text.size(), value);
  return res.ec == std::errc{} && res.ptr == text.data() + text.size();
}

std::vector<std::string_view> split_csv_line(std::string_view line) {
  std::vector<std::string_view> fields;
  std::size_t start = 0;
  while (true) {
    const auto comma = line.find(',', start);
    if (comma == std::string_view::npos) {
      fields.push_back(line.substr(start));
      return fields;
    }
    fields.push_back(line.substr(start, comma - start));
    start = comma + 1;
  }
}

std::string read_text_file(const std::filesystem::path& path, std::string_view module, std::string_view operation) {
  std::ifstream in(path, std::ios::binary);
  if (!in) {
    throw InputError(std::string(module), std::string(operation), "cannot open '" + path.string() + "'");
  }
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_text_file(const std::filesystem::path& path, std::string_view text, std::string_view module,
                     std::string_view operation) {
  if (path.has_parent_path()) {
    std::error_code ec;
    std::filesystem::create_directories(path.parent_path(), ec);
  }
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) {
    throw InputError(std::string(module), std::string(operation), "cannot write '" + path.string() + "'");
  }
  out.write(text.data(), static_cast<std::streamsize>(text.size()));
  if (!out) {
    throw InputError(std::string(module), std::string(operation), "write failed for '" + path.string() + "'");
  }
}

std::string labeled_matrix_csv(const Eigen::MatrixXd& matrix, const std::vector<std::string>& ids,
                               std::string_view column_prefix) {
  std::string out = "household_id";
  for (Eigen::Index c = 0; c < matrix.cols(); ++c) {
    out += ',';
    out += column_prefix;
    out += std::to_string(c);
  }
  out += '\n';
  for (Eigen::Index r = 0; r < matrix.rows(); ++r) {
    out += ids[static_cast<std::size_t>(r)];
    for (Eigen::Index c = 0; c < matrix.cols(); ++c) {
      out += ',';
      out += format_double(matrix(r, c));
    }
    out += '\n';
  }
  return out;
}

LabeledMatrix parse_labeled_matrix_csv(std::string_view text, std::string_view module, std::string_view operation) {
  const std::string mod(module), op(operation);
  std::vector<std::vector<double>> rows;
  LabeledMatrix out;
  std::size_t line_no = 0;
  std::size_t width = 0;
  std::size_t pos = 0;
  while (pos < text.size()) {
    auto end = text.find('\n', pos);
    if (end == std::string_view::npos) end = text.size();
    std::string_view line = text.substr(pos, end - pos);
    pos = end + 1;
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    if (line.empty()) continue;
    const auto fields = split_csv_line(line);
    if (line_no == 1) {
      if (fields.empty() || fields[0] != "household_id" || fields.size() < 2) {
        throw InputError(mod, op, "expected header 'household_id,...'");
      }
      width = fields.size() - 1;
      continue;
    }
    if (fields.size() != width + 1) {
      throw InputError(mod, op, "line " + std::to_string(line_no) + ": expected " + std::to_string(width + 1) +
                                    " fields, got " + std::to_string(fields.size()));
    }
    out.ids.emplace_back(fields[0]);
    auto& row = rows.emplace_back(width);
    for (std::size_t c = 0; c < width; ++c) {
      if (!parse_double(fields[c + 1], row[c]) || !std::isfinite(row[c])) {
        throw InputError(mod, op, "line " + std::to_string(line_no) + ": bad number '" +
                                      std::string(fields[c + 1]) + "'");
      }
    }
  }
  if (line_no == 0) throw InputError(mod, op, "empty file");
  out.matrix.resize(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(width));
  for (std::size_t r = 0; r < rows.size(); ++r)
    for (std::size_t c = 0; c < width; ++c)
      out.matrix(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) = rows[r][c];
  return out;
}

nlohmann::json matrix_to_json(const Eigen::MatrixXd& m) {
  nlohmann::json rows = nlohmann::json::array();
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    nlohmann::json row = nlohmann::json::array();
    for (Eigen::Index c = 0; c < m.cols(); ++c) row.push_back(m(r, c));
    rows.push_back(std::move(row));
  }
  return rows;
}

Eigen::MatrixXd matrix_from_json(const nlohmann::json& j) {
  const auto n_rows = static_cast<Eigen::Index>(j.size());
  const auto n_cols = n_rows == 0 ? Eigen::Index{0} : static_cast<Eigen::Index>(j.at(0).size());
  Eigen::MatrixXd m(n_rows, n_cols);
  for (Eigen::Index r = 0; r < n_rows; ++r) {
    const auto& row = j.at(static_cast<std::size_t>(r));
    if (static_cast<Eigen::Index>(row.size()) != n_cols) {
      throw nlohmann::json::other_error::create(501, "ragged matrix", &j);
    }
    for (Eigen::Index c = 0; c < n_cols; ++c) m(r, c) = row.at(static_cast<std::size_t>(c)).get<double>();
  }
  return m;
}

nlohmann::json vector_to_json(const Eigen::VectorXd& v) {
  nlohmann::json out = nlohmann::json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) out.push_back(v(i));
  return out;
}

Eigen::VectorXd vector_from_json(const nlohmann::json& j) {
  Eigen::VectorXd v(static_cast<Eigen::Index>(j.size()));
  for (Eigen::Index i = 0; i < v.size(); ++i) v(i) = j.at(static_cast<std::size_t>(i)).get<double>();
  return v;
}

}  // namespace demand
