#pragma once

#include <Eigen/Dense>

#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"

namespace demand {

/// Shortest decimal string that parses back to exactly `value`.
std::string format_double(double value);
/// Parses a complete field as a double; returns false on any trailing input.
bool parse_double(std::string_view text, double& value);

std::vector<std::string_view> split_csv_line(std::string_view line);

/// Whole-file helpers. Paths are created/overwritten; failures throw InputError
/// tagged with `module`/`operation`.
std::string read_text_file(const std::filesystem::path& path, std::string_view module, std::string_view operation);
void write_text_file(const std::filesystem::path& path, std::string_view text, std::string_view module,
                     std::string_view operation);

/// `household_id,<prefix>0,...` table of row-aligned values.
std::string labeled_matrix_csv(const Eigen::MatrixXd& matrix, const std::vector<std::string>& ids,
                               std::string_view column_prefix);

struct LabeledMatrix {
  Eigen::MatrixXd matrix;
  std::vector<std::string> ids;
};
LabeledMatrix parse_labeled_matrix_csv(std::string_view text, std::string_view module, std::string_view operation);

nlohmann::json matrix_to_json(const Eigen::MatrixXd& m);
Eigen::MatrixXd matrix_from_json(const nlohmann::json& j);
nlohmann::json vector_to_json(const Eigen::VectorXd& v);
Eigen::VectorXd vector_from_json(const nlohmann::json& j);

}  // namespace demand
