#include <sstream>

#include "demand/error.hpp"
#include "demand/io.hpp"
#include "demand/pipeline.hpp"
#include "toml.hpp"

namespace demand {

namespace {

[[noreturn]] void config_fail(const std::string& what) { throw ConfigError("cli", "load_config", what); }

template <typename T>
T integer(const toml::node& node, std::string_view key) {
  const auto v = node.value<std::int64_t>();
  if (!v) config_fail("'" + std::string(key) + "' must be an integer");
  if (std::is_unsigned_v<T> && *v < 0) config_fail("'" + std::string(key) + "' must be non-negative");
  return static_cast<T>(*v);
}

std::string text(const toml::node& node, std::string_view key) {
  const auto v = node.value<std::string>();
  if (!v) config_fail("'" + std::string(key) + "' must be a string");
  return *v;
}

// Integer or the string "auto".
std::optional<int> int_or_auto(const toml::node& node, std::string_view key) {
  if (node.is_string()) {
    if (text(node, key) == "auto") return std::nullopt;
    config_fail("'" + std::string(key) + "' must be an integer or \"auto\"");
  }
  return integer<int>(node, key);
}

std::filesystem::path resolve(const std::filesystem::path& base, const std::string& value) {
  std::filesystem::path p(value);
  return p.is_relative() && !base.empty() ? base / p : p;
}

}  // namespace

PipelineConfig parse_config(std::string_view toml_text, const std::filesystem::path& base_dir) {
  toml::table table;
  try {
    table = toml::parse(toml_text);
  } catch (const toml::parse_error& e) {
    std::ostringstream msg;
    msg << "TOML parse error at line " << e.source().begin.line << ": " << e.description();
    config_fail(msg.str());
  }

  PipelineConfig c;
  for (const auto& [key_node, node] : table) {
    const std::string_view key = key_node.str();
    if (key == "input") {
      c.input = resolve(base_dir, text(node, key));
    } else if (key == "out") {
      c.out = resolve(base_dir, text(node, key));
    } else if (key == "seed") {
      c.seed = integer<std::uint64_t>(node, key);
    } else if (key == "resolution") {
      c.resolution = integer<int>(node, key);
    } else if (key == "min_complete_days") {
      c.min_complete_days = integer<int>(node, key);
    } else if (key == "reducer") {
      const auto v = text(node, key);
      if (v != "pca" && v != "fa") config_fail("'reducer' must be \"pca\" or \"fa\"");
      c.reducer = v == "pca" ? ReducerKind::pca : ReducerKind::fa;
    } else if (key == "dim") {
      c.dim = int_or_auto(node, key);
    } else if (key == "clusterer") {
      const auto v = text(node, key);
      if (v != "kmc" && v != "sc") config_fail("'clusterer' must be \"kmc\" or \"sc\"");
      c.clusterer = v == "kmc" ? ClusterMethod::kmc : ClusterMethod::sc;
    } else if (key == "k") {
      c.k = int_or_auto(node, key);
    } else if (key == "knn") {
      c.knn = integer<int>(node, key);
    } else if (key == "gap_b") {
      c.gap_b = integer<int>(node, key);
    } else if (key == "k_max") {
      c.k_max = integer<int>(node, key);
    } else if (key == "n_init") {
      c.n_init = integer<int>(node, key);
    } else if (key == "p") {
      c.p.clear();
      if (const auto* arr = node.as_array()) {
        for (const auto& item : *arr) c.p.push_back(integer<int>(item, key));
      } else {
        c.p.push_back(integer<int>(node, key));
      }
    } else if (key == "reps") {
      c.reps = integer<int>(node, key);
    } else if (key == "framework") {
      const auto v = text(node, key);
      if (v != "one" && v != "all") config_fail("'framework' must be \"one\" or \"all\"");
      c.all_frameworks = v == "all";
    } else if (key == "threads") {
      c.threads = integer<unsigned>(node, key);
    } else if (key == "plots") {
      const auto v = node.value<bool>();
      if (!v) config_fail("'plots' must be a boolean");
      c.plots = *v;
    } else if (key == "plot_households") {
      const auto* arr = node.as_array();
      if (!arr) config_fail("'plot_households' must be an array of strings");
      for (const auto& item : *arr) c.plot_households.push_back(text(item, key));
    } else {
      config_fail("unknown key '" + std::string(key) + "'");
    }
  }
  return c;
}

PipelineConfig load_config(const std::filesystem::path& path) {
  std::string body;
  try {
    body = read_text_file(path, "cli", "load_config");
  } catch (const InputError& e) {
    config_fail(e.what());
  }
  return parse_config(body, path.parent_path());
}

}  // namespace demand
