#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>

#include "gla/chunkwise.hpp"
#include "gla/fixtures.hpp"

namespace gla {

enum class Form { recurrent, parallel, chunkwise };

std::string_view to_string(Form form);
Form parse_form(std::string_view text);

// Flat `key = value` file; keys are the field names below. '#' starts a comment.
struct RunConfig {
  ModelKind kind = ModelKind::general();
  std::size_t L = 64;
  std::size_t dk = 8;
  std::size_t dv = 8;
  std::uint64_t seed = 0;
  double gate_floor = 0.5;
  std::size_t chunk = 16;
  ChunkPolicy policy = ChunkPolicy::materialize;
  Form form = Form::chunkwise;
  double tol = 1e-9;
  double grad_tol = 1e-6;
  double eps = 1e-5;

  // Throws DomainError when a field is out of range.
  void validate() const;
};

// Applies one key/value pair; unknown keys and unparsable values throw DomainError.
void set_config_value(RunConfig& config, std::string_view key, std::string_view value);

RunConfig parse_config_text(std::string_view text, RunConfig base = {});
RunConfig read_config_file(const std::filesystem::path& path, RunConfig base = {});
std::string to_config_text(const RunConfig& config);

}  // namespace gla
