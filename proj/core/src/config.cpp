#include "gla/config.hpp"

#include <charconv>
#include <fstream>
#include <sstream>

#include "gla/tensor_io.hpp"

namespace gla {

std::string_view to_string(Form form) {
  switch (form) {
    case Form::recurrent:
      return "recurrent";
    case Form::parallel:
      return "parallel";
    case Form::chunkwise:
      return "chunkwise";
  }
  return "chunkwise";
}

Form parse_form(std::string_view text) {
  if (text == "recurrent") return Form::recurrent;
  if (text == "parallel") return Form::parallel;
  if (text == "chunkwise") return Form::chunkwise;
  throw DomainError("unknown form '" + std::string(text) +
                    "' (expected recurrent, parallel or chunkwise)");
}

namespace {

std::string_view trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t\r");
  return s.substr(first, last - first + 1);
}

template <typename T>
T parse_number(std::string_view key, std::string_view value) {
  T out{};
  const auto* end = value.data() + value.size();
  auto [ptr, ec] = std::from_chars(value.data(), end, out);
  if (ec != std::errc() || ptr != end) {
    throw DomainError("bad value '" + std::string(value) + "' for " + std::string(key));
  }
  return out;
}

double parse_real(std::string_view key, std::string_view value) {
  const std::string text(value);
  std::size_t used = 0;
  double out = 0.0;
  try {
    out = std::stod(text, &used);
  } catch (const std::exception&) {
    used = 0;
  }
  if (used == 0 || used != text.size()) {
    throw DomainError("bad value '" + text + "' for " + std::string(key));
  }
  return out;
}

}  // namespace

void RunConfig::validate() const {
  if (L == 0 || dk == 0 || dv == 0) throw DomainError("L, dk and dv must be at least 1");
  if (chunk == 0) throw DomainError("chunk must be at least 1");
  if (!(gate_floor > 0.0 && gate_floor <= 1.0)) throw DomainError("gate_floor must lie in (0, 1]");
  if (kind.tag == ModelKind::Tag::retnet && !(kind.gamma > 0.0 && kind.gamma < 1.0)) {
    throw DomainError("retnet decay must lie strictly inside (0, 1)");
  }
  if (!(eps > 0.0)) throw DomainError("eps must be positive");
  if (!(tol >= 0.0) || !(grad_tol >= 0.0)) throw DomainError("tolerances must be nonnegative");
}

void set_config_value(RunConfig& c, std::string_view key, std::string_view value) {
  if (key == "kind") {
    c.kind = parse_model_kind(value);
  } else if (key == "L") {
    c.L = parse_number<std::size_t>(key, value);
  } else if (key == "dk") {
    c.dk = parse_number<std::size_t>(key, value);
  } else if (key == "dv") {
    c.dv = parse_number<std::size_t>(key, value);
  } else if (key == "seed") {
    c.seed = parse_number<std::uint64_t>(key, value);
  } else if (key == "gate_floor") {
    c.gate_floor = parse_real(key, value);
  } else if (key == "chunk") {
    c.chunk = parse_number<std::size_t>(key, value);
  } else if (key == "policy") {
    c.policy = parse_policy(value);
  } else if (key == "form") {
    c.form = parse_form(value);
  } else if (key == "tol") {
    c.tol = parse_real(key, value);
  } else if (key == "grad_tol") {
    c.grad_tol = parse_real(key, value);
  } else if (key == "eps") {
    c.eps = parse_real(key, value);
  } else {
    throw DomainError("unknown config key '" + std::string(key) + "'");
  }
}

RunConfig parse_config_text(std::string_view text, RunConfig config) {
  std::size_t line_no = 0;
  while (!text.empty()) {
    const auto nl = text.find('\n');
    std::string_view line = text.substr(0, nl);
    text = nl == std::string_view::npos ? std::string_view{} : text.substr(nl + 1);
    ++line_no;
    if (const auto hash = line.find('#'); hash != std::string_view::npos) line = line.substr(0, hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string_view::npos) {
      throw DomainError("config line " + std::to_string(line_no) + " is not 'key = value'");
    }
    set_config_value(config, trim(line.substr(0, eq)), trim(line.substr(eq + 1)));
  }
  return config;
}

RunConfig read_config_file(const std::filesystem::path& path, RunConfig base) {
  std::ifstream in(path);
  if (!in) throw FormatError("cannot open config", path);
  std::stringstream buffer;
  buffer << in.rdbuf();
  try {
    return parse_config_text(buffer.str(), std::move(base));
  } catch (const DomainError& e) {
    throw FormatError(e.what(), path);
  }
}

std::string to_config_text(const RunConfig& c) {
  std::ostringstream os;
  os.precision(17);
  os << "kind = " << to_string(c.kind) << "\n"
     << "L = " << c.L << "\n"
     << "dk = " << c.dk << "\n"
     << "dv = " << c.dv << "\n"
     << "seed = " << c.seed << "\n"
     << "gate_floor = " << c.gate_floor << "\n"
     << "chunk = " << c.chunk << "\n"
     << "policy = " << to_string(c.policy) << "\n"
     << "form = " << to_string(c.form) << "\n"
     << "tol = " << c.tol << "\n"
     << "grad_tol = " << c.grad_tol << "\n"
     << "eps = " << c.eps << "\n";
  return os.str();
}

}  // namespace gla
