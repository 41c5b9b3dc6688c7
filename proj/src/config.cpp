#include "wfl/config.hpp"

#include <cerrno>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <sstream>

#include "wfl/csv.hpp"

namespace wfl::harness {

namespace {

std::string_view trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r\n");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t\r\n");
  return s.substr(first, last - first + 1);
}

std::vector<std::string> split_list(std::string_view s) {
  std::vector<std::string> out;
  std::size_t start = 0;
  while (start <= s.size()) {
    const auto comma = s.find(',', start);
    const auto piece = trim(s.substr(start, comma == std::string_view::npos ? s.size() - start : comma - start));
    if (!piece.empty()) out.emplace_back(piece);
    if (comma == std::string_view::npos) break;
    start = comma + 1;
  }
  return out;
}

// Number followed by an optional unit suffix.
std::pair<double, std::string> parse_quantity(std::string_view key, std::string_view text) {
  const std::string buffer(trim(text));
  if (buffer.empty()) throw ConfigError("empty value for '" + std::string(key) + "'");
  errno = 0;
  char* end = nullptr;
  const double value = std::strtod(buffer.c_str(), &end);
  if (end == buffer.c_str() || errno == ERANGE)
    throw ConfigError("cannot parse number '" + buffer + "' for '" + std::string(key) + "'");
  return {value, std::string(trim(std::string_view(end)))};
}

double parse_plain(std::string_view key, std::string_view text) {
  const auto [value, unit] = parse_quantity(key, text);
  if (!unit.empty()) throw ConfigError("unexpected unit '" + unit + "' for '" + std::string(key) + "'");
  if (!std::isfinite(value)) throw ConfigError("non-finite value for '" + std::string(key) + "'");
  return value;
}

long long parse_integer(std::string_view key, std::string_view text) {
  const double v = parse_plain(key, text);
  if (v != std::floor(v) || std::abs(v) > 9.0e15)
    throw ConfigError("'" + std::string(key) + "' must be an integer");
  return static_cast<long long>(v);
}

std::size_t parse_count(std::string_view key, std::string_view text) {
  const long long v = parse_integer(key, text);
  if (v < 0) throw ConfigError("'" + std::string(key) + "' must be nonnegative");
  return static_cast<std::size_t>(v);
}

std::uint64_t parse_u64(std::string_view key, std::string_view text) {
  const std::string buffer(trim(text));
  if (buffer.empty() || buffer.find_first_not_of("0123456789") != std::string::npos)
    throw ConfigError("'" + std::string(key) + "' expects an unsigned integer, got '" + buffer + "'");
  errno = 0;
  const auto v = std::strtoull(buffer.c_str(), nullptr, 10);
  if (errno == ERANGE) throw ConfigError("'" + std::string(key) + "' is out of range");
  return v;
}

std::vector<double> parse_plain_list(std::string_view key, std::string_view text) {
  std::vector<double> out;
  for (const auto& item : split_list(text)) out.push_back(parse_plain(key, item));
  return out;
}

double parse_power(std::string_view text) {
  const auto [value, unit] = parse_quantity("p_max", text);
  if (unit.empty() || unit == "W") return value;
  if (unit == "mW") return value * 1e-3;
  if (unit == "dBm") return 1e-3 * std::pow(10.0, value / 10.0);
  if (unit == "dB" || unit == "dBW")
    throw ConfigError("p_max unit '" + unit + "' is ambiguous here; use W, mW or dBm");
  throw ConfigError("unknown power unit '" + unit + "'");
}

double parse_noise_density(std::string_view text) {
  const auto [value, unit] = parse_quantity("n0", text);
  if (unit.empty() || unit == "W/Hz") return value;
  if (unit == "dBm/Hz") return 1e-3 * std::pow(10.0, value / 10.0);
  throw ConfigError("unknown noise density unit '" + unit + "'");
}

double parse_bandwidth(std::string_view text) {
  const auto [value, unit] = parse_quantity("bandwidth", text);
  if (unit.empty() || unit == "Hz") return value;
  if (unit == "kHz") return value * 1e3;
  if (unit == "MHz") return value * 1e6;
  throw ConfigError("unknown bandwidth unit '" + unit + "'");
}

std::vector<std::uint64_t> parse_seeds(std::string_view text) {
  std::vector<std::uint64_t> out;
  for (const auto& item : split_list(text)) {
    const auto dots = item.find("..");
    if (dots == std::string::npos) {
      out.push_back(parse_u64("seeds", item));
      continue;
    }
    const auto lo = parse_u64("seeds", std::string_view(item).substr(0, dots));
    const auto hi = parse_u64("seeds", std::string_view(item).substr(dots + 2));
    if (hi < lo || hi - lo > 1000000) throw ConfigError("bad seed range '" + item + "'");
    for (auto s = lo; s <= hi; ++s) out.push_back(s);
  }
  if (out.empty()) throw ConfigError("seed list is empty");
  return out;
}

channel::PowerConvention parse_convention(std::string_view text) {
  const auto t = trim(text);
  if (t == "mean1") return channel::PowerConvention::mean1;
  if (t == "mean2") return channel::PowerConvention::mean2;
  throw ConfigError("power convention must be mean1 or mean2");
}

std::string convention_name(channel::PowerConvention c) {
  return c == channel::PowerConvention::mean1 ? "mean1" : "mean2";
}

std::string join(const std::vector<double>& values) {
  std::string out;
  for (std::size_t i = 0; i < values.size(); ++i) {
    if (i) out += ",";
    out += format_number(values[i]);
  }
  return out;
}

ExperimentConfig parse_into(ExperimentConfig cfg, std::string_view text, const std::filesystem::path& base_dir,
                            int depth);

ExperimentConfig load_into(ExperimentConfig cfg, const std::filesystem::path& path, int depth) {
  if (depth > 16) throw ConfigError("config include depth exceeded at " + path.string());
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot open config file " + path.string());
  std::stringstream buffer;
  buffer << in.rdbuf();
  return parse_into(std::move(cfg), buffer.str(), path.parent_path(), depth);
}

ExperimentConfig parse_into(ExperimentConfig cfg, std::string_view text, const std::filesystem::path& base_dir,
                            int depth) {
  std::size_t line_no = 0;
  std::size_t start = 0;
  while (start < text.size()) {
    auto end = text.find('\n', start);
    if (end == std::string_view::npos) end = text.size();
    auto line = text.substr(start, end - start);
    start = end + 1;
    ++line_no;
    if (const auto hash = line.find('#'); hash != std::string_view::npos) line = line.substr(0, hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string_view::npos)
      throw ConfigError("line " + std::to_string(line_no) + ": expected 'key = value'");
    const auto key = trim(line.substr(0, eq));
    const auto value = trim(line.substr(eq + 1));
    if (key == "include") {
      const std::filesystem::path target(std::string{value});
      cfg = load_into(std::move(cfg), target.is_absolute() ? target : base_dir / target, depth + 1);
      continue;
    }
    try {
      apply_setting(cfg, key, value);
    } catch (const ConfigError& e) {
      throw ConfigError("line " + std::to_string(line_no) + ": " + e.what());
    }
  }
  return cfg;
}

}  // namespace

std::string to_string(Paradigm p) {
  switch (p) {
    case Paradigm::digital: return "digital";
    case Paradigm::analog: return "analog";
    case Paradigm::both: return "both";
    case Paradigm::ideal: return "ideal";
  }
  return "unknown";
}

Paradigm parse_paradigm(std::string_view text) {
  const auto t = trim(text);
  if (t == "digital") return Paradigm::digital;
  if (t == "analog") return Paradigm::analog;
  if (t == "both") return Paradigm::both;
  if (t == "ideal") return Paradigm::ideal;
  throw ConfigError("paradigm must be one of digital, analog, both, ideal");
}

void apply_setting(ExperimentConfig& cfg, std::string_view key_in, std::string_view value) {
  const auto key = trim(key_in);
  const auto int_value = [&] { return static_cast<int>(parse_integer(key, value)); };
  if (key == "k") cfg.k = int_value();
  else if (key == "n") cfg.n = int_value();
  else if (key == "d") cfg.d = parse_count(key, value);
  else if (key == "b") cfg.b = int_value();
  else if (key == "q") cfg.q = int_value();
  else if (key == "gamma_th") cfg.gamma_th = parse_plain(key, value);
  else if (key == "rho") cfg.rho = parse_plain(key, value);
  else if (key == "eta") cfg.eta = parse_plain(key, value);
  else if (key == "t_max") {
    if (trim(value) == "auto") cfg.t_max.reset();
    else {
      const auto [v, unit] = parse_quantity(key, value);
      if (!unit.empty() && unit != "s") throw ConfigError("t_max is given in seconds");
      cfg.t_max = v;
    }
  }
  else if (key == "bandwidth") cfg.bandwidth = parse_bandwidth(value);
  else if (key == "n0") cfg.n0 = parse_noise_density(value);
  else if (key == "p_max") cfg.p_max = parse_power(value);
  else if (key == "m") cfg.m = int_value();
  else if (key == "path_loss_db") cfg.path_loss_db = parse_plain_list(key, value);
  else if (key == "alpha") cfg.alpha = parse_plain_list(key, value);
  else if (key == "inclusion") cfg.inclusion = parse_plain_list(key, value);
  else if (key == "task_family") {
    const auto t = trim(value);
    if (t == "quadratic") cfg.task_family = TaskFamily::quadratic;
    else if (t == "logistic") cfg.task_family = TaskFamily::logistic;
    else throw ConfigError("task_family must be quadratic or logistic");
  }
  else if (key == "heterogeneity") cfg.heterogeneity = parse_plain(key, value);
  else if (key == "conditioning") cfg.conditioning = parse_plain(key, value);
  else if (key == "init_distance") cfg.init_distance = parse_plain(key, value);
  else if (key == "task_seed") cfg.task_seed = parse_u64(key, value);
  else if (key == "samples_per_device") cfg.samples_per_device = parse_count(key, value);
  else if (key == "regularization") cfg.regularization = parse_plain(key, value);
  else if (key == "paradigm") cfg.paradigm = parse_paradigm(value);
  else if (key == "rounds") cfg.rounds = parse_count(key, value);
  else if (key == "seeds") cfg.seeds = parse_seeds(value);
  else if (key == "sweep_param") {
    if (!cfg.sweep) cfg.sweep.emplace();
    cfg.sweep->param = std::string(trim(value));
  }
  else if (key == "sweep_values") {
    if (!cfg.sweep) cfg.sweep.emplace();
    cfg.sweep->values = split_list(value);
  }
  else if (key == "zeta_mode") {
    const auto t = trim(value);
    if (t == "adaptive") cfg.zeta_mode = analog::ZetaMode::adaptive;
    else if (t == "static") cfg.zeta_mode = analog::ZetaMode::static_conservative;
    else throw ConfigError("zeta_mode must be adaptive or static");
  }
  else if (key == "outage_mode") {
    const auto t = trim(value);
    if (t == "empirical") cfg.outage_mode = digital::OutageMode::empirical;
    else if (t == "analytic") cfg.outage_mode = digital::OutageMode::analytic;
    else throw ConfigError("outage_mode must be empirical or analytic");
  }
  else if (key == "digital_convention") cfg.digital_convention = parse_convention(value);
  else if (key == "analog_convention") cfg.analog_convention = parse_convention(value);
  else if (key == "threads") cfg.threads = static_cast<unsigned>(parse_count(key, value));
  else throw ConfigError("unknown config key '" + std::string(key) + "'");
}

ExperimentConfig parse_config(std::string_view text, const std::filesystem::path& base_dir) {
  return parse_into(ExperimentConfig{}, text, base_dir, 0);
}

ExperimentConfig load_config(const std::filesystem::path& path) {
  return load_into(ExperimentConfig{}, path, 0);
}

std::string format_config(const ExperimentConfig& cfg) {
  std::ostringstream out;
  out << "k = " << cfg.k << "\n";
  out << "n = " << cfg.n << "\n";
  out << "d = " << cfg.d << "\n";
  out << "b = " << cfg.b << "\n";
  out << "q = " << cfg.q << "\n";
  out << "gamma_th = " << format_number(cfg.gamma_th) << "\n";
  out << "rho = " << format_number(cfg.rho) << "\n";
  out << "eta = " << format_number(cfg.eta) << "\n";
  out << "t_max = " << (cfg.t_max ? format_number(*cfg.t_max) : std::string("auto")) << "\n";
  out << "bandwidth = " << format_number(cfg.bandwidth) << "\n";
  out << "n0 = " << format_number(cfg.n0) << "\n";
  out << "p_max = " << format_number(cfg.p_max) << "\n";
  out << "m = " << cfg.m << "\n";
  out << "path_loss_db = " << join(cfg.path_loss_db) << "\n";
  if (!cfg.alpha.empty()) out << "alpha = " << join(cfg.alpha) << "\n";
  if (!cfg.inclusion.empty()) out << "inclusion = " << join(cfg.inclusion) << "\n";
  out << "task_family = " << (cfg.task_family == TaskFamily::quadratic ? "quadratic" : "logistic") << "\n";
  out << "heterogeneity = " << format_number(cfg.heterogeneity) << "\n";
  out << "conditioning = " << format_number(cfg.conditioning) << "\n";
  out << "init_distance = " << format_number(cfg.init_distance) << "\n";
  out << "task_seed = " << cfg.task_seed << "\n";
  out << "samples_per_device = " << cfg.samples_per_device << "\n";
  out << "regularization = " << format_number(cfg.regularization) << "\n";
  out << "paradigm = " << to_string(cfg.paradigm) << "\n";
  out << "rounds = " << cfg.rounds << "\n";
  out << "seeds = ";
  for (std::size_t i = 0; i < cfg.seeds.size(); ++i) out << (i ? "," : "") << cfg.seeds[i];
  out << "\n";
  if (cfg.sweep) {
    out << "sweep_param = " << cfg.sweep->param << "\n";
    out << "sweep_values = ";
    for (std::size_t i = 0; i < cfg.sweep->values.size(); ++i) out << (i ? "," : "") << cfg.sweep->values[i];
    out << "\n";
  }
  out << "zeta_mode = " << (cfg.zeta_mode == analog::ZetaMode::adaptive ? "adaptive" : "static") << "\n";
  out << "outage_mode = " << (cfg.outage_mode == digital::OutageMode::empirical ? "empirical" : "analytic") << "\n";
  out << "digital_convention = " << convention_name(cfg.digital_convention) << "\n";
  out << "analog_convention = " << convention_name(cfg.analog_convention) << "\n";
  out << "threads = " << cfg.threads << "\n";
  return out.str();
}

}  // namespace wfl::harness
