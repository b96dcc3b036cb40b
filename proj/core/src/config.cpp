#include "arapdepth/config.hpp"

#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <functional>
#include <istream>
#include <limits>
#include <ostream>
#include <sstream>

#include "arapdepth/error.hpp"

namespace arapdepth {

namespace {

std::string format_double(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

double parse_double(const std::string& key, const std::string& text) {
  double v = 0.0;
  const char* first = text.data();
  const char* last = first + text.size();
  if (!text.empty() && *first == '+') ++first;
  const auto [ptr, ec] = std::from_chars(first, last, v);
  if (ec != std::errc() || ptr != last || text.empty()) {
    throw ParseError("invalid number for " + key + ": '" + text + "'");
  }
  return v;
}

long long parse_integer(const std::string& key, const std::string& text) {
  long long v = 0;
  const auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), v);
  if (ec != std::errc() || ptr != text.data() + text.size() || text.empty()) {
    throw ParseError("invalid integer for " + key + ": '" + text + "'");
  }
  return v;
}

std::uint64_t parse_unsigned(const std::string& key, const std::string& text) {
  std::uint64_t v = 0;
  const auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), v);
  if (ec != std::errc() || ptr != text.data() + text.size() || text.empty()) {
    throw ParseError("invalid unsigned integer for " + key + ": '" + text + "'");
  }
  return v;
}

bool parse_bool(const std::string& key, const std::string& text) {
  if (text == "true" || text == "1") return true;
  if (text == "false" || text == "0") return false;
  throw ParseError("invalid boolean for " + key + ": '" + text + "'");
}

int parse_int(const std::string& key, const std::string& text) {
  const long long v = parse_integer(key, text);
  if (v < std::numeric_limits<int>::min() || v > std::numeric_limits<int>::max()) {
    throw ParseError("integer out of range for " + key);
  }
  return static_cast<int>(v);
}

struct Field {
  std::string key;
  std::function<std::string(const RunConfig&)> get;
  std::function<void(RunConfig&, const std::string&, const std::string&)> set;
};

template <typename M>
Field double_field(std::string key, M member) {
  return {key, [member](const RunConfig& c) { return format_double(member(c)); },
          [member](RunConfig& c, const std::string& k, const std::string& v) {
            member(c) = parse_double(k, v);
          }};
}

template <typename M>
Field int_field(std::string key, M member) {
  return {key, [member](const RunConfig& c) { return std::to_string(member(c)); },
          [member](RunConfig& c, const std::string& k, const std::string& v) {
            member(c) = parse_int(k, v);
          }};
}

template <typename M>
Field bool_field(std::string key, M member) {
  return {key,
          [member](const RunConfig& c) {
            return std::string(member(c) ? "true" : "false");
          },
          [member](RunConfig& c, const std::string& k, const std::string& v) {
            member(c) = parse_bool(k, v);
          }};
}

const std::vector<Field>& fields() {
  static const std::vector<Field> table = [] {
    std::vector<Field> f;
    f.push_back(int_field("superpixels", [](auto& c) -> auto& { return c.segmentation.superpixels; }));
    f.push_back(double_field("compactness", [](auto& c) -> auto& { return c.segmentation.compactness; }));
    f.push_back(int_field("knn", [](auto& c) -> auto& { return c.segmentation.knn; }));
    f.push_back(double_field("tau", [](auto& c) -> auto& { return c.segmentation.tau; }));
    f.push_back(double_field("beta", [](auto& c) -> auto& { return c.segmentation.beta; }));
    f.push_back(int_field("max_iterations", [](auto& c) -> auto& { return c.solver.max_iterations; }));
    f.push_back(double_field("gradient_tolerance", [](auto& c) -> auto& { return c.solver.gradient_tolerance; }));
    f.push_back(bool_field("use_isometry_box", [](auto& c) -> auto& { return c.solver.use_isometry_box; }));
    f.push_back(double_field("d_sigma", [](auto& c) -> auto& { return c.solver.d_sigma; }));
    f.push_back(double_field("depth_floor", [](auto& c) -> auto& { return c.solver.depth_floor; }));
    f.push_back(double_field("armijo_c", [](auto& c) -> auto& { return c.solver.armijo_c; }));
    f.push_back(double_field("initial_step", [](auto& c) -> auto& { return c.solver.initial_step; }));
    f.push_back(double_field("continuation_start", [](auto& c) -> auto& { return c.solver.continuation_start; }));
    f.push_back(double_field("continuation_factor", [](auto& c) -> auto& { return c.solver.continuation_factor; }));
    f.push_back(double_field("smoothing_eps", [](auto& c) -> auto& { return c.smoothing_eps; }));
    f.push_back(double_field("lambda1", [](auto& c) -> auto& { return c.refine.lambda1; }));
    f.push_back(double_field("sigma1", [](auto& c) -> auto& { return c.refine.sigma1; }));
    f.push_back(double_field("sigma2", [](auto& c) -> auto& { return c.refine.sigma2; }));
    f.push_back(int_field("particles_per_move", [](auto& c) -> auto& { return c.refine.particles_per_move; }));
    f.push_back(int_field("moves", [](auto& c) -> auto& { return c.refine.moves; }));
    f.push_back(double_field("perturb_sigma_normal", [](auto& c) -> auto& { return c.refine.perturb_sigma_normal; }));
    f.push_back(double_field("perturb_sigma_depth", [](auto& c) -> auto& { return c.refine.perturb_sigma_depth; }));
    f.push_back(double_field("unary_weight", [](auto& c) -> auto& { return c.refine.unary_weight; }));
    f.push_back(int_field("trws_max_passes", [](auto& c) -> auto& { return c.refine.trws_max_passes; }));
    f.push_back(double_field("trws_tolerance", [](auto& c) -> auto& { return c.refine.trws_tolerance; }));
    f.push_back(bool_field("color_relabel", [](auto& c) -> auto& { return c.color_relabel; }));
    f.push_back({"depth_convention",
                 [](const RunConfig& c) { return std::string(to_string(c.depth_convention)); },
                 [](RunConfig& c, const std::string&, const std::string& v) {
                   c.depth_convention = parse_depth_convention(v);
                 }});
    f.push_back(double_field("eval_cap", [](auto& c) -> auto& { return c.eval_cap; }));
    f.push_back(bool_field("kitti_like", [](auto& c) -> auto& { return c.kitti_like; }));
    f.push_back({"seed", [](const RunConfig& c) { return std::to_string(c.seed); },
                 [](RunConfig& c, const std::string& k, const std::string& v) {
                   c.apply_seed(parse_unsigned(k, v));
                 }});
    return f;
  }();
  return table;
}

const Field& find_field(const std::string& key) {
  for (const Field& f : fields()) {
    if (f.key == key) return f;
  }
  throw ParseError("unknown configuration key '" + key + "'");
}

}  // namespace

const char* to_string(DepthConvention convention) {
  return convention == DepthConvention::kRange ? "range" : "z";
}

DepthConvention parse_depth_convention(const std::string& text) {
  if (text == "range") return DepthConvention::kRange;
  if (text == "z") return DepthConvention::kZ;
  throw ParseError("depth convention must be 'range' or 'z', got '" + text + "'");
}

void RunConfig::apply_seed(std::uint64_t new_seed) {
  seed = new_seed;
  solver.random_seed = new_seed;
  refine.random_seed = new_seed;
}

void RunConfig::validate() const {
  auto fail = [](const char* msg) { throw Error(ErrorCode::kConfiguration, msg); };
  if (segmentation.superpixels < 2) fail("superpixels must be at least 2");
  if (!(segmentation.compactness > 0.0)) fail("compactness must be positive");
  if (segmentation.knn < 1) fail("knn must be at least 1");
  if (!(segmentation.tau >= 0.0)) fail("tau must be non-negative (0 selects automatic scaling)");
  if (!(segmentation.beta >= 0.0)) fail("beta must be non-negative");
  if (!(smoothing_eps > 0.0) || !std::isfinite(smoothing_eps)) fail("smoothing_eps must be positive");
  if (!(eval_cap > 0.0)) fail("eval_cap must be positive");
  solver.validate();
  refine.validate();
}

bool RunConfig::operator==(const RunConfig& other) const {
  for (const Field& f : fields()) {
    if (f.get(*this) != f.get(other)) return false;
  }
  return true;
}

const std::vector<std::string>& config_keys() {
  static const std::vector<std::string> keys = [] {
    std::vector<std::string> k;
    for (const Field& f : fields()) k.push_back(f.key);
    return k;
  }();
  return keys;
}

void set_config_value(RunConfig& config, const std::string& key, const std::string& value) {
  find_field(key).set(config, key, trim(value));
}

std::string get_config_value(const RunConfig& config, const std::string& key) {
  return find_field(key).get(config);
}

RunConfig parse_config(std::istream& in) {
  RunConfig config;
  std::string line;
  long long offset = 0;
  while (std::getline(in, line)) {
    const long long line_start = offset;
    offset += static_cast<long long>(line.size()) + 1;
    const std::string t = trim(line);
    if (t.empty() || t[0] == '#') continue;
    const auto eq = t.find('=');
    if (eq == std::string::npos) throw ParseError("expected key=value", line_start);
    const std::string key = trim(t.substr(0, eq));
    try {
      set_config_value(config, key, t.substr(eq + 1));
    } catch (const Error& e) {
      throw ParseError(e.what(), line_start);
    }
  }
  return config;
}

RunConfig read_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::kIo, "cannot open config file " + path);
  return parse_config(in);
}

void write_config(std::ostream& out, const RunConfig& config) {
  for (const Field& f : fields()) out << f.key << '=' << f.get(config) << '\n';
}

void write_config(const std::string& path, const RunConfig& config) {
  std::ofstream out(path);
  if (!out) throw Error(ErrorCode::kIo, "cannot write config file " + path);
  write_config(out, config);
  if (!out) throw Error(ErrorCode::kIo, "failed writing config file " + path);
}

}  // namespace arapdepth
