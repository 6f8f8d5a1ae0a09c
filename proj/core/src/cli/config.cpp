#include "nmdec/cli/config.hpp"

#include <charconv>
#include <fstream>
#include <functional>

namespace nmdec::cli {

namespace {

std::string trim(const std::string& s) {
  size_t b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  size_t e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

template <class T>
T parse_integer(const std::string& key, const std::string& v) {
  T out{};
  auto [p, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  if (ec != std::errc() || p != v.data() + v.size() || v.empty())
    throw ConfigError(key + ": expected an integer, got '" + v + "'");
  return out;
}

double parse_double(const std::string& key, const std::string& v) {
  double out = 0;
  auto [p, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  if (ec != std::errc() || p != v.data() + v.size() || v.empty())
    throw ConfigError(key + ": expected a number, got '" + v + "'");
  return out;
}

bool parse_bool(const std::string& key, const std::string& v) {
  if (v == "true" || v == "on" || v == "1") return true;
  if (v == "false" || v == "off" || v == "0") return false;
  throw ConfigError(key + ": expected true or false, got '" + v + "'");
}

std::string show(double d) {
  char buf[64];
  auto [p, ec] = std::to_chars(buf, buf + sizeof buf, d);
  return std::string(buf, p);
}

struct Field {
  std::function<void(RunConfig&, const std::string&, const std::string&)> set;
  std::function<std::string(const RunConfig&)> get;
};

// `access` is a generic lambda returning a reference to the member.
template <class T, class Access>
Field integer_field(Access access) {
  return {[access](RunConfig& c, const std::string& k, const std::string& v) { access(c) = parse_integer<T>(k, v); },
          [access](const RunConfig& c) { return std::to_string(access(c)); }};
}

template <class Access>
Field double_field(Access access) {
  return {[access](RunConfig& c, const std::string& k, const std::string& v) { access(c) = parse_double(k, v); },
          [access](const RunConfig& c) { return show(access(c)); }};
}

const std::vector<std::pair<std::string, Field>>& fields() {
  static const std::vector<std::pair<std::string, Field>> kFields = {
      {"preset", {[](RunConfig& c, const std::string&, const std::string& v) { c = RunConfig::from_preset(v); },
                  [](const RunConfig& c) { return c.preset; }}},
      {"seed", integer_field<uint64_t>([](auto& c) -> auto& { return c.loop.seed; })},
      {"threads", integer_field<int>([](auto& c) -> auto& { return c.loop.threads; })},
      {"beam", {[](RunConfig& c, const std::string& k, const std::string& v) {
                  c.loop.beam = parse_integer<int>(k, v);
                  c.loop.hyper.beam_width = c.loop.beam;
                },
                [](const RunConfig& c) { return std::to_string(c.loop.beam); }}},
      {"count", integer_field<size_t>([](auto& c) -> auto& { return c.count; })},
      {"optimize", {[](RunConfig& c, const std::string& k, const std::string& v) {
                      c.compiler.optimize = parse_bool(k, v);
                    },
                    [](const RunConfig& c) { return std::string(c.compiler.optimize ? "true" : "false"); }}},
      {"initial_train", integer_field<size_t>([](auto& c) -> auto& { return c.loop.initial_train; })},
      {"per_iter_train", integer_field<size_t>([](auto& c) -> auto& { return c.loop.per_iter_train; })},
      {"val_target", integer_field<size_t>([](auto& c) -> auto& { return c.loop.val_target; })},
      {"keep_fraction", double_field([](auto& c) -> auto& { return c.loop.keep_fraction; })},
      {"success_threshold", double_field([](auto& c) -> auto& { return c.loop.success_threshold; })},
      {"patience_iters", integer_field<int>([](auto& c) -> auto& { return c.loop.patience_iters; })},
      {"iteration_limit", {[](RunConfig& c, const std::string& k, const std::string& v) {
                             if (v == "none") {
                               c.loop.iteration_limit.reset();
                             } else {
                               c.loop.iteration_limit = parse_integer<int>(k, v);
                             }
                           },
                           [](const RunConfig& c) {
                             return c.loop.iteration_limit ? std::to_string(*c.loop.iteration_limit)
                                                           : std::string("none");
                           }}},
      {"max_compiles", integer_field<int>([](auto& c) -> auto& { return c.loop.fill.max_compiles; })},
      {"level", integer_field<int>([](auto& c) -> auto& { return c.loop.grammar.level; })},
      {"max_statements", integer_field<int>([](auto& c) -> auto& { return c.loop.grammar.max_statements; })},
      {"max_expr_depth", integer_field<int>([](auto& c) -> auto& { return c.loop.grammar.max_expr_depth; })},
      {"max_number", integer_field<int>([](auto& c) -> auto& { return c.loop.grammar.max_number; })},
      {"num_variables", integer_field<int>([](auto& c) -> auto& { return c.loop.grammar.num_variables; })},
      {"max_nesting", integer_field<int>([](auto& c) -> auto& { return c.loop.grammar.max_nesting; })},
      {"hidden_size", integer_field<int>([](auto& c) -> auto& { return c.loop.hyper.hidden_size; })},
      {"embedding_size", integer_field<int>([](auto& c) -> auto& { return c.loop.hyper.embedding_size; })},
      {"batch_size", integer_field<int>([](auto& c) -> auto& { return c.loop.hyper.batch_size; })},
      {"validate_every", integer_field<int>([](auto& c) -> auto& { return c.loop.hyper.validate_every_batches; })},
      {"patience", integer_field<int>([](auto& c) -> auto& { return c.loop.hyper.patience; })},
      {"max_epochs", integer_field<int>([](auto& c) -> auto& { return c.loop.hyper.max_epochs; })},
      {"learning_rate", double_field([](auto& c) -> auto& { return c.loop.hyper.learning_rate; })},
      {"clip_norm", double_field([](auto& c) -> auto& { return c.loop.hyper.clip_norm; })},
      {"init_scale", double_field([](auto& c) -> auto& { return c.loop.hyper.init_scale; })},
  };
  return kFields;
}

const Field& field(const std::string& key) {
  for (const auto& [k, f] : fields())
    if (k == key) return f;
  throw ConfigError("unknown setting '" + key + "'");
}

}  // namespace

RunConfig RunConfig::from_preset(const std::string& name) {
  RunConfig c;
  if (name == "desk") {
    c.loop = driver::LoopConfig::desk();
  } else if (name == "paper") {
    c.loop = driver::LoopConfig::paper();
    c.count = 2000;
  } else {
    throw ConfigError("unknown preset '" + name + "' (expected desk or paper)");
  }
  c.preset = name;
  return c;
}

void RunConfig::set(const std::string& key, const std::string& value) { field(key).set(*this, key, value); }

std::string RunConfig::get(const std::string& key) const { return field(key).get(*this); }

const std::vector<std::string>& RunConfig::keys() {
  static const std::vector<std::string> kKeys = [] {
    std::vector<std::string> out;
    for (const auto& [k, f] : fields()) out.push_back(k);
    return out;
  }();
  return kKeys;
}

std::string RunConfig::to_text() const {
  std::string out;
  for (const auto& [k, f] : fields()) out += k + " = " + f.get(*this) + "\n";
  return out;
}

void RunConfig::validate() const {
  loop.validate();
  if (count == 0) throw ConfigError("count must be at least 1");
}

Settings parse_settings(std::istream& in, const std::string& origin) {
  Settings out;
  std::string line;
  for (size_t lineno = 1; std::getline(in, line); ++lineno) {
    if (auto hash = line.find('#'); hash != std::string::npos) line.resize(hash);
    line = trim(line);
    if (line.empty()) continue;
    auto eq = line.find('=');
    if (eq == std::string::npos)
      throw ConfigError(origin + ":" + std::to_string(lineno) + ": expected 'key = value'");
    std::string key = trim(line.substr(0, eq));
    if (key.empty()) throw ConfigError(origin + ":" + std::to_string(lineno) + ": missing key");
    out.emplace_back(key, trim(line.substr(eq + 1)));
  }
  return out;
}

Settings read_settings(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot read config file " + path.string());
  return parse_settings(in, path.string());
}

RunConfig resolve(const Settings& file, const Settings& flags) {
  std::string preset = "desk";
  for (const Settings* s : {&file, &flags})
    for (const auto& [k, v] : *s)
      if (k == "preset") preset = v;
  RunConfig c = RunConfig::from_preset(preset);
  for (const Settings* s : {&file, &flags})
    for (const auto& [k, v] : *s)
      if (k != "preset") c.set(k, v);
  c.validate();
  return c;
}

}  // namespace nmdec::cli
