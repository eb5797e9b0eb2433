#include "decompeval/manifest.hpp"

#include "decompeval/util.hpp"

#include <algorithm>
#include <cmath>
#include <regex>
#include <set>
#include <unordered_map>
#include <unordered_set>

namespace decompeval {

using nlohmann::json;

namespace {

struct DimensionInfo {
  Dimension dim;
  std::string_view name;
  std::string_view abbrev;
  std::string_view slug;
};

constexpr std::array<DimensionInfo, 8> kDimensionInfo = {{
    {Dimension::ControlFlow, "ControlFlow", "CF", "control_flow"},
    {Dimension::DataTypesVariables, "DataTypesVariables", "DT", "data_types"},
    {Dimension::MemoryOperations, "MemoryOperations", "MO", "memory_ops"},
    {Dimension::FunctionCalls, "FunctionCalls", "FC", "function_calls"},
    {Dimension::ObjectOrientedCpp, "ObjectOrientedCpp", "OO", "oo_cpp"},
    {Dimension::CompileTimeSpecialization, "CompileTimeSpecialization", "CT", "compile_time"},
    {Dimension::SystemInteraction, "SystemInteraction", "SI", "system_interaction"},
    {Dimension::SpecialChallenges, "SpecialChallenges", "SC", "special_challenges"},
}};

const DimensionInfo& info(Dimension d) {
  return kDimensionInfo[static_cast<std::size_t>(d)];
}

// Upper bounds (exclusive) of L1..L4 over the weighted sum in [1, 5].
constexpr std::array<double, 4> kLevelThresholds = {1.8, 2.6, 3.4, 4.2};
constexpr double kThresholdSlack = 1e-9;

template <typename E, std::size_t N>
std::optional<E> lookup(const std::array<std::pair<E, std::string_view>, N>& table, std::string_view s) {
  for (const auto& [e, name] : table)
    if (name == s) return e;
  return std::nullopt;
}

template <typename E, std::size_t N>
std::string_view name_of(const std::array<std::pair<E, std::string_view>, N>& table, E e) {
  for (const auto& [v, name] : table)
    if (v == e) return name;
  return "?";
}

constexpr std::array<std::pair<Compiler, std::string_view>, 2> kCompilers = {{
    {Compiler::GCC, "GCC"}, {Compiler::Clang, "Clang"}}};
constexpr std::array<std::pair<OptLevel, std::string_view>, 5> kOpts = {{
    {OptLevel::O0, "O0"}, {OptLevel::O1, "O1"}, {OptLevel::O2, "O2"}, {OptLevel::O3, "O3"}, {OptLevel::Os, "Os"}}};
constexpr std::array<std::pair<DebugInfo, std::string_view>, 2> kDebug = {{
    {DebugInfo::WithDebug, "WithDebug"}, {DebugInfo::Stripped, "Stripped"}}};
constexpr std::array<std::pair<Arch, std::string_view>, 4> kArchs = {{
    {Arch::x86, "x86"}, {Arch::x64, "x64"}, {Arch::ARM32, "ARM32"}, {Arch::ARM64, "ARM64"}}};

template <typename T>
void require_unique(const std::vector<T>& values, std::string_view axis) {
  if (values.empty()) throw ValidationError("axis '" + std::string(axis) + "' is empty");
  for (std::size_t i = 0; i < values.size(); ++i)
    for (std::size_t j = i + 1; j < values.size(); ++j)
      if (values[i] == values[j])
        throw ValidationError("axis '" + std::string(axis) + "' lists " + std::string(to_string(values[i])) +
                              " twice");
}

template <typename E, typename F>
std::vector<E> parse_enum_list(const json& arr, F parse, std::string_view what) {
  std::vector<E> out;
  for (const auto& v : arr) {
    auto e = parse(v.get<std::string>());
    if (!e) throw ValidationError("unknown " + std::string(what) + " '" + v.get<std::string>() + "'");
    out.push_back(*e);
  }
  return out;
}

template <typename E>
json enum_list(const std::vector<E>& values) {
  json arr = json::array();
  for (E v : values) arr.push_back(std::string(to_string(v)));
  return arr;
}

}  // namespace

std::string_view to_string(Dimension d) { return info(d).name; }
std::string_view abbreviation(Dimension d) { return info(d).abbrev; }
std::string_view slug(Dimension d) { return info(d).slug; }

std::optional<Dimension> dimension_from_string(std::string_view s) {
  for (const auto& i : kDimensionInfo)
    if (i.name == s || i.slug == s) return i.dim;
  return std::nullopt;
}

std::optional<Dimension> dimension_from_abbreviation(std::string_view s) {
  for (const auto& i : kDimensionInfo)
    if (i.abbrev == s) return i.dim;
  return std::nullopt;
}

std::string_view to_string(Level l) {
  static constexpr std::array<std::string_view, 5> kNames = {"L1", "L2", "L3", "L4", "L5"};
  return kNames[static_cast<int>(l) - 1];
}

void validate_weights(const DifficultyWeights& w) {
  if (w.control_data_flow < 0 || w.optimization_resistance < 0 || w.semantic_loss_risk < 0)
    throw ValidationError("difficulty weights must be non-negative");
  const double sum = w.control_data_flow + w.optimization_resistance + w.semantic_loss_risk;
  if (std::abs(sum - 1.0) > 1e-9) throw ValidationError("difficulty weights must sum to 1");
  if (!(w.control_data_flow > w.optimization_resistance && w.control_data_flow > w.semantic_loss_risk))
    throw ValidationError("control/data-flow weight must be strictly greatest");
}

double weighted_difficulty(const DifficultyViews& v, const DifficultyWeights& w) {
  return w.control_data_flow * v.control_data_flow + w.optimization_resistance * v.optimization_resistance +
         w.semantic_loss_risk * v.semantic_loss_risk;
}

Level assign_difficulty(const DifficultyViews& views, const DifficultyWeights& weights) {
  validate_weights(weights);
  for (int r : {views.control_data_flow, views.optimization_resistance, views.semantic_loss_risk})
    if (r < 1 || r > 5) throw ValidationError("view rating " + std::to_string(r) + " outside [1,5]");
  const double s = weighted_difficulty(views, weights);
  for (std::size_t i = 0; i < kLevelThresholds.size(); ++i)
    if (s < kLevelThresholds[i] - kThresholdSlack) return static_cast<Level>(i + 1);
  return Level::L5;
}

bool is_valid_case_id(std::string_view id) {
  static const std::regex kId(R"([A-Z]{2}-L[1-5]-[0-9]{2})");
  return std::regex_match(id.begin(), id.end(), kId);
}

std::string_view to_string(Compiler c) { return name_of(kCompilers, c); }
std::string_view to_string(OptLevel o) { return name_of(kOpts, o); }
std::string_view to_string(DebugInfo d) { return name_of(kDebug, d); }
std::string_view to_string(Arch a) { return name_of(kArchs, a); }
std::optional<Compiler> compiler_from_string(std::string_view s) { return lookup(kCompilers, s); }
std::optional<OptLevel> opt_from_string(std::string_view s) { return lookup(kOpts, s); }
std::optional<DebugInfo> debug_from_string(std::string_view s) { return lookup(kDebug, s); }
std::optional<Arch> arch_from_string(std::string_view s) { return lookup(kArchs, s); }

Arch host_arch() {
#if defined(__aarch64__)
  return Arch::ARM64;
#elif defined(__arm__)
  return Arch::ARM32;
#elif defined(__i386__)
  return Arch::x86;
#else
  return Arch::x64;
#endif
}

std::string config_slug(const BuildConfig& c) {
  std::string out = to_lower(to_string(c.compiler));
  out += '_';
  out += to_string(c.optimization);
  out += c.debug == DebugInfo::WithDebug ? "_g_" : "_stripped_";
  out += to_string(c.architecture);
  return out;
}

BuildAxes BuildAxes::defaults() {
  return BuildAxes{
      {Compiler::GCC, Compiler::Clang},
      {OptLevel::O0, OptLevel::O1, OptLevel::O2, OptLevel::O3, OptLevel::Os},
      {DebugInfo::WithDebug, DebugInfo::Stripped},
      {Arch::x86, Arch::x64, Arch::ARM32, Arch::ARM64},
  };
}

std::string MatrixEntry::binary_id() const {
  return std::string(slug(file.dimension)) + "_" + config_slug(config);
}

BuildMatrix expand_matrix(std::span<const DimensionSourceFile> files, const BuildAxes& axes) {
  require_unique(axes.compilers, "compiler");
  require_unique(axes.optimizations, "optimization");
  require_unique(axes.debug, "debug");
  require_unique(axes.architectures, "architecture");
  std::set<std::string> paths;
  for (const auto& f : files)
    if (!paths.insert(f.path).second) throw ValidationError("source file '" + f.path + "' listed twice");

  BuildMatrix m;
  m.entries.reserve(files.size() * axes.compilers.size() * axes.optimizations.size() * axes.debug.size() *
                    axes.architectures.size());
  for (const auto& f : files)
    for (Compiler c : axes.compilers)
      for (OptLevel o : axes.optimizations)
        for (DebugInfo d : axes.debug)
          for (Arch a : axes.architectures) m.entries.push_back({f, BuildConfig{c, o, d, a}});
  return m;
}

const TestCase* Manifest::find_case(std::string_view id) const {
  for (const auto& c : cases)
    if (c.id == id) return &c;
  return nullptr;
}

std::filesystem::path Manifest::resolve(const std::string& relative) const {
  std::filesystem::path p(relative);
  return p.is_absolute() ? p : base_dir / p;
}

std::vector<std::string> validate_manifest(const Manifest& m) {
  std::vector<std::string> violations;
  try {
    validate_weights(m.weights);
  } catch (const ValidationError& e) {
    violations.emplace_back(e.what());
  }

  std::unordered_map<std::string, const TestCase*> by_id;
  for (const auto& c : m.cases) {
    if (!by_id.emplace(c.id, &c).second) {
      violations.push_back("duplicate case id " + c.id);
      continue;
    }
    if (!is_valid_case_id(c.id)) {
      violations.push_back("case id " + c.id + " does not match the id grammar");
    } else {
      if (auto d = dimension_from_abbreviation(c.id.substr(0, 2)); !d || *d != c.dimension)
        violations.push_back("case " + c.id + ": id prefix does not match dimension " +
                             std::string(to_string(c.dimension)));
      if (c.id[4] - '0' != static_cast<int>(c.level))
        violations.push_back("case " + c.id + ": id level digit does not match level " +
                             std::string(to_string(c.level)));
    }
    const auto& v = c.difficulty_views;
    bool views_ok = true;
    for (int r : {v.control_data_flow, v.optimization_resistance, v.semantic_loss_risk}) {
      if (r < 1 || r > 5) {
        violations.push_back("case " + c.id + ": view rating " + std::to_string(r) + " outside [1,5]");
        views_ok = false;
      }
    }
    if (views_ok) {
      try {
        if (assign_difficulty(v, m.weights) != c.level)
          violations.push_back("case " + c.id + ": level " + std::string(to_string(c.level)) +
                               " disagrees with weighted views (" +
                               std::string(to_string(assign_difficulty(v, m.weights))) + ")");
      } catch (const ValidationError&) {
        // Bad weights are already reported once above.
      }
    }
    if (c.function_name.empty()) violations.push_back("case " + c.id + ": empty function_name");
    if (c.source_file.empty()) {
      violations.push_back("case " + c.id + ": empty source_file");
    } else if (!m.base_dir.empty() && !std::filesystem::exists(m.resolve(c.source_file))) {
      violations.push_back("case " + c.id + ": source file " + c.source_file + " not found");
    }
  }

  std::set<std::string> file_paths;
  for (const auto& f : m.files) {
    if (!file_paths.insert(f.path).second) violations.push_back("source file " + f.path + " listed twice");
    if (!m.base_dir.empty() && !std::filesystem::exists(m.resolve(f.path)))
      violations.push_back("dimension file " + f.path + " not found");
    for (const auto& id : f.case_ids) {
      auto it = by_id.find(id);
      if (it == by_id.end()) {
        violations.push_back("dimension file " + f.path + " references unknown case " + id);
      } else if (it->second->dimension != f.dimension) {
        violations.push_back("dimension file " + f.path + " lists case " + id + " of another dimension");
      }
    }
  }

  auto check_axis = [&](auto values, std::string_view axis) {
    try {
      require_unique(values, axis);
    } catch (const ValidationError& e) {
      violations.emplace_back(e.what());
    }
  };
  check_axis(m.axes.compilers, "compiler");
  check_axis(m.axes.optimizations, "optimization");
  check_axis(m.axes.debug, "debug");
  check_axis(m.axes.architectures, "architecture");
  return violations;
}

void to_json(json& j, const BuildConfig& c) {
  j = json{{"compiler", to_string(c.compiler)},
           {"optimization", to_string(c.optimization)},
           {"debug", to_string(c.debug)},
           {"architecture", to_string(c.architecture)}};
}

void from_json(const json& j, BuildConfig& c) {
  auto need = [&](auto opt, const char* key) {
    if (!opt) throw ValidationError(std::string("bad build config field ") + key);
    return *opt;
  };
  c.compiler = need(compiler_from_string(j.at("compiler").get<std::string>()), "compiler");
  c.optimization = need(opt_from_string(j.at("optimization").get<std::string>()), "optimization");
  c.debug = need(debug_from_string(j.at("debug").get<std::string>()), "debug");
  c.architecture = need(arch_from_string(j.at("architecture").get<std::string>()), "architecture");
}

json manifest_to_json(const Manifest& m) {
  json cases = json::array();
  for (const auto& c : m.cases) {
    cases.push_back(json{
        {"id", c.id},
        {"dimension", to_string(c.dimension)},
        {"difficulty_views",
         {{"control_data_flow", c.difficulty_views.control_data_flow},
          {"optimization_resistance", c.difficulty_views.optimization_resistance},
          {"semantic_loss_risk", c.difficulty_views.semantic_loss_risk}}},
        {"level", to_string(c.level)},
        {"function_name", c.function_name},
        {"expected_observation_ids", c.expected_observation_ids},
        {"source_file", c.source_file},
    });
  }
  json files = json::array();
  for (const auto& f : m.files) {
    json jf{{"dimension", to_string(f.dimension)}, {"path", f.path}, {"case_ids", f.case_ids}};
    if (!f.extra_flags.empty()) jf["extra_flags"] = f.extra_flags;
    files.push_back(std::move(jf));
  }
  return json{
      {"cases", std::move(cases)},
      {"files", std::move(files)},
      {"axes",
       {{"compilers", enum_list(m.axes.compilers)},
        {"optimizations", enum_list(m.axes.optimizations)},
        {"debug", enum_list(m.axes.debug)},
        {"architectures", enum_list(m.axes.architectures)}}},
      {"difficulty_weights",
       {{"control_data_flow", m.weights.control_data_flow},
        {"optimization_resistance", m.weights.optimization_resistance},
        {"semantic_loss_risk", m.weights.semantic_loss_risk}}},
  };
}

Manifest manifest_from_json(const json& j, std::filesystem::path base_dir) {
  Manifest m;
  m.base_dir = std::move(base_dir);
  try {
    if (j.contains("difficulty_weights")) {
      const auto& w = j.at("difficulty_weights");
      m.weights = {w.at("control_data_flow").get<double>(), w.at("optimization_resistance").get<double>(),
                   w.at("semantic_loss_risk").get<double>()};
    }
    for (const auto& jc : j.at("cases")) {
      TestCase c;
      c.id = jc.at("id").get<std::string>();
      auto dim = dimension_from_string(jc.at("dimension").get<std::string>());
      if (!dim) throw ValidationError("case " + c.id + ": unknown dimension");
      c.dimension = *dim;
      const auto& v = jc.at("difficulty_views");
      c.difficulty_views = {v.at("control_data_flow").get<int>(), v.at("optimization_resistance").get<int>(),
                            v.at("semantic_loss_risk").get<int>()};
      if (jc.contains("level")) {
        const auto lv = jc.at("level").get<std::string>();
        if (lv.size() != 2 || lv[0] != 'L' || lv[1] < '1' || lv[1] > '5')
          throw ValidationError("case " + c.id + ": bad level " + lv);
        c.level = static_cast<Level>(lv[1] - '0');
      } else {
        c.level = assign_difficulty(c.difficulty_views, m.weights);
      }
      c.function_name = jc.at("function_name").get<std::string>();
      c.expected_observation_ids = jc.value("expected_observation_ids", std::vector<std::string>{});
      c.source_file = jc.at("source_file").get<std::string>();
      m.cases.push_back(std::move(c));
    }
    for (const auto& jf : j.at("files")) {
      DimensionSourceFile f;
      auto dim = dimension_from_string(jf.at("dimension").get<std::string>());
      if (!dim) throw ValidationError("file: unknown dimension");
      f.dimension = *dim;
      f.path = jf.at("path").get<std::string>();
      f.case_ids = jf.value("case_ids", std::vector<std::string>{});
      f.extra_flags = jf.value("extra_flags", std::vector<std::string>{});
      m.files.push_back(std::move(f));
    }
    if (j.contains("axes")) {
      const auto& a = j.at("axes");
      m.axes.compilers = parse_enum_list<Compiler>(a.at("compilers"), compiler_from_string, "compiler");
      m.axes.optimizations = parse_enum_list<OptLevel>(a.at("optimizations"), opt_from_string, "optimization");
      m.axes.debug = parse_enum_list<DebugInfo>(a.at("debug"), debug_from_string, "debug setting");
      m.axes.architectures = parse_enum_list<Arch>(a.at("architectures"), arch_from_string, "architecture");
    }
  } catch (const json::exception& e) {
    throw ValidationError(std::string("malformed manifest: ") + e.what());
  }
  return m;
}

std::string manifest_canonical_text(const Manifest& m) { return manifest_to_json(m).dump(2) + "\n"; }

Manifest load_manifest(const std::filesystem::path& path) {
  json j;
  try {
    j = json::parse(read_text_file(path));
  } catch (const std::exception& e) {
    throw ValidationError("manifest " + path.string() + ": " + e.what());
  }
  return manifest_from_json(j, std::filesystem::absolute(path).parent_path());
}

void save_manifest(const Manifest& m, const std::filesystem::path& path) {
  write_text_file(path, manifest_canonical_text(m));
}

}  // namespace decompeval
