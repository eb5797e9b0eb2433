#include "decompeval/functionality.hpp"

#include "decompeval/util.hpp"

#include <fmt/format.h>

#include <regex>
#include <set>

namespace decompeval {

using nlohmann::json;

std::vector<Observation> parse_observations(std::string_view stdout_text) {
  static const std::regex obs_re(R"(^\s*\[([A-Z]{2}-L[1-5]-[0-9]{2})\] ?(.*)$)");
  std::vector<Observation> out;
  for (auto line : split_lines(stdout_text)) {
    while (!line.empty() && (line.back() == '\r' || line.back() == ' ' || line.back() == '\t')) line.pop_back();
    std::smatch m;
    if (std::regex_match(line, m, obs_re)) {
      out.push_back({m[1].str(), m[2].str(), static_cast<int>(out.size())});
    }
  }
  return out;
}

std::string_view to_string(ProgramCategory c) {
  switch (c) {
    case ProgramCategory::ExactStdout: return "ExactStdout";
    case ProgramCategory::Partial: return "Partial";
    case ProgramCategory::Fail: return "Fail";
    case ProgramCategory::Unsupported: return "Unsupported";
  }
  return "?";
}

std::optional<ProgramCategory> program_category_from_string(std::string_view s) {
  for (auto c : {ProgramCategory::ExactStdout, ProgramCategory::Partial, ProgramCategory::Fail,
                 ProgramCategory::Unsupported}) {
    if (to_string(c) == s) return c;
  }
  return std::nullopt;
}

namespace {

struct ObsKey {
  const std::string* case_id;
  const std::string* payload;
  bool operator==(const ObsKey& o) const { return *case_id == *o.case_id && *payload == *o.payload; }
};

std::vector<ObsKey> keys_of(const std::vector<Observation>& v) {
  std::vector<ObsKey> out;
  out.reserve(v.size());
  for (const auto& o : v) out.push_back({&o.case_id, &o.payload});
  return out;
}

}  // namespace

int aligned_matches(const std::vector<Observation>& orig, const std::vector<Observation>& rec) {
  return static_cast<int>(lcs_length(keys_of(orig), keys_of(rec)));
}

ProgramVerdict classify_program(const std::vector<Observation>& orig, const std::vector<Observation>& rec,
                                bool rec_crashed) {
  ProgramVerdict v;
  v.total_original = static_cast<int>(orig.size());
  v.crash = rec_crashed;
  v.matched = aligned_matches(orig, rec);
  if (rec_crashed) {
    v.category = ProgramCategory::Fail;
  } else if (orig.empty() || rec.empty()) {
    v.category = ProgramCategory::Unsupported;
  } else if (v.matched == v.total_original) {
    v.category = ProgramCategory::ExactStdout;
  } else if (v.matched > 0) {
    v.category = ProgramCategory::Partial;
  } else {
    v.category = ProgramCategory::Fail;
  }
  return v;
}

std::map<std::string, ProgramVerdict> classify_cases(const std::vector<Observation>& orig,
                                                     const std::vector<Observation>& rec, bool rec_crashed) {
  std::map<std::string, ProgramVerdict> out;
  std::set<std::string> ids;
  for (const auto& o : orig) ids.insert(o.case_id);
  for (const auto& id : ids) {
    std::vector<Observation> a, b;
    for (const auto& o : orig) {
      if (o.case_id == id) a.push_back(o);
    }
    for (const auto& o : rec) {
      if (o.case_id == id) b.push_back(o);
    }
    auto v = classify_program(a, b, rec_crashed);
    // A case the recompiled run never reached, with other cases present, is a
    // miss rather than missing evidence.
    if (!rec_crashed && b.empty() && !rec.empty()) v.category = ProgramCategory::Fail;
    out[id] = v;
  }
  return out;
}

const std::vector<std::string>& canonical_arg_registers(Arch arch) {
  static const std::vector<std::string> x64 = {"rdi", "rsi", "rdx", "rcx", "r8", "r9"};
  static const std::vector<std::string> arm64 = {"x0", "x1", "x2", "x3", "x4", "x5", "x6", "x7"};
  static const std::vector<std::string> arm32 = {"r0", "r1", "r2", "r3"};
  static const std::vector<std::string> x86 = {"arg0", "arg1", "arg2", "arg3", "arg4", "arg5"};
  switch (arch) {
    case Arch::x64: return x64;
    case Arch::ARM64: return arm64;
    case Arch::ARM32: return arm32;
    case Arch::x86: return x86;
  }
  return x64;
}

std::vector<CallPair> match_calls(const std::vector<CallRecord>& orig_calls, const std::vector<CallRecord>& rec_calls) {
  std::map<std::pair<std::string, int>, const CallRecord*> rec_index;
  for (const auto& r : rec_calls) {
    if (r.function == kToplevelFrame) continue;
    rec_index.emplace(std::make_pair(r.function, r.invocation_ordinal), &r);
  }
  std::vector<CallPair> pairs;
  for (const auto& o : orig_calls) {
    if (o.function == kToplevelFrame) continue;
    if (auto it = rec_index.find({o.function, o.invocation_ordinal}); it != rec_index.end()) {
      pairs.push_back({o, *it->second});
    }
  }
  return pairs;
}

namespace {

bool is_32bit(Arch a) { return a == Arch::x86 || a == Arch::ARM32; }

std::uint64_t width_mask(Arch a, std::uint64_t v) { return is_32bit(a) ? (v & 0xffffffffULL) : v; }

bool in_regions(std::uint64_t v, const std::vector<MappedRegion>& regions) {
  return std::any_of(regions.begin(), regions.end(),
                     [&](const MappedRegion& r) { return v >= r.start && v < r.end; });
}

bool values_agree(std::uint64_t a, std::uint64_t b, const ValueContext& ctx) {
  a = width_mask(ctx.arch, a);
  b = width_mask(ctx.arch, b);
  if (in_regions(a, ctx.orig_regions) && in_regions(b, ctx.rec_regions)) return true;
  return a == b;
}

}  // namespace

bool io_matches(const CallPair& pair, const ValueContext& ctx) {
  for (const auto& reg : canonical_arg_registers(ctx.arch)) {
    auto a = pair.orig.entry_registers.find(reg);
    auto b = pair.rec.entry_registers.find(reg);
    const bool ha = a != pair.orig.entry_registers.end();
    const bool hb = b != pair.rec.entry_registers.end();
    if (ha != hb) return false;
    if (ha && !values_agree(a->second, b->second, ctx)) return false;
  }
  if (pair.orig.return_value.has_value() != pair.rec.return_value.has_value()) return false;
  if (pair.orig.return_value && !values_agree(*pair.orig.return_value, *pair.rec.return_value, ctx)) return false;
  return true;
}

IoMatch io_match_rate(const std::vector<CallPair>& pairs, const ValueContext& ctx) {
  IoMatch m;
  m.total = static_cast<int>(pairs.size());
  m.evidence_available = !pairs.empty();
  for (const auto& p : pairs) {
    if (io_matches(p, ctx)) ++m.matched;
  }
  return m;
}

std::string_view to_string(ReturnCategory c) {
  switch (c) {
    case ReturnCategory::Zero: return "Zero";
    case ReturnCategory::Positive: return "Positive";
    case ReturnCategory::Negative: return "Negative";
    case ReturnCategory::PointerRange: return "PointerRange";
    case ReturnCategory::Other: return "Other";
  }
  return "?";
}

ReturnCategory return_category(std::optional<std::uint64_t> value, Arch arch, const std::vector<MappedRegion>& regions) {
  if (!value) return ReturnCategory::Other;
  const std::uint64_t v = width_mask(arch, *value);
  if (v == 0) return ReturnCategory::Zero;
  if (in_regions(v, regions)) return ReturnCategory::PointerRange;
  const bool negative = is_32bit(arch) ? static_cast<std::int32_t>(static_cast<std::uint32_t>(v)) < 0
                                       : static_cast<std::int64_t>(v) < 0;
  return negative ? ReturnCategory::Negative : ReturnCategory::Positive;
}

std::vector<SeqToken> build_label_sequence(const std::vector<CallRecord>& calls, Arch arch,
                                           const std::vector<MappedRegion>& regions) {
  std::vector<SeqToken> out;
  for (const auto& c : calls) {
    if (c.function == kToplevelFrame) continue;
    std::string canon;
    for (const auto& reg : canonical_arg_registers(arch)) {
      auto it = c.entry_registers.find(reg);
      if (it == c.entry_registers.end()) {
        canon += "-;";
      } else {
        const auto v = width_mask(arch, it->second);
        canon += in_regions(v, regions) ? std::string("ptr;") : fmt::format("{:x};", v);
      }
    }
    out.push_back({c.function, sha256_hex(canon).substr(0, 16), return_category(c.return_value, arch, regions)});
  }
  return out;
}

std::map<Dimension, double> driver_coverage(const std::vector<Observation>& orig_observations,
                                            const Manifest& manifest) {
  std::set<std::string> seen;
  for (const auto& o : orig_observations) seen.insert(o.case_id);
  std::map<Dimension, std::pair<int, int>> counts;  // observed, expected
  for (const auto& c : manifest.cases) {
    for (const auto& id : c.expected_observation_ids) {
      auto& [hit, total] = counts[c.dimension];
      ++total;
      if (seen.count(id)) ++hit;
    }
  }
  std::map<Dimension, double> out;
  for (const auto& [d, hc] : counts) out[d] = static_cast<double>(hc.first) / static_cast<double>(hc.second);
  return out;
}

void to_json(json& j, const ProgramVerdict& v) {
  j = json{{"category", to_string(v.category)},
           {"matched", v.matched},
           {"total_original", v.total_original},
           {"crash", v.crash}};
}

void from_json(const json& j, ProgramVerdict& v) {
  v.category = program_category_from_string(j.at("category").get<std::string>()).value_or(ProgramCategory::Unsupported);
  v.matched = j.at("matched").get<int>();
  v.total_original = j.at("total_original").get<int>();
  v.crash = j.at("crash").get<bool>();
}

void to_json(json& j, const TaskVerdict& v) {
  j = json{{"program", v.program}, {"per_case", v.per_case}, {"note", v.note}};
  if (v.function_level) {
    const auto& io = v.function_level->io;
    j["function_level"] = {{"evidence_available", io.evidence_available},
                           {"matched_pairs", io.matched},
                           {"pairs", io.total},
                           {"io_match_rate", io.rate()}};
  } else {
    j["function_level"] = nullptr;
  }
  if (v.instruction_level) {
    j["instruction_level"] = {{"evidence_available", v.instruction_level->evidence_available},
                              {"similarity", v.instruction_level->similarity}};
  } else {
    j["instruction_level"] = nullptr;
  }
}

void from_json(const json& j, TaskVerdict& v) {
  v.program = j.at("program").get<ProgramVerdict>();
  v.per_case = j.value("per_case", std::map<std::string, ProgramVerdict>{});
  v.note = j.value("note", std::string());
  v.function_level.reset();
  v.instruction_level.reset();
  if (j.contains("function_level") && !j["function_level"].is_null()) {
    const auto& f = j["function_level"];
    FunctionLevel fl;
    fl.io.evidence_available = f.at("evidence_available").get<bool>();
    fl.io.matched = f.at("matched_pairs").get<int>();
    fl.io.total = f.at("pairs").get<int>();
    v.function_level = fl;
  }
  if (j.contains("instruction_level") && !j["instruction_level"].is_null()) {
    const auto& i = j["instruction_level"];
    v.instruction_level = InstructionLevel{i.at("evidence_available").get<bool>(), i.at("similarity").get<double>()};
  }
}

TaskVerdict evaluate_task(const TaskInputs& in) {
  TaskVerdict v;
  const auto orig = parse_observations(in.orig_stdout);
  const auto rec = parse_observations(in.rec_stdout);
  v.program = classify_program(orig, rec, in.rec_crashed);
  v.per_case = classify_cases(orig, rec, in.rec_crashed);
  if (!in.orig_trace || !in.rec_trace) {
    v.note = "no trace pair; function and instruction levels not computed";
    return v;
  }
  std::vector<CallRecord> oc, rc;
  try {
    oc = reconstruct_calls(in.orig_trace->events);
    rc = reconstruct_calls(in.rec_trace->events);
  } catch (const StreamCorruptionError& e) {
    v.note = std::string("trace unusable: ") + e.what();
    return v;
  }
  const auto pairs = match_calls(oc, rc);
  const ValueContext ctx{in.arch, in.orig_trace->regions, in.rec_trace->regions};
  v.function_level = FunctionLevel{io_match_rate(pairs, ctx)};
  if (v.function_level->io.evidence_available) {
    const auto a = build_label_sequence(oc, in.arch, in.orig_trace->regions);
    const auto b = build_label_sequence(rc, in.arch, in.rec_trace->regions);
    v.instruction_level = InstructionLevel{!a.empty() && !b.empty(), seq_similarity(a, b)};
  } else {
    v.note = "no comparable matching call pair";
  }
  return v;
}

}  // namespace decompeval
