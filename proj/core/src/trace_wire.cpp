#include "decompeval/functionality.hpp"

#include "decompeval/util.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <functional>
#include <set>
#include <tuple>

namespace decompeval {

using nlohmann::json;

namespace {

std::uint64_t parse_hex(const json& v, std::size_t line_no) {
  try {
    if (v.is_number_unsigned() || v.is_number_integer()) return v.get<std::uint64_t>();
    const auto s = v.get<std::string>();
    std::size_t used = 0;
    const auto value = std::stoull(s, &used, 0);
    if (used != s.size()) throw std::invalid_argument(s);
    return value;
  } catch (const std::exception&) {
    throw StreamCorruptionError(fmt::format("line {}: bad numeric value {}", line_no, v.dump()));
  }
}

std::string hex(std::uint64_t v) { return fmt::format("{:#x}", v); }

}  // namespace

TraceStream parse_wire(std::string_view text) {
  TraceStream out;
  std::size_t line_no = 0;
  for (const auto& raw : split_lines(text)) {
    ++line_no;
    const auto line = trim(raw);
    if (line.empty()) continue;
    json j = json::parse(line, nullptr, false);
    if (j.is_discarded() || !j.is_object() || !j.contains("kind")) {
      throw StreamCorruptionError(fmt::format("line {}: not a wire record", line_no));
    }
    const auto kind = j["kind"].get<std::string>();
    if (kind == "maps") {
      for (const auto& r : j.value("regions", json::array())) {
        out.regions.push_back({parse_hex(r.at("start"), line_no), parse_hex(r.at("end"), line_no),
                               r.value("name", std::string())});
      }
      continue;
    }
    if (kind == "corrupt") {
      ++out.corrupt_markers;
      continue;
    }
    TraceEvent e;
    if (kind == "enter") {
      e.kind = EventKind::Enter;
    } else if (kind == "exit") {
      e.kind = EventKind::Exit;
    } else if (kind == "write") {
      e.kind = EventKind::Write;
    } else {
      throw StreamCorruptionError(fmt::format("line {}: unknown kind '{}'", line_no, kind));
    }
    e.seq_id = j.contains("seq") ? parse_hex(j["seq"], line_no) : 0;
    e.thread_id = j.contains("tid") ? parse_hex(j["tid"], line_no) : 0;
    e.order_index = j.contains("idx") ? parse_hex(j["idx"], line_no) : line_no;
    e.function = j.value("fn", std::string());
    if (j.contains("regs") && j["regs"].is_object()) {
      for (const auto& [name, v] : j["regs"].items()) e.registers[name] = parse_hex(v, line_no);
    }
    if (j.contains("ret") && !j["ret"].is_null()) e.return_value = parse_hex(j["ret"], line_no);
    if (e.kind == EventKind::Write) {
      e.fd = j.value("fd", 1);
      if (e.fd != 1) continue;
      try {
        e.data = base64_decode(j.value("data_b64", std::string()));
      } catch (const std::exception&) {
        throw StreamCorruptionError(fmt::format("line {}: bad base64 payload", line_no));
      }
    }
    out.events.push_back(std::move(e));
  }
  std::stable_sort(out.events.begin(), out.events.end(),
                   [](const TraceEvent& a, const TraceEvent& b) { return a.order_index < b.order_index; });
  return out;
}

std::string serialize_wire(const TraceStream& stream) {
  std::string out;
  if (!stream.regions.empty()) {
    json regions = json::array();
    for (const auto& r : stream.regions) regions.push_back({{"start", hex(r.start)}, {"end", hex(r.end)}, {"name", r.name}});
    out += json{{"kind", "maps"}, {"regions", regions}}.dump() + "\n";
  }
  for (const auto& e : stream.events) {
    json j;
    switch (e.kind) {
      case EventKind::Enter: j["kind"] = "enter"; break;
      case EventKind::Exit: j["kind"] = "exit"; break;
      case EventKind::Write: j["kind"] = "write"; break;
    }
    j["seq"] = e.seq_id;
    j["tid"] = e.thread_id;
    j["idx"] = e.order_index;
    if (e.kind == EventKind::Write) {
      j["fd"] = e.fd;
      j["data_b64"] = base64_encode(e.data);
    } else {
      j["fn"] = e.function;
      json regs = json::object();
      for (const auto& [k, v] : e.registers) regs[k] = hex(v);
      j["regs"] = regs;
      if (e.return_value) j["ret"] = hex(*e.return_value);
    }
    out += j.dump() + "\n";
  }
  for (std::size_t i = 0; i < stream.corrupt_markers; ++i) out += R"({"kind":"corrupt"})" "\n";
  return out;
}

void to_json(json& j, const CallRecord& c) {
  json regs = json::object();
  for (const auto& [k, v] : c.entry_registers) regs[k] = hex(v);
  j = json{{"seq", c.seq_id},
           {"tid", c.thread_id},
           {"fn", c.function},
           {"regs", regs},
           {"ret", c.return_value ? json(hex(*c.return_value)) : json(nullptr)},
           {"writes", c.attributed_writes},
           {"ordinal", c.invocation_ordinal},
           {"parent", c.parent_seq ? json(*c.parent_seq) : json(nullptr)},
           {"depth", c.depth}};
}

std::vector<CallRecord> reconstruct_calls(const std::vector<TraceEvent>& events) {
  std::vector<CallRecord> records;
  std::map<std::uint64_t, std::size_t> by_seq;                      // seq -> index in records
  std::map<std::uint64_t, std::vector<std::size_t>> stacks;         // tid -> record indices
  std::map<std::uint64_t, std::size_t> toplevel;                    // tid -> record index

  for (const auto& e : events) {
    auto& stack = stacks[e.thread_id];
    switch (e.kind) {
      case EventKind::Enter: {
        if (by_seq.count(e.seq_id)) throw StreamCorruptionError(fmt::format("duplicate enter seq {}", e.seq_id));
        CallRecord r;
        r.seq_id = e.seq_id;
        r.thread_id = e.thread_id;
        r.function = e.function;
        r.entry_registers = e.registers;
        r.depth = static_cast<int>(stack.size());
        if (!stack.empty()) r.parent_seq = records[stack.back()].seq_id;
        by_seq[e.seq_id] = records.size();
        stack.push_back(records.size());
        records.push_back(std::move(r));
        break;
      }
      case EventKind::Exit: {
        auto it = std::find_if(stack.rbegin(), stack.rend(),
                               [&](std::size_t idx) { return records[idx].seq_id == e.seq_id; });
        if (it == stack.rend()) {
          throw StreamCorruptionError(fmt::format("exit seq {} on thread {} has no matching enter", e.seq_id,
                                                  e.thread_id));
        }
        records[*it].return_value = e.return_value.value_or(0);
        stack.erase(std::next(it).base(), stack.end());
        break;
      }
      case EventKind::Write: {
        if (e.fd != 1) break;
        if (!stack.empty()) {
          records[stack.back()].attributed_writes.push_back(e.data);
        } else {
          auto tl = toplevel.find(e.thread_id);
          if (tl == toplevel.end()) {
            CallRecord r;
            r.seq_id = 0;
            r.thread_id = e.thread_id;
            r.function = std::string(kToplevelFrame);
            tl = toplevel.emplace(e.thread_id, records.size()).first;
            records.push_back(std::move(r));
          }
          records[tl->second].attributed_writes.push_back(e.data);
        }
        break;
      }
    }
  }

  std::stable_sort(records.begin(), records.end(), [](const CallRecord& a, const CallRecord& b) {
    return std::tie(a.seq_id, a.thread_id) < std::tie(b.seq_id, b.thread_id);
  });
  std::map<std::string, int> ordinals;
  for (auto& r : records) {
    if (r.function == kToplevelFrame) continue;
    r.invocation_ordinal = ++ordinals[r.function];
  }
  return records;
}

std::vector<TraceEvent> events_from_calls(const std::vector<CallRecord>& calls) {
  std::map<std::uint64_t, std::vector<const CallRecord*>> children;  // parent seq -> children
  std::vector<const CallRecord*> roots;
  std::vector<const CallRecord*> toplevels;
  for (const auto& c : calls) {
    if (c.function == kToplevelFrame) {
      toplevels.push_back(&c);
    } else if (c.parent_seq) {
      children[*c.parent_seq].push_back(&c);
    } else {
      roots.push_back(&c);
    }
  }
  auto by_seq = [](const CallRecord* a, const CallRecord* b) { return a->seq_id < b->seq_id; };
  std::sort(roots.begin(), roots.end(), by_seq);
  for (auto& [p, v] : children) std::sort(v.begin(), v.end(), by_seq);

  std::vector<TraceEvent> out;
  std::uint64_t idx = 0;
  auto write = [&](std::uint64_t tid, const std::string& data) {
    TraceEvent w;
    w.kind = EventKind::Write;
    w.thread_id = tid;
    w.fd = 1;
    w.data = data;
    w.order_index = idx++;
    out.push_back(std::move(w));
  };
  for (const auto* t : toplevels) {
    for (const auto& d : t->attributed_writes) write(t->thread_id, d);
  }
  std::function<void(const CallRecord&)> emit = [&](const CallRecord& c) {
    TraceEvent en;
    en.kind = EventKind::Enter;
    en.seq_id = c.seq_id;
    en.thread_id = c.thread_id;
    en.function = c.function;
    en.registers = c.entry_registers;
    en.order_index = idx++;
    out.push_back(std::move(en));
    for (const auto& d : c.attributed_writes) write(c.thread_id, d);
    if (auto it = children.find(c.seq_id); it != children.end()) {
      for (const auto* ch : it->second) emit(*ch);
    }
    if (c.return_value) {
      TraceEvent ex;
      ex.kind = EventKind::Exit;
      ex.seq_id = c.seq_id;
      ex.thread_id = c.thread_id;
      ex.function = c.function;
      ex.return_value = c.return_value;
      ex.order_index = idx++;
      out.push_back(std::move(ex));
    }
  };
  for (const auto* r : roots) emit(*r);
  return out;
}

}  // namespace decompeval
