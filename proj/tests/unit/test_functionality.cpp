#include "decompeval/functionality.hpp"
#include "decompeval/util.hpp"

#include "oracles.hpp"
#include "support.hpp"

#include <doctest.h>

using namespace decompeval;
using nlohmann::json;

namespace {

TraceEvent enter(std::uint64_t seq, std::string fn, std::map<std::string, std::uint64_t> regs = {},
                 std::uint64_t tid = 1) {
  TraceEvent e;
  e.kind = EventKind::Enter;
  e.seq_id = seq;
  e.thread_id = tid;
  e.function = std::move(fn);
  e.registers = std::move(regs);
  return e;
}

TraceEvent exit_(std::uint64_t seq, std::string fn, std::uint64_t ret, std::uint64_t tid = 1) {
  TraceEvent e;
  e.kind = EventKind::Exit;
  e.seq_id = seq;
  e.thread_id = tid;
  e.function = std::move(fn);
  e.return_value = ret;
  return e;
}

TraceEvent write(std::string data, std::uint64_t tid = 1) {
  TraceEvent e;
  e.kind = EventKind::Write;
  e.thread_id = tid;
  e.data = std::move(data);
  return e;
}

std::vector<TraceEvent> indexed(std::vector<TraceEvent> events) {
  for (std::size_t i = 0; i < events.size(); ++i) events[i].order_index = i + 1;
  return events;
}

CallRecord call(std::string fn, int ordinal, std::map<std::string, std::uint64_t> regs,
                std::optional<std::uint64_t> ret) {
  CallRecord c;
  c.function = std::move(fn);
  c.invocation_ordinal = ordinal;
  c.entry_registers = std::move(regs);
  c.return_value = ret;
  return c;
}

std::string fmt_id(int i) { return "CF-L1-" + std::string(i < 10 ? "0" : "") + std::to_string(i); }

}  // namespace

TEST_SUITE("functionality") {
  TEST_CASE("observations") {
    auto obs = parse_observations("[CF-L1-03] result=42");
    REQUIRE(obs.size() == 1);
    CHECK(obs[0] == Observation{"CF-L1-03", "result=42", 0});
    CHECK(parse_observations("").empty());
    obs = parse_observations("noise\n[CF-L1-01] a b\r\nmore [XX-L1-01] not at start\n[DT-L2-07] 9\n[bad] x\n");
    REQUIRE(obs.size() == 2);
    CHECK(obs[0].payload == "a b");
    CHECK(obs[1].case_id == "DT-L2-07");
    CHECK(obs[1].position == 1);
  }

  TEST_CASE("program verdict examples") {
    const auto orig = parse_observations("[CF-L1-01] 1\n[CF-L1-02] 2\n[CF-L1-03] 3\n");
    auto v = classify_program(orig, orig, false);
    CHECK(v.category == ProgramCategory::ExactStdout);
    CHECK(v.matched == 3);
    v = classify_program(orig, parse_observations("[CF-L1-01] 1\n[CF-L1-02] 2\n[CF-L1-03] 4\n"), false);
    CHECK(v.category == ProgramCategory::Partial);
    CHECK(v.matched == 2);
    CHECK(classify_program(orig, orig, true).category == ProgramCategory::Fail);
    CHECK(classify_program(orig, {}, true).category == ProgramCategory::Fail);
    CHECK(classify_program(orig, {}, false).category == ProgramCategory::Unsupported);
    CHECK(classify_program({}, orig, false).category == ProgramCategory::Unsupported);
    CHECK(classify_program(orig, parse_observations("[CF-L1-09] 1\n"), false).category == ProgramCategory::Fail);
    // Reordering counts only the longest in-order alignment.
    v = classify_program(orig, parse_observations("[CF-L1-03] 3\n[CF-L1-01] 1\n[CF-L1-02] 2\n"), false);
    CHECK(v.category == ProgramCategory::Partial);
    CHECK(v.matched == 2);
    for (auto c : {ProgramCategory::ExactStdout, ProgramCategory::Partial, ProgramCategory::Fail,
                   ProgramCategory::Unsupported})
      CHECK(program_category_from_string(to_string(c)) == c);
  }

  TEST_CASE("per-case verdicts isolate one case") {
    const auto orig = parse_observations("[CF-L1-01] 1\n[CF-L3-01] 5 0 1\n");
    const auto rec = parse_observations("[CF-L1-01] 1\n[CF-L3-01] 5 0 9\n");
    const auto cases = classify_cases(orig, rec, false);
    CHECK(cases.at("CF-L1-01").category == ProgramCategory::ExactStdout);
    CHECK(cases.at("CF-L3-01").category == ProgramCategory::Fail);
    CHECK(classify_program(orig, rec, false).category == ProgramCategory::Partial);
  }

  TEST_CASE("randomized verdicts agree with the reference classifier") {
    std::mt19937_64 rng(7);
    std::map<ProgramCategory, int> seen;
    for (int i = 0; i < 10000; ++i) {
      const auto c = testsupport::random_observations(rng);
      const auto v = classify_program(c.orig, c.rec, c.crashed);
      int matched = 0;
      REQUIRE(v.category == testsupport::reference_category(c.orig, c.rec, c.crashed, &matched));
      REQUIRE(v.matched == matched);
      REQUIRE(testsupport::verdict_invariants_partition(v, c.rec.empty()));
      ++seen[v.category];
    }
    CHECK(seen.size() == 4);
  }

  TEST_CASE("call reconstruction") {
    auto calls = reconstruct_calls(indexed({enter(1, "f"), write("hi"), exit_(1, "f", 0)}));
    REQUIRE(calls.size() == 1);
    CHECK(calls[0].attributed_writes == std::vector<std::string>{"hi"});
    CHECK(calls[0].return_value == 0u);

    calls = reconstruct_calls(
        indexed({enter(1, "f"), enter(2, "g"), write("x"), exit_(2, "g", 1), write("y"), exit_(1, "f", 2)}));
    REQUIRE(calls.size() == 2);
    CHECK(calls[0].attributed_writes == std::vector<std::string>{"y"});
    CHECK(calls[1].attributed_writes == std::vector<std::string>{"x"});
    CHECK(calls[1].parent_seq == 1u);
    CHECK(calls[1].depth == 1);

    // Two threads interleaved keep separate stacks.
    calls = reconstruct_calls(indexed({enter(1, "f", {}, 1), enter(2, "g", {}, 2), write("a", 1), write("b", 2),
                                       exit_(1, "f", 10, 1), exit_(2, "g", 20, 2)}));
    REQUIRE(calls.size() == 2);
    CHECK(calls[0].attributed_writes == std::vector<std::string>{"a"});
    CHECK(calls[1].attributed_writes == std::vector<std::string>{"b"});
    CHECK(calls[1].return_value == 20u);
    CHECK(calls[1].depth == 0);

    // Writes outside any frame and calls that never return.
    calls = reconstruct_calls(indexed({write("pre"), enter(5, "h"), enter(6, "h")}));
    REQUIRE(calls.size() == 3);
    CHECK(calls[0].function == kToplevelFrame);
    CHECK_FALSE(calls[1].return_value.has_value());
    CHECK(calls[2].invocation_ordinal == 2);

    CHECK_THROWS_AS(reconstruct_calls(indexed({exit_(9, "f", 0)})), StreamCorruptionError);
    CHECK_THROWS_AS(reconstruct_calls(indexed({enter(1, "f", {}, 1), exit_(1, "f", 0, 2)})), StreamCorruptionError);
  }

  TEST_CASE("wire format from the instrumentation agent") {
    const std::string wire =
        R"({"kind":"maps","regions":[{"start":"0x400000","end":"0x401000","name":"prog"}]})"
        "\n"
        R"({"kind":"enter","seq":1,"tid":7,"fn":"main","regs":{"rdi":"0x1","rsi":"0x400010"},"idx":1})"
        "\n"
        R"({"kind":"enter","seq":2,"tid":7,"fn":"fact","regs":{"rdi":"0x3"},"idx":2})"
        "\n"
        R"({"kind":"write","seq":0,"tid":7,"fd":1,"data_b64":"Ng==","idx":3})"
        "\n"
        R"({"kind":"write","seq":0,"tid":7,"fd":2,"data_b64":"ZXJy","idx":4})"
        "\n"
        R"({"kind":"exit","seq":2,"tid":7,"fn":"fact","ret":"0x6","idx":5})"
        "\n"
        R"({"kind":"corrupt"})"
        "\n"
        R"({"kind":"exit","seq":1,"tid":7,"fn":"main","ret":"0x0","idx":6})"
        "\n";
    const auto s = parse_wire(wire);
    REQUIRE(s.events.size() == 5);
    CHECK(s.corrupt_markers == 1);
    REQUIRE(s.regions.size() == 1);
    CHECK(s.regions[0].start == 0x400000u);
    CHECK(s.events[0].registers.at("rsi") == 0x400010u);
    CHECK(s.events[2].data == "6");
    const auto calls = reconstruct_calls(s.events);
    REQUIRE(calls.size() == 2);
    CHECK(calls[1].function == "fact");
    CHECK(calls[1].attributed_writes == std::vector<std::string>{"6"});
    CHECK(calls[1].return_value == 6u);

    const auto again = parse_wire(serialize_wire(s));
    CHECK(again.events == s.events);
    CHECK(again.regions == s.regions);
    CHECK(again.corrupt_markers == 1);

    CHECK_THROWS_AS(parse_wire("not json\n"), StreamCorruptionError);
    CHECK_THROWS_AS(parse_wire(R"({"kind":"enter","seq":"0xZZ"})"), StreamCorruptionError);
    CHECK_THROWS_AS(parse_wire(R"({"kind":"teleport"})"), StreamCorruptionError);
  }

  TEST_CASE("serialize, parse, reconstruct is the identity on call records") {
    std::mt19937_64 rng(11);
    for (int trial = 0; trial < 200; ++trial) {
      // random well-nested program over two threads
      std::vector<TraceEvent> events;
      std::map<std::uint64_t, std::vector<std::uint64_t>> stacks;
      std::uint64_t seq = 0;
      const int steps = static_cast<int>(rng() % 30);
      for (int i = 0; i < steps; ++i) {
        const std::uint64_t tid = 1 + rng() % 2;
        auto& st = stacks[tid];
        switch (rng() % 3) {
          case 0:
            events.push_back(enter(++seq, "fn" + std::to_string(rng() % 4), {{"rdi", rng() % 5}}, tid));
            st.push_back(seq);
            break;
          case 1:
            if (!st.empty()) {
              events.push_back(exit_(st.back(), "", rng() % 3, tid));
              st.pop_back();
            }
            break;
          default: events.push_back(write(std::string(1, static_cast<char>('a' + rng() % 26)), tid));
        }
      }
      events = indexed(events);
      const auto calls = reconstruct_calls(events);
      TraceStream stream;
      stream.events = events_from_calls(calls);
      const auto back = reconstruct_calls(parse_wire(serialize_wire(stream)).events);
      REQUIRE(back == calls);
    }
  }

  TEST_CASE("call matching by ordinal") {
    std::vector<CallRecord> o = {call("f", 1, {}, 0), call("g", 1, {}, 0), call("f", 2, {}, 0), call("f", 3, {}, 0)};
    std::vector<CallRecord> r = {call("g", 1, {}, 0), call("f", 1, {}, 0), call("f", 2, {}, 0), call("h", 1, {}, 0)};
    const auto pairs = match_calls(o, r);
    CHECK(pairs.size() == 3);
    for (const auto& p : pairs) {
      CHECK(p.orig.function == p.rec.function);
      CHECK(p.orig.invocation_ordinal == p.rec.invocation_ordinal);
    }
    CHECK(match_calls({call("a", 1, {}, 0)}, {call("b", 1, {}, 0)}).empty());
    r.push_back(call("zz", 1, {}, 0));
    CHECK(match_calls(o, r).size() == 3);
  }

  TEST_CASE("I/O agreement uses canonical registers and pointer ranges") {
    ValueContext ctx;
    ctx.arch = Arch::x64;
    ctx.orig_regions = {{0x400000, 0x500000, "a"}};
    ctx.rec_regions = {{0x800000, 0x900000, "b"}};
    const auto base = call("f", 1, {{"rdi", 1}, {"rsi", 0x400100}, {"rbx", 77}}, 5);
    auto same = call("f", 1, {{"rdi", 1}, {"rsi", 0x800200}, {"rbx", 99}}, 5);
    CHECK(io_matches({base, same}, ctx));
    auto ret = same;
    ret.return_value = 6;
    CHECK_FALSE(io_matches({base, ret}, ctx));
    auto arg = same;
    arg.entry_registers["rdi"] = 2;
    CHECK_FALSE(io_matches({base, arg}, ctx));
    auto none = call("f", 1, {{"rdi", 1}, {"rsi", 0x800200}}, std::nullopt);
    auto none2 = none;
    none2.entry_registers["rsi"] = 0x800300;
    CHECK(io_matches({none, none2}, ValueContext{Arch::x64, ctx.rec_regions, ctx.rec_regions}));

    CHECK_FALSE(io_match_rate({}, ctx).evidence_available);
    const auto m = io_match_rate({{base, same}, {base, same}, {base, same}, {base, ret}}, ctx);
    CHECK(m.evidence_available);
    CHECK(m.rate() == doctest::Approx(0.75));
    CHECK(canonical_arg_registers(Arch::ARM64).size() == 8);
    CHECK(canonical_arg_registers(Arch::x64).size() == 6);
  }

  TEST_CASE("return categories") {
    const std::vector<MappedRegion> maps = {{0x1000, 0x2000, "m"}};
    CHECK(return_category(0, Arch::x64, maps) == ReturnCategory::Zero);
    CHECK(return_category(~std::uint64_t{0}, Arch::x64, maps) == ReturnCategory::Negative);
    CHECK(return_category(0xffffffffu, Arch::x86, maps) == ReturnCategory::Negative);
    CHECK(return_category(0xffffffffu, Arch::x64, maps) == ReturnCategory::Positive);
    CHECK(return_category(0x1800, Arch::x64, maps) == ReturnCategory::PointerRange);
    CHECK(return_category(0x2000, Arch::x64, maps) == ReturnCategory::Positive);
    CHECK(return_category(std::nullopt, Arch::x64, maps) == ReturnCategory::Other);
  }

  TEST_CASE("sequence similarity examples") {
    using V = std::vector<char>;
    CHECK(seq_similarity(V{'a', 'b', 'c'}, V{'a', 'b', 'c'}) == 1.0);
    CHECK(seq_similarity(V{'a', 'b', 'c'}, V{'a', 'c'}) == doctest::Approx(2.0 / 3.0));
    CHECK(seq_similarity(V{'a', 'b'}, V{'x', 'y'}) == 0.0);
    CHECK(seq_similarity(V{}, V{}) == 1.0);
    CHECK(seq_similarity(V{}, V{'a'}) == 0.0);
  }

  TEST_CASE("similarity matches the LCS oracle for all short sequences") {
    // Lengths up to 6 here; the acceptance run covers lengths up to 8.
    const auto seqs = testsupport::all_sequences(3, 6);
    std::size_t pairs = 0;
    bool ok = true;
    testsupport::brute_lcs_all_pairs(seqs, [&](std::size_t a, std::size_t b, std::size_t lcs) {
      ++pairs;
      const double expected = seqs[a].empty() && seqs[b].empty()
                                  ? 1.0
                                  : static_cast<double>(lcs) / static_cast<double>(std::max(seqs[a].size(), seqs[b].size()));
      const double got = seq_similarity(seqs[a], seqs[b]);
      if (got != expected || got != seq_similarity(seqs[b], seqs[a]) || (got == 1.0) != (seqs[a] == seqs[b])) ok = false;
    });
    CHECK(ok);
    CHECK(pairs == seqs.size() * seqs.size());
    // The fast oracle itself agrees with the plain brute force on a sample.
    for (std::size_t i = 0; i < seqs.size(); i += 97)
      for (std::size_t j = 0; j < seqs.size(); j += 89)
        CHECK(lcs_length(seqs[i], seqs[j]) == testsupport::brute_lcs(seqs[i], seqs[j]));
  }

  TEST_CASE("lcs agrees with the table oracle on both sides of 64 symbols") {
    std::mt19937_64 rng(3);
    std::uniform_int_distribution<int> sym(0, 4), len(0, 130);
    for (int i = 0; i < 300; ++i) {
      std::vector<int> a(static_cast<std::size_t>(len(rng))), b(static_cast<std::size_t>(len(rng)));
      for (auto& x : a) x = sym(rng);
      for (auto& x : b) x = sym(rng);
      CAPTURE(a.size());
      CAPTURE(b.size());
      CHECK(lcs_length(a, b) == testsupport::table_lcs(a, b));
    }
    const std::vector<int> same(64, 1);
    CHECK(lcs_length(same, same) == 64);
  }

  TEST_CASE("label sequences are pure and skip the toplevel frame") {
    std::vector<CallRecord> calls = {call("f", 1, {{"rdi", 1}}, 0), call(std::string(kToplevelFrame), 0, {}, std::nullopt),
                                     call("g", 1, {{"rdi", 0x1500}}, 0x1500)};
    const std::vector<MappedRegion> maps = {{0x1000, 0x2000, "m"}};
    const auto a = build_label_sequence(calls, Arch::x64, maps);
    REQUIRE(a.size() == 2);
    CHECK(a == build_label_sequence(calls, Arch::x64, maps));
    CHECK(a[1].return_category == ReturnCategory::PointerRange);
    calls[2].entry_registers["rdi"] = 0x1600;
    CHECK(build_label_sequence(calls, Arch::x64, maps)[1] == a[1]);
    calls[0].entry_registers["rdi"] = 2;
    CHECK_FALSE(build_label_sequence(calls, Arch::x64, maps)[0] == a[0]);
  }

  TEST_CASE("driver coverage") {
    Manifest m;
    for (int i = 1; i <= 45; ++i) {
      TestCase c;
      c.id = fmt_id(i);
      c.dimension = Dimension::ControlFlow;
      c.expected_observation_ids = {c.id};
      m.cases.push_back(c);
    }
    std::vector<Observation> obs;
    for (int i = 1; i <= 44; ++i) obs.push_back({fmt_id(i), "", i - 1});
    CHECK(driver_coverage(obs, m).at(Dimension::ControlFlow) == doctest::Approx(0.978).epsilon(0.001));
    obs.push_back({fmt_id(45), "", 44});
    CHECK(driver_coverage(obs, m).at(Dimension::ControlFlow) == 1.0);
    CHECK(driver_coverage({}, m).at(Dimension::ControlFlow) == 0.0);
  }

  TEST_CASE("task evaluation keeps levels independent") {
    TaskInputs in;
    in.orig_stdout = "[CF-L1-01] 1\n[CF-L1-02] 2\n";
    in.rec_stdout = "[CF-L1-01] 1\n";
    auto v = evaluate_task(in);
    CHECK(v.program.category == ProgramCategory::Partial);
    CHECK_FALSE(v.function_level.has_value());
    CHECK_FALSE(v.note.empty());

    TraceStream t;
    t.events = indexed({enter(1, "f", {{"rdi", 1}}), exit_(1, "f", 0)});
    in.orig_trace = t;
    in.rec_trace = t;
    v = evaluate_task(in);
    CHECK(v.program.category == ProgramCategory::Partial);
    REQUIRE(v.function_level.has_value());
    CHECK(v.function_level->io.rate() == 1.0);
    REQUIRE(v.instruction_level.has_value());
    CHECK(v.instruction_level->similarity == 1.0);

    in.rec_trace->events = indexed({exit_(4, "f", 0)});
    v = evaluate_task(in);
    CHECK(v.program.category == ProgramCategory::Partial);
    CHECK_FALSE(v.function_level.has_value());

    const auto back = json(evaluate_task(in)).get<TaskVerdict>();
    CHECK(back.program.category == ProgramCategory::Partial);
    CHECK(back.per_case.size() == 2);
  }
}
