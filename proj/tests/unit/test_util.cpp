#include "decompeval/process.hpp"
#include "decompeval/util.hpp"

#include "support.hpp"

#include <doctest.h>

#include <atomic>
#include <set>

using namespace decompeval;

TEST_SUITE("util") {
  TEST_CASE("sha256 of known inputs") {
    CHECK(sha256_hex("") == "e3b0c44298fc1c149afbf4c8996fb92427ae41e4649b934ca495991b7852b855");
    CHECK(sha256_hex("abc") == "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");
  }

  TEST_CASE("base64 round trip and rejects garbage") {
    const std::string bytes("a\0b\xff\n", 5);
    CHECK(base64_encode("hello") == "aGVsbG8=");
    CHECK(base64_decode(base64_encode(bytes)) == bytes);
    CHECK(base64_decode("") == "");
    CHECK_THROWS_AS(base64_decode("@@@"), std::invalid_argument);
  }

  TEST_CASE("string helpers") {
    CHECK(split_lines("a\nb\r\n\nc") == std::vector<std::string>{"a", "b", "", "c"});
    CHECK(join({"x", "y", "z"}, "/") == "x/y/z");
    CHECK(trim("  pad \t\n") == "pad");
    CHECK(starts_with("decomp", "dec"));
    CHECK_FALSE(starts_with("de", "dec"));
    CHECK(to_lower("GhIdRa") == "ghidra");
    CHECK(sanitize_filename("glm-4.7/x y") == "glm-4.7_x_y");
  }

  TEST_CASE("atomic file write creates parents") {
    testsupport::TempDir dir;
    const auto p = dir / "a/b/c.txt";
    write_text_file(p, "one");
    write_text_file(p, "two");
    CHECK(read_text_file(p) == "two");
    CHECK_THROWS(read_text_file(dir / "missing"));
  }

  TEST_CASE("parallel_for visits every index once and rethrows") {
    std::vector<std::atomic<int>> hits(97);
    parallel_for(hits.size(), 4, [&](std::size_t i) { ++hits[i]; });
    for (const auto& h : hits) CHECK(h.load() == 1);
    CHECK_THROWS_AS(parallel_for(10, 3,
                                 [](std::size_t i) {
                                   if (i == 7) throw std::runtime_error("seven");
                                 }),
                    std::runtime_error);
  }

  TEST_CASE("run_process captures output, exit codes, signals and timeouts") {
    auto ok = run_process({"sh", "-c", "echo out; echo err 1>&2; exit 3"});
    CHECK(ok.spawned);
    CHECK(ok.exit_code == 3);
    CHECK(ok.stdout_text == "out\n");
    CHECK(ok.stderr_text == "err\n");
    CHECK_FALSE(ok.crashed());

    auto sig = run_process({"sh", "-c", "kill -SEGV $$"});
    CHECK(sig.crashed());
    CHECK(sig.term_signal == 11);

    ProcessOptions quick;
    quick.timeout = std::chrono::milliseconds(200);
    auto slow = run_process({"sleep", "5"}, quick);
    CHECK(slow.timed_out);
    CHECK(slow.duration_ms < 3000);

    auto missing = run_process({"no-such-binary-decompeval"});
    CHECK_FALSE(missing.spawned);

    ProcessOptions in;
    in.stdin_text = "piped";
    CHECK(run_process({"cat"}, in).stdout_text == "piped");
  }

  TEST_CASE("split_command honours quotes") {
    CHECK(split_command("ghidra 'a b' \"c d\" e") == std::vector<std::string>{"ghidra", "a b", "c d", "e"});
    CHECK(find_executable("sh").has_value());
    CHECK_FALSE(find_executable("no-such-binary-decompeval").has_value());
  }
}
