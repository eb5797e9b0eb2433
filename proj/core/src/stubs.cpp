#include "decompeval/repair.hpp"

#include "decompeval/util.hpp"

#include <algorithm>
#include <regex>
#include <set>
#include <sstream>

namespace decompeval {

namespace {

const std::set<std::string, std::less<>>& builtin_words() {
  static const std::set<std::string, std::less<>> words = {
      "void",     "char",      "short",    "int",      "long",      "float",     "double",   "_Bool",
      "bool",     "signed",    "unsigned", "const",    "volatile",  "size_t",    "ssize_t",  "ptrdiff_t",
      "intptr_t", "uintptr_t", "int8_t",   "int16_t",  "int32_t",   "int64_t",   "uint8_t",  "uint16_t",
      "uint32_t", "uint64_t",  "wchar_t",  "off_t",    "restrict",  "__int128",  "char16_t", "char32_t"};
  return words;
}

std::vector<std::string> identifiers(std::string_view s) {
  static const std::regex id_re(R"([A-Za-z_]\w*)");
  std::vector<std::string> out;
  const std::string str(s);
  for (auto it = std::sregex_iterator(str.begin(), str.end(), id_re); it != std::sregex_iterator(); ++it) {
    out.push_back(it->str());
  }
  return out;
}

bool is_builtin_type(std::string_view type) {
  const auto ids = identifiers(type);
  if (ids.empty()) return false;
  return std::all_of(ids.begin(), ids.end(), [](const std::string& w) { return builtin_words().count(w) > 0; });
}

std::string escape_regex(std::string_view s) {
  static const std::regex special(R"([.^$|()\[\]{}*+?\\])");
  return std::regex_replace(std::string(s), special, R"(\$&)");
}

/// Source with everything inside braces blanked out (braces and newlines kept),
/// so regexes only see file-scope text at the original offsets.
std::string top_level_text(std::string_view src) {
  std::string out(src);
  int depth = 0;
  for (char& c : out) {
    if (c == '{') {
      if (depth++ > 0) c = ' ';
    } else if (c == '}') {
      if (--depth > 0) c = ' ';
      if (depth < 0) depth = 0;
    } else if (depth > 0 && c != '\n') {
      c = ' ';
    }
  }
  return out;
}

bool defines_function(const std::string& top, const std::string& name) {
  const std::regex re("\\b" + escape_regex(name) + R"(\s*\([^;{}]*\)\s*\{)");
  return std::regex_search(top, re);
}

bool defines_object(const std::string& top, const std::string& name) {
  const std::regex re("(^|[;}\\n])(?!\\s*extern\\b)\\s*[A-Za-z_][\\w \\t\\*]*[\\s\\*]" + escape_regex(name) +
                      R"(\s*(\[[^\]]*\])?\s*(=[^;]*)?;)");
  return std::regex_search(top, re);
}

struct FunctionDecl {
  std::string return_type;
  std::string params;
};

std::optional<FunctionDecl> find_function_decl(const std::string& top, const std::string& name) {
  const std::regex re("(^|[;}\\n])\\s*((?:extern\\s+)?[A-Za-z_][\\w \\t\\*]*?[\\s\\*])" + escape_regex(name) +
                      R"(\s*\(([^()]*)\)\s*;)");
  std::smatch m;
  if (!std::regex_search(top, m, re)) return std::nullopt;
  std::string rt = trim(m[2].str());
  if (starts_with(rt, "extern")) rt = trim(rt.substr(6));
  return FunctionDecl{rt, trim(m[3].str())};
}

struct ObjectDecl {
  std::string type;
  std::string array;
};

std::optional<ObjectDecl> find_object_decl(const std::string& top, const std::string& name) {
  const std::regex re("extern\\s+([A-Za-z_][\\w \\t\\*]*?)\\s*\\b" + escape_regex(name) +
                      R"(\s*(\[[^\]]*\])?\s*;)");
  std::smatch m;
  if (!std::regex_search(top, m, re)) return std::nullopt;
  std::string type = trim(m[1].str());
  // "int *p" style: the star sticks to the name in the match above.
  return ObjectDecl{type, m[2].matched ? m[2].str() : std::string()};
}

/// Rewrites a parameter list with generated names, or nullopt when a type is
/// not builtin (and so unavailable in the stub unit).
std::optional<std::string> named_params(const std::string& params) {
  const std::string p = trim(params);
  if (p.empty() || p == "void") return std::string("void");
  std::vector<std::string> out;
  std::stringstream ss(p);
  std::string part;
  int i = 0;
  while (std::getline(ss, part, ',')) {
    std::string t = trim(part);
    if (t == "...") {
      out.push_back(t);
      continue;
    }
    if (contains(t, "[")) return std::nullopt;
    auto ids = identifiers(t);
    if (ids.empty()) return std::nullopt;
    if (!builtin_words().count(ids.back())) {
      // trailing identifier is a parameter name
      const auto pos = t.rfind(ids.back());
      t = trim(t.substr(0, pos));
    }
    if (!is_builtin_type(t)) return std::nullopt;
    out.push_back(t + " p" + std::to_string(i++));
  }
  return join(out, ", ");
}

std::string function_body(const std::string& return_type) {
  if (trim(return_type) == "void") return "{ }";
  return "{ return 0; }";
}

}  // namespace

std::vector<std::string> undefined_symbols(const std::vector<Diagnostic>& diags) {
  static const std::regex ref_re(R"(undefined reference to [`'"](.+?)['"]\s*$)");
  static const std::regex sym_re(R"(undefined symbol:?\s+[`'"]?([^`'"\s][^`'"]*?)[`'"]?\s*$)");
  std::vector<std::string> out;
  for (const auto& d : diags) {
    if (d.category != ErrorCategory::UndefinedReference) continue;
    std::smatch m;
    std::string name;
    if (std::regex_search(d.message, m, ref_re) || std::regex_search(d.message, m, sym_re)) name = m[1].str();
    if (!name.empty() && std::find(out.begin(), out.end(), name) == out.end()) out.push_back(name);
  }
  return out;
}

StubResult generate_stubs(const std::vector<std::string>& symbols, std::string_view source_text,
                          SourceLanguage lang) {
  if (symbols.empty()) throw std::invalid_argument("generate_stubs: empty symbol list");
  {
    std::set<std::string> seen;
    for (const auto& s : symbols) {
      if (!seen.insert(s).second) throw std::invalid_argument("generate_stubs: duplicate symbol " + s);
    }
  }
  const bool cxx = lang == SourceLanguage::Cxx;
  const std::string top = top_level_text(source_text);
  StubResult r;
  std::string body;

  for (const auto& sym : symbols) {
    std::string name = sym;
    std::optional<std::string> demangled_params;
    if (auto paren = sym.find('('); paren != std::string::npos) {
      name = sym.substr(0, paren);
      const auto close = sym.rfind(')');
      demangled_params = sym.substr(paren + 1, close == std::string::npos ? std::string::npos : close - paren - 1);
    }
    if (contains(name, "::") || contains(name, "<") || name.empty()) {
      r.warnings.push_back("cannot stub scoped or templated symbol " + sym);
      continue;
    }
    if (defines_function(top, name) || defines_object(top, name)) {
      r.warnings.push_back("symbol " + sym + " is already defined in the source; not stubbed");
      continue;
    }

    const std::string linkage = cxx && !demangled_params ? "extern \"C\" " : "";
    if (auto obj = find_object_decl(top, name); obj && !demangled_params) {
      if (is_builtin_type(obj->type)) {
        std::string arr = obj->array == "[]" ? "[1]" : obj->array;
        body += linkage + obj->type + " " + name + arr + ";\n";
      } else {
        body += linkage + "char " + name + "[256] __attribute__((aligned(16)));\n";
      }
      r.stubbed.push_back(sym);
      continue;
    }

    const auto decl = find_function_decl(top, name);
    std::string ret = "long";
    if (decl && is_builtin_type(decl->return_type)) ret = decl->return_type;
    std::optional<std::string> params;
    if (demangled_params) {
      params = named_params(*demangled_params);
      if (!params) {
        r.warnings.push_back("cannot stub " + sym + ": parameter types are not builtin");
        continue;
      }
    } else if (decl && is_builtin_type(decl->return_type)) {
      params = named_params(decl->params);
    }
    if (!params) params = cxx ? "..." : "";
    body += linkage + ret + " " + name + "(" + *params + ") " + function_body(ret) + "\n";
    r.stubbed.push_back(sym);
  }

  if (!r.stubbed.empty()) {
    r.text = cxx ? "#include <cstddef>\n#include <cstdint>\n#include <sys/types.h>\n"
                 : "#include <stddef.h>\n#include <stdint.h>\n#include <stdbool.h>\n#include <sys/types.h>\n";
    r.text += body;
  }
  return r;
}

namespace {

const std::set<std::string, std::less<>>& runtime_symbols() {
  static const std::set<std::string, std::less<>> names = {
      "_start", "_init", "_fini", "__libc_csu_init", "__libc_csu_fini", "__libc_start_main", "frame_dummy",
      "register_tm_clones", "deregister_tm_clones", "__do_global_dtors_aux", "__do_global_ctors_aux",
      "_init_proc", "_term_proc", "__cxa_finalize", "__stack_chk_fail", "__gmon_start__",
      "_dl_relocate_static_pie", "__assert_fail", "__errno_location", "printf", "puts", "putchar", "fprintf",
      "fputs", "fwrite", "sprintf", "snprintf", "malloc", "calloc", "realloc", "free", "memcpy", "memmove",
      "memset", "memcmp", "strlen", "strcmp", "strncmp", "strcpy", "strncpy", "strcat", "strchr", "strstr",
      "write", "read", "exit", "abort", "atoi", "strtol", "time", "rand", "srand", "abs", "qsort"};
  return names;
}

}  // namespace

std::string rename_runtime_definitions(std::string_view source, std::vector<std::string>* renamed) {
  static const std::regex def_re(R"(\b([A-Za-z_]\w*)\s*\(([^;{}()]|\([^()]*\))*\)\s*\{)");
  const std::string top = top_level_text(source);
  std::vector<std::pair<std::size_t, std::string>> hits;
  for (auto it = std::sregex_iterator(top.begin(), top.end(), def_re); it != std::sregex_iterator(); ++it) {
    const std::string name = (*it)[1].str();
    if (runtime_symbols().count(name)) hits.emplace_back(static_cast<std::size_t>((*it).position(1)), name);
  }
  std::string out(source);
  for (auto it = hits.rbegin(); it != hits.rend(); ++it) {
    out.insert(it->first, kReservedPrefix);
    if (renamed) renamed->push_back(it->second);
  }
  if (renamed) std::reverse(renamed->begin(), renamed->end());
  return out;
}

}  // namespace decompeval
