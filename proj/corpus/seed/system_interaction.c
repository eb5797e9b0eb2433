#include <stdio.h>
#include <string.h>
#include <unistd.h>

static int emit_raw(const char* text) {
  return (int)write(1, text, strlen(text));
}

static int parse_kv(const char* line, char* key, size_t key_cap, long* value) {
  const char* eq = strchr(line, '=');
  if (!eq || (size_t)(eq - line) >= key_cap) return -1;
  memcpy(key, line, (size_t)(eq - line));
  key[eq - line] = '\0';
  return sscanf(eq + 1, "%ld", value) == 1 ? 0 : -2;
}

static void case_write(void) {
  fflush(stdout);
  int n = emit_raw("[SI-L1-01] raw write ok\n");
  printf("[SI-L2-01] wrote=%d\n", n);
}

static void case_parse(void) {
  const char* lines[] = {"alpha=12", "beta=-7", "gamma", "toolongkeyname=1"};
  printf("[SI-L3-01]");
  for (int i = 0; i < 4; ++i) {
    char key[8];
    long v = 0;
    int rc = parse_kv(lines[i], key, sizeof key, &v);
    if (rc == 0) printf(" %s:%ld", key, v); else printf(" err%d", rc);
  }
  printf("\n");
}

int main(void) {
  case_write();
  case_parse();
  fflush(stdout);
  return 0;
}
