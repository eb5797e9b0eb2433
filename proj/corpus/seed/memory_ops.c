#include <stdio.h>
#include <stdlib.h>
#include <string.h>

static int* make_squares(int n) {
  int* buf = malloc(sizeof(int) * (size_t)n);
  if (!buf) return NULL;
  for (int i = 0; i < n; ++i) buf[i] = i * i;
  return buf;
}

static void rotate_left(char* s, size_t k) {
  size_t n = strlen(s);
  if (n == 0) return;
  k %= n;
  char tmp[64];
  memcpy(tmp, s, k);
  memmove(s, s + k, n - k);
  memcpy(s + n - k, tmp, k);
}

static void case_heap(void) {
  int* sq = make_squares(12);
  long sum = 0;
  for (int* p = sq; p < sq + 12; ++p) sum += *p;
  printf("[MO-L1-01] sum=%ld last=%d\n", sum, sq[11]);
  free(sq);
}

static void case_overlap(void) {
  char s[32] = "decompilation";
  rotate_left(s, 5);
  char t[32] = "abcdef";
  memmove(t + 2, t, 4);
  printf("[MO-L2-01] %s %s\n", s, t);
}

int main(void) {
  case_heap();
  case_overlap();
  return 0;
}
