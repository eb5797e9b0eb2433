#include <stdint.h>
#include <stdio.h>

struct packet {
  uint8_t kind;
  uint16_t length;
  int32_t offset;
  unsigned flag_a : 1;
  unsigned flag_b : 3;
};

union word {
  uint32_t u;
  int32_t s;
  uint8_t bytes[4];
};

static int32_t packet_score(const struct packet* p) {
  int32_t score = p->kind * 100 + p->length;
  if (p->flag_a) score -= p->offset;
  return score + (int32_t)p->flag_b * 7;
}

static int64_t mixed_arith(int8_t a, uint16_t b, int32_t c) {
  int64_t r = (int64_t)a * b;
  r += (uint32_t)c >> 3;
  return r - (c >> 2);
}

static void case_struct(void) {
  struct packet ps[3] = {{1, 20, -5, 1, 2}, {2, 300, 40, 0, 7}, {9, 1, 1000, 1, 0}};
  printf("[DT-L2-01]");
  for (int i = 0; i < 3; ++i) printf(" %d", (int)packet_score(&ps[i]));
  printf("\n");
}

static void case_union(void) {
  union word w;
  w.s = -2;
  printf("[DT-L3-01] u=%u b0=%u mix=%lld mix2=%lld\n", (unsigned)w.u, (unsigned)w.bytes[0],
         (long long)mixed_arith(-7, 60000, -123456), (long long)mixed_arith(100, 3, 77));
}

int main(void) {
  case_struct();
  case_union();
  return 0;
}
