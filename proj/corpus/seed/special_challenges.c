#include <setjmp.h>
#include <stdio.h>

static jmp_buf recover_point;

static int checked_div(int a, int b) {
  if (b == 0) longjmp(recover_point, 1);
  return a / b;
}

static int guarded_sum(const int* num, const int* den, int n) {
  volatile int total = 0;
  volatile int i = 0;
  if (setjmp(recover_point)) {
    total += 1000;
    ++i;
  }
  for (; i < n; ++i) total += checked_div(num[i], den[i]);
  return total;
}

static unsigned rotl32(unsigned x, int r) { return (x << r) | (x >> (32 - r)); }

static unsigned mix_hash(const char* s) {
  unsigned h = 0x9e3779b9u;
  while (*s) h = rotl32(h ^ (unsigned char)*s++, 5) * 0x85ebca6bu;
  return h ^ (h >> 16);
}

static void case_longjmp(void) {
  const int num[] = {10, 20, 30, 40};
  const int den[] = {2, 0, 3, 0};
  printf("[SC-L4-01] total=%d\n", guarded_sum(num, den, 4));
}

static void case_bits(void) {
  printf("[SC-L5-01] h=%08x,%08x\n", mix_hash("ida"), mix_hash("ghidra"));
}

int main(void) {
  case_longjmp();
  case_bits();
  return 0;
}
