#include <stdarg.h>
#include <stdio.h>

static long ackermann_small(long m, long n) {
  if (m == 0) return n + 1;
  if (n == 0) return ackermann_small(m - 1, 1);
  return ackermann_small(m - 1, ackermann_small(m, n - 1));
}

static int sum_ints(int count, ...) {
  va_list ap;
  va_start(ap, count);
  int total = 0;
  for (int i = 0; i < count; ++i) total += va_arg(ap, int);
  va_end(ap);
  return total;
}

static int twice(int x) { return 2 * x; }
static int negate(int x) { return -x; }
static int apply_all(int (*const* fns)(int), int n, int seed) {
  for (int i = 0; i < n; ++i) seed = fns[i](seed);
  return seed;
}

static void case_recursion(void) {
  printf("[FC-L2-01] a23=%ld a32=%ld\n", ackermann_small(2, 3), ackermann_small(3, 2));
}

static void case_indirect(void) {
  int (*const fns[])(int) = {twice, negate, twice, twice};
  printf("[FC-L3-01] va=%d chain=%d\n", sum_ints(5, 1, -2, 3, -4, 50), apply_all(fns, 4, 11));
}

int main(void) {
  case_recursion();
  case_indirect();
  return 0;
}
