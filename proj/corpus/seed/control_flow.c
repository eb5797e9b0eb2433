#include <stdio.h>

int nested_if_deep(int a, int b, int c, int d, int e) {
  if (a > 0) {
    if (b > 0) {
      if (c > 0) {
        if (d > 0) {
          if (e > 0) return 5;
          return 4;
        }
        return 3;
      }
      return 2;
    }
    return 1;
  }
  return 0;
}

static int classify_char(int ch) {
  switch (ch) {
    case 'a': case 'e': case 'i': case 'o': case 'u': return 1;
    case ' ': return 2;
    case '0': case '1': case '2': case '3': case '4':
    case '5': case '6': case '7': case '8': case '9': return 3;
    default: return 0;
  }
}

static int collatz_steps(unsigned n) {
  int steps = 0;
  while (n != 1) {
    n = (n & 1) ? 3 * n + 1 : n / 2;
    ++steps;
  }
  return steps;
}

static void case_nested(void) {
  static const int in[][5] = {{1, 2, 3, 4, 5}, {-1, 2, 3, 4, 5}, {1, -2, 3, 4, 5}, {1, 2, -3, 4, 5},
                              {1, 2, 3, -4, 5}, {1, 2, 3, 4, -5}, {7, 7, 0, 7, 7}, {-9, -9, -9, -9, -9}};
  printf("[CF-L3-01]");
  for (unsigned i = 0; i < sizeof in / sizeof in[0]; ++i)
    printf(" %d", nested_if_deep(in[i][0], in[i][1], in[i][2], in[i][3], in[i][4]));
  printf("\n");
}

static void case_switch(void) {
  const char* text = "hello world 2024 io";
  int counts[4] = {0, 0, 0, 0};
  for (const char* p = text; *p; ++p) counts[classify_char(*p)]++;
  printf("[CF-L1-01] other=%d vowel=%d space=%d digit=%d\n", counts[0], counts[1], counts[2], counts[3]);
}

static void case_loop(void) {
  int total = 0;
  for (unsigned n = 1; n <= 30; ++n) total += collatz_steps(n);
  printf("[CF-L2-01] collatz_total=%d c27=%d\n", total, collatz_steps(27));
}

int main(void) {
  case_switch();
  case_loop();
  case_nested();
  return 0;
}
