#include <stdio.h>

#define SQUARE(x) ((x) * (x))
#define CLAMP(v, lo, hi) ((v) < (lo) ? (lo) : (v) > (hi) ? (hi) : (v))
#define TYPE_TAG(x) _Generic((x), int: 1, long: 2, double: 3, default: 0)

static const unsigned char kCrcTable[16] = {0x00, 0x1d, 0x3a, 0x27, 0x74, 0x69, 0x4e, 0x53,
                                            0xe8, 0xf5, 0xd2, 0xcf, 0x9c, 0x81, 0xa6, 0xbb};

static inline unsigned char crc4_update(unsigned char crc, unsigned char nibble) {
  return (unsigned char)((crc << 4) ^ kCrcTable[((crc >> 4) ^ nibble) & 0x0f]);
}

static unsigned char crc8_of(const char* s) {
  unsigned char crc = 0;
  for (; *s; ++s) {
    crc = crc4_update(crc, (unsigned char)((unsigned char)*s >> 4));
    crc = crc4_update(crc, (unsigned char)(*s & 0x0f));
  }
  return crc;
}

static void case_macros(void) {
  int a = 7;
  printf("[CT-L1-01] sq=%d clamp=%d,%d,%d tags=%d%d%d\n", SQUARE(a + 1), CLAMP(-5, 0, 10), CLAMP(5, 0, 10),
         CLAMP(50, 0, 10), TYPE_TAG(a), TYPE_TAG(2L), TYPE_TAG(1.5));
}

static void case_tables(void) {
  printf("[CT-L2-01] crc=%u,%u\n", crc8_of("decompile"), crc8_of("benchmark"));
}

int main(void) {
  case_macros();
  case_tables();
  return 0;
}
