#include <stdio.h>
/* revision 0 */
int main(void) {
  printf("%d\n", missing_value);
  return 0;
}
