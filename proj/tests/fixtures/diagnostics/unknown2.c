int consume(byte_t value);
static word_t table[4];
int main(void) { return 0; }
