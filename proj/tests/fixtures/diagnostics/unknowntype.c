int main(void) {
    uint32_t counter = 0;
    return (int)counter;
}
