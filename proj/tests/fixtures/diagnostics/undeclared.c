int main(void) {
    int a = 2;
    return a + missing_var;
}
