int compute(int a);
long compute(int a) { return a; }
int main(void) { return (int)compute(1); }
