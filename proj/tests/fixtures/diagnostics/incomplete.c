struct opaque;
int main(void) {
    struct opaque obj;
    return 0;
}
