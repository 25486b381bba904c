// Placeholder main; the experiment harness lands with the experiments module.
int main() { return 0; }
