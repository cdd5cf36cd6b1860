// clang++ cc09.cpp -o poc -fno-stack-protector
#include <cstdio>
int main() { return 0; }
