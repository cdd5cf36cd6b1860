// build: g++ -std=c++11 cc04.cpp -o runner
#include <iostream>
int main() { return 0; }
