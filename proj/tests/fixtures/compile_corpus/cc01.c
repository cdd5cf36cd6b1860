// gcc cc01.c -o cc01 -lpthread
#include <stdio.h>
int main(void) { return 0; }
