/* no build instructions in this file */
#include <stdio.h>
int main(void) { puts("x"); return 0; }
