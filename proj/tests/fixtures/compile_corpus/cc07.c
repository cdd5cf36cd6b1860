/*
 * usage:
 *   $ gcc cc07.c -o cc07
 *   $ ./cc07 target
 */
#include <stdio.h>
int main(void) { return 0; }
