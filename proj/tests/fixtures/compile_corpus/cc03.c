/*
 * local helper
 *
 * $ gcc cc03.c -o helper -Wl,--no-as-needed -ldl
 *
 * tested on kernel 4.4
 */
#include <unistd.h>
int main(void) { return 0; }
