#include <stdio.h>
int main(void) {
    printf("gcc whatever.c -o decoy\n");
    return 0;
}
