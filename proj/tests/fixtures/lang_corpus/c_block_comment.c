/* local helper */
#include <unistd.h>
int main(){return 1;}
