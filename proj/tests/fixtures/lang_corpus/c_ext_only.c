static int x = 1;
int get(void){return x;}
