// leading comment
int a = 1; // trailing
