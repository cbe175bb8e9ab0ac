char c = 'x';
char nl = '\n';
char q = '\'';
