int ratio = total / count;
int half = total/2;
