#define N 100
static char *data;

static void printLine(void)
{
    printf("%s\n", data);
}

int main() {
    char dataBuffer[N];
    char source[N];
    int m = 8;

    memset(dataBuffer, 'A', N<m?N:99);
    dataBuffer[N-1] = '\0';

    /* underwrite: data points eight bytes before the start of dataBuffer */

    data = dataBuffer - 8;

    /* fill source and copy it through the shifted pointer, clobbering
       the bytes in front of the buffer */
    memset(source, 'C', N-1);
    source[N-1] = '\0';
    memmove(data, source, N*sizeof(char));
    printLine();
    return 0;
}
