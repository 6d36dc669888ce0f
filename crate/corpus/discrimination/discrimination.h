#define MYTASK 10
#define SPARE 12
#define MYGROUP 3
#define TAKEOVER 7
