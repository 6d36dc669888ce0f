#define MYWD 4
#define MYTASK 10
#define HEARTBEAT 150
#define CONTROLLER 20
