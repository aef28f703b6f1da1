#include "irisnas/cli.hpp"

int main(int argc, char** argv)
{
    return irisnas::cli_main(argc, argv);
}
