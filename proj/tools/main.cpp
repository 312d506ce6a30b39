#include "ianum/harness.hpp"

int main(int argc, char** argv) { return ianum::cli(argc, argv); }
