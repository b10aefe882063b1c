#include "textcascade/harness.hpp"

int main(int argc, char** argv) { return textcascade::run_cli(argc, argv); }
