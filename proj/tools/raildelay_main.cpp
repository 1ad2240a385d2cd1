#include <string>
#include <vector>

#include "raildelay/app.hpp"

int main(int argc, char** argv) {
  std::vector<std::string> args(argv + 1, argv + argc);
  return raildelay::run_command(args);
}
