#include "cli.hpp"

int main(int argc, char** argv) {
  return acgan::cli::run_command(std::vector<std::string>(argv, argv + argc));
}
