#include "cli.hpp"

#include <cstdlib>
#include <iostream>

int main(int argc, char** argv) {
  using namespace panelgwas;
  try {
    const auto inv = cli::parse_invocation(std::vector<std::string>(argv, argv + argc), std::getenv("PANELGWAS_THREADS"));
    return cli::execute(inv);
  } catch (const cli::UsageError& e) {
    std::cerr << "usage error: " << e.what() << "\nrun with --help for the list of flags\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
}
