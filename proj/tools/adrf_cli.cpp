#include "adrf/cli.hpp"

int
main(int argc, char** argv)
{
  return adrf::cli::run(std::vector<std::string>(argv + 1, argv + argc));
}
