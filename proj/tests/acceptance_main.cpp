#include <iostream>

#include "risopt/acceptance.hpp"

int main() {
  const auto results = risopt::acceptance::run_all(std::cout);
  int failed = 0;
  for (const auto& r : results) failed += r.passed ? 0 : 1;
  std::cout << (results.size() - static_cast<std::size_t>(failed)) << "/" << results.size()
            << " criteria passed" << std::endl;
  return failed == 0 ? 0 : 2;
}
