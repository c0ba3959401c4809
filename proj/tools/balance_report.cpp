// Regenerates the tie-balancing comparison report.  With no arguments the
// markdown goes to stdout; with a path it is written there.

#include <fstream>
#include <iostream>

#include <splitflow/reporting/balance_variants.hpp>

int main(int argc, char** argv) {
  if (argc > 2) {
    std::cerr << "usage: balance_report [output.md]\n";
    return 1;
  }
  if (argc == 2) {
    std::ofstream f(argv[1]);
    if (!f.good()) {
      std::cerr << "error: cannot write " << argv[1] << "\n";
      return 1;
    }
    splitflow::reporting::write_balance_variants_report(f);
  } else {
    splitflow::reporting::write_balance_variants_report(std::cout);
  }
  return 0;
}
