// Fit the explainable model on the bundled fixture and query it.
//
//   ./quickstart [dataset.csv]

#include <iostream>

#include "fuzzeval/fuzzeval.hpp"

int main(int argc, char** argv) {
  using namespace fuzzeval;
  try {
    const Dataset data = argc > 1 ? load_dataset(argv[1]) : fixture_dataset();
    std::cout << data.size() << " rows, " << data.fuzzers().size() << " fuzzers, " << data.programs().size()
              << " programs\n";

    BootstrapSpec boot;
    boot.replicates = 500;
    boot.seed = 42;
    const auto spec = default_design_spec(data);
    const auto model = fit_explainable_model(data, spec, boot);

    std::cout << "R2 " << model.fit.r2 << "\n";
    write_csv(model.ci, std::cout);

    // Where does each fuzzer stand on a large program with a rich corpus?
    const std::map<PropertyKey, double> at{{keys::init_coverage, 20.0}, {keys::program_text_bytes, 10.0}};
    for (const auto& f : model.fuzzers) std::cout << f << ": predicted rank " << predict_rank(model, f, at) << "\n";
  } catch (const Error& e) {
    std::cerr << e.what() << "\n";
    return 1;
  }
  return 0;
}
