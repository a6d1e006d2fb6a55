// Model-level verification walkthrough: individual fairness with respect to
// a protected feature, and pointwise robustness under a feature-change
// budget. Both checks are exact and produce concrete witnesses on failure.
// They apply to majority-vote forests.
//
// Run from the repository root:
//   ./build/verify_model [model.json] [comma,separated,instance]

#include <iostream>
#include <string>

#include "texp/model_io.hpp"
#include "texp/verify.hpp"

int main(int argc, char** argv) {
  const std::string model_path = argc > 1 ? argv[1] : "data/iris_rfmv.json";
  const std::string instance_csv = argc > 2 ? argv[2] : "5.1,3.5,1.4,0.2";

  const texp::Ensemble model = texp::load_model_file(model_path);
  const texp::Instance v = texp::parse_instance(model, instance_csv);
  const int m = model.num_features();

  std::cout << "fairness: does any feature, taken alone as protected, ever decide the class?\n";
  for (int f = 0; f < m; ++f) {
    const texp::FairnessResult r = texp::check_fairness(model, {f});
    std::cout << "  " << model.features[f].name << ": " << (r.fair ? "fair" : "unfair");
    if (!r.fair) {
      const texp::WitnessPair& w = *r.witness;
      std::cout << "  (" << texp::instance_to_string(model, w.a) << " -> " << w.class_a
                << "  vs  " << texp::instance_to_string(model, w.b) << " -> " << w.class_b
                << ")";
    }
    std::cout << "\n";
  }

  std::cout << "\nrobustness of " << texp::instance_to_string(model, v) << " (class "
            << texp::predict(model, v) << "):\n";
  for (int delta = 0; delta <= m; ++delta) {
    const texp::RobustnessResult r = texp::check_robustness(model, v, delta);
    std::cout << "  up to " << delta << " feature change(s): "
              << (r.robust ? "robust" : "violated");
    if (!r.robust)
      std::cout << "  (" << texp::instance_to_string(model, *r.witness) << " -> class "
                << r.witness_class << ")";
    std::cout << "\n";
    if (!r.robust) break;  // larger budgets only add more adversarial room
  }
  return 0;
}
