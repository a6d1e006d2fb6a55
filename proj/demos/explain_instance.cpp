// Library walkthrough: load a model, classify one instance, and compute
// abductive (sufficient) and contrastive (countering) explanations.
//
// Run from the repository root:
//   ./build/explain_instance [model.json] [comma,separated,instance]

#include <iostream>
#include <string>

#include "texp/explain.hpp"
#include "texp/model_io.hpp"

int main(int argc, char** argv) {
  const std::string model_path = argc > 1 ? argv[1] : "data/iris_bt.json";
  const std::string instance_csv = argc > 2 ? argv[2] : "5.1,3.5,1.4,0.2";

  const texp::Ensemble model = texp::load_model_file(model_path);
  const texp::Instance v = texp::parse_instance(model, instance_csv);

  const int cls = texp::predict(model, v);
  std::cout << "instance " << texp::instance_to_string(model, v) << " -> class " << cls << " ("
            << model.classes[cls] << ")\nscores:";
  for (const texp::Rat& s : texp::class_scores(model, v)) std::cout << " " << s.to_string();
  std::cout << "\n\n";

  // One session per (model, instance): encodings and learned clauses are
  // shared across every query below.
  texp::XpSession session(model, v);

  const auto print = [&](const texp::Explanation& x) {
    std::cout << (x.kind == texp::XpKind::axp ? "  sufficient " : "  countering ") << "{";
    for (std::size_t i = 0; i < x.features.size(); ++i)
      std::cout << (i ? ", " : "") << model.features[x.features[i]].name;
    std::cout << "}";
    if (x.witness.has_value())
      std::cout << "  witness " << texp::instance_to_string(model, *x.witness) << " -> class "
                << texp::predict(model, *x.witness);
    std::cout << "\n";
  };

  std::cout << "one minimal explanation of each kind:\n";
  print(session.find_axp());
  if (const auto cxp = session.find_cxp(); cxp.has_value())
    print(*cxp);
  else
    std::cout << "  countering: none (the prediction cannot change)\n";

  std::cout << "\nglobally smallest:\n";
  print(session.smallest_axp());
  if (const auto cxp = session.smallest_cxp(); cxp.has_value()) print(*cxp);

  std::cout << "\nall explanations (the two families are hitting-set duals):\n";
  for (const texp::Explanation& x : session.enumerate()) print(x);

  const texp::SessionStats& st = session.stats();
  std::cout << "\nqueries answered: " << st.entails_calls << " entailment, " << st.sat_solves
            << " propositional, " << st.maxsat_checks << " optimization\n";
  return 0;
}
