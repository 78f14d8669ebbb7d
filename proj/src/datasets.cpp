#include <ksm/datasets.hpp>
#include <ksm/errors.hpp>

namespace ksm {

namespace {

FanoPolytope interval() { return make_fano({{-1}, {1}}); }

}  // namespace

std::vector<std::string> builtin_dataset_names() { return {"Z1", "Z2", "P2-fiber", "product"}; }

KSMData builtin_dataset(const std::string& name) {
  KSMData d;
  d.label = name;
  if (name == "Z1") {
    d.n = 1;
    d.l = 1;
    d.mu = {{Rational(1, 2)}};
    d.polytope = interval();
  } else if (name == "Z2") {
    d.n = 2;
    d.l = 1;
    d.mu = {{Rational(2, 3)}, {Rational(2, 3)}};
    d.polytope = interval();
  } else if (name == "P2-fiber") {
    d.n = 0;
    d.l = 2;
    d.polytope = make_fano({{1, 0}, {0, 1}, {-1, -1}});
  } else if (name == "product") {
    d.n = 0;
    d.l = 1;
    d.polytope = interval();
  } else {
    throw InvalidInput("unknown dataset '" + name + "'");
  }
  return d;
}

}  // namespace ksm
