#pragma once

#include <ksm/ksm_model.hpp>

#include <string>
#include <vector>

namespace ksm {

// Built-in data: "Z1" (P(O(1) + O) over P^1), "Z2" (P(O(2) + O) over P^2),
// "P2-fiber" (n = 0 over the triangle P2) and "product" (n = 0, P = [-1, 1]).
// Throws InvalidInput for an unknown name.
KSMData builtin_dataset(const std::string& name);
std::vector<std::string> builtin_dataset_names();

}  // namespace ksm
