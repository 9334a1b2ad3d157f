#pragma once

#include <optional>

#include "folqr/model.hpp"

namespace folqr::freqdom {

// Source of the loop/perturbation transfer L(s).
//   return_ratio — L is the loop transfer K*(resolvent)^{-1}*B at the plant
//                  input, recomputed from the current design (frequency-domain
//                  use only; it has no standalone realization to co-integrate).
//   external_tf  — L is a fixed transfer function, evaluated directly in the
//                  frequency domain and realized in state space for
//                  time-domain co-integration.
enum class PerturbationKind { return_ratio, external_tf };

struct PerturbationSpec {
  PerturbationKind kind = PerturbationKind::return_ratio;
  std::optional<model::FractionalTransferFunction> tf;  // present iff external_tf
  bool at_output = false;  // external_tf insertion point: plant input (default) or output

  static PerturbationSpec return_ratio() { return {}; }
  static PerturbationSpec external(model::FractionalTransferFunction f, bool at_output = false) {
    PerturbationSpec spec;
    spec.kind = PerturbationKind::external_tf;
    spec.tf = std::move(f);
    spec.at_output = at_output;
    return spec;
  }
};

}  // namespace folqr::freqdom
