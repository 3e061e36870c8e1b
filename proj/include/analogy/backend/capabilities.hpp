#pragma once

#include <string>
#include <vector>

namespace analogy::ad {

struct Capability {
  std::string name;
  bool second_order = false;  // gradient of the gradient available
};

/// Op set the networks and losses depend on.
std::vector<Capability> required_ops();

struct ProbeResult {
  std::string name;
  double max_relative_error = 0.0;
  bool ok = false;
};

/// Checks every required op (and the second-order path) against central finite
/// differences on small random tensors. Throws std::runtime_error naming the
/// first failing op unless `throw_on_failure` is false.
std::vector<ProbeResult> probe_capabilities(bool throw_on_failure = true);

}  // namespace analogy::ad
