#pragma once

namespace hybrid {

// Selects the OpenMP kernel or its serial reference. Both produce identical
// results; the serial path exists for tests and benchmarks.
enum class Exec { serial, parallel };

}  // namespace hybrid
