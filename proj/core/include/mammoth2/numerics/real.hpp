#pragma once

namespace m2 {

// Scalar type for all array math. The default build uses 64-bit floats so
// finite-difference gradient checks are meaningful ("test mode"); configuring
// with MAMMOTH2_REAL_FLOAT=ON switches the whole stack to 32-bit ("train mode").
#ifdef MAMMOTH2_REAL_FLOAT
using real = float;
#else
using real = double;
#endif

}  // namespace m2
