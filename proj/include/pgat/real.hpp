#pragma once

namespace pgat {

#ifdef PGAT_SINGLE_PRECISION
using Real = float;
#else
using Real = double;
#endif

}  // namespace pgat
