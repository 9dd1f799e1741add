#pragma once

// httplib pulls in <resolv.h>, whose `_res` macro collides with Eigen's
// internal parameter names. Undefine it after the include.

#include <httplib.h>

#ifdef _res
#undef _res
#endif
