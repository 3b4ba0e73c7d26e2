#pragma once

// libtorch's logging header defines CHECK and friends; doctest must own them.
#undef CHECK
#undef CHECK_EQ
#undef CHECK_NE
#undef CHECK_LT
#undef CHECK_LE
#undef CHECK_GT
#undef CHECK_GE
#undef CHECK_FALSE

#include <doctest.h>
