#pragma once

#include <doctest.h>

#include "error.hpp"

#define CHECK_ERROR_CODE(expr, expected)                                                                              \
    do {                                                                                                               \
        bool thrown_ = false;                                                                                          \
        try {                                                                                                          \
            (void)(expr);                                                                                              \
        } catch (const qrobust::Error &e_) {                                                                           \
            thrown_ = true;                                                                                            \
            CHECK(e_.code() == (expected));                                                                            \
        }                                                                                                              \
        CHECK_MESSAGE(thrown_, "expected an error from " #expr);                                                      \
    } while (0)
