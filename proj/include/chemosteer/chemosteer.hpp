#pragma once

#include <chemosteer/error.hpp>
#include <chemosteer/grid.hpp>
#include <chemosteer/field.hpp>
#include <chemosteer/tridiagonal.hpp>
#include <chemosteer/elliptic.hpp>
#include <chemosteer/parabolic.hpp>
#include <chemosteer/carleman.hpp>
#include <chemosteer/hum.hpp>
#include <chemosteer/dense_oracle.hpp>
#include <chemosteer/fixed_point.hpp>
#include <chemosteer/diagnostics.hpp>
#include <chemosteer/config.hpp>
#include <chemosteer/io.hpp>
#include <chemosteer/runner.hpp>
#include <chemosteer/selftest.hpp>
