#ifndef AFFDYN_AFFDYN_HPP
#define AFFDYN_AFFDYN_HPP

#include "affdyn/errors.hpp"
#include "affdyn/exact.hpp"
#include "affdyn/affine.hpp"
#include "affdyn/block_shape.hpp"
#include "affdyn/matrix_functions.hpp"
#include "affdyn/normal_form.hpp"
#include "affdyn/generators.hpp"
#include "affdyn/lattice.hpp"
#include "affdyn/density.hpp"
#include "affdyn/orbit.hpp"
#include "affdyn/analysis.hpp"
#include "affdyn/io.hpp"

#endif // AFFDYN_AFFDYN_HPP
