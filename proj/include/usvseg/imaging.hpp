#pragma once

#include "usvseg/imaging/colorspace.hpp"
#include "usvseg/imaging/convolve.hpp"
#include "usvseg/imaging/features.hpp"
#include "usvseg/imaging/image.hpp"
#include "usvseg/imaging/pnm.hpp"
#include "usvseg/imaging/resize.hpp"
