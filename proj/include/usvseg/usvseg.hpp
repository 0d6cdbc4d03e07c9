#pragma once

#include "usvseg/detector.hpp"
#include "usvseg/em.hpp"
#include "usvseg/evaluation.hpp"
#include "usvseg/geometry.hpp"
#include "usvseg/imaging.hpp"
#include "usvseg/io.hpp"
#include "usvseg/mixture.hpp"
#include "usvseg/prior_learn.hpp"
#include "usvseg/scene_synth.hpp"
