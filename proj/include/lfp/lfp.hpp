#ifndef LFP_LFP_HPP_
#define LFP_LFP_HPP_

// Umbrella header: geometric false-positive rejection for LiDAR 3D vehicle
// detection, with KITTI I/O, a 40-position evaluator and a ray-casting
// simulator for synthetic ground truth.

#include "lfp/cad.hpp"
#include "lfp/classifier.hpp"
#include "lfp/errors.hpp"
#include "lfp/eval.hpp"
#include "lfp/geometry.hpp"
#include "lfp/kitti.hpp"
#include "lfp/search_area.hpp"
#include "lfp/sim.hpp"

#endif  // LFP_LFP_HPP_
