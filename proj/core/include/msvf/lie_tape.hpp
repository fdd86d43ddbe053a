#pragma once

#include "msvf/manifold.hpp"
#include "msvf/tape.hpp"

namespace msvf::ad {

/// Exponential/logarithm kernels recorded on a tape, so gradients can flow
/// through chart transitions. Value-level branches (Taylor switches) are
/// decided from node values at record time, mirroring the double-precision
/// kernels in manifold.cpp. S2 maps take the base point as a constant.

Var so3_exp_tape(Tape& t, Var w);            // 3-vector -> 3x3 rotation
Var so3_log_tape(Tape& t, Var R);            // 3x3 rotation -> 3-vector (away from pi)
Var se2_exp_tape(Tape& t, Var v);            // [theta, x, y] -> [theta, tx, ty]
Var se2_log_tape(Tape& t, Var c);            // [theta, tx, ty] -> [theta, x, y]
std::pair<Var, Var> se3_exp_tape(Tape& t, Var v);   // 6-vector -> (R, t)
Var se3_log_tape(Tape& t, Var R, Var trans);        // (R, t) -> 6-vector

Var s2_exp_at_tape(Tape& t, const GroupElement& base, Var v2);  // 2-vector -> unit 3-vector
Var s2_log_at_tape(Tape& t, const GroupElement& base, Var p3);  // unit 3-vector -> 2-vector

}  // namespace msvf::ad
