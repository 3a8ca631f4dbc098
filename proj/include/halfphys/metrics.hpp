#pragma once

// Scoring a simulated trajectory against its kinematic reference: tracking
// error, fall detection, and scene penetration measured through surface
// sample probes.

#include <vector>

#include "halfphys/dynamics.hpp"

namespace hp {

struct MetricsReport {
  Real mpjpe_g = 0;      //!< mm, mean link position error, world frame
  Real mpjpe = 0;        //!< mm, same but root-relative
  bool success = true;   //!< false once the pelvis spends 10 straight frames
                         //!< below 30% of its target height
  Real pene_rate = 0;    //!< % of surface samples inside static geometry
  Real depth_mean = 0;   //!< mm, per-frame max penetration averaged over frames
  Real depth_max = 0;    //!< mm, worst penetration anywhere in the sequence
  int frames = 0;
};

// mean over links and frames of the world-space position error, meters;
// trajectory and sequence must have matching lengths
Real mpjpe_global(const Trajectory& traj, const MotionSequence& seq,
                  const ArticulatedBodySpec& spec);

// same with every link expressed relative to its root link
Real mpjpe_local(const Trajectory& traj, const MotionSequence& seq,
                 const ArticulatedBodySpec& spec);

// fall rule described on MetricsReport::success
bool success(const Trajectory& traj, const MotionSequence& seq);

struct PenetrationStats {
  Real pene_rate = 0;   //!< fraction in [0,1]
  Real depth_mean = 0;  //!< meters
  Real depth_max = 0;   //!< meters
};

// Probes `samples_per_link` surface points on every collision-enabled link
// against every static collider, all frames. A sample counts as penetrating
// when its signed distance goes negative; per-frame depth is the deepest
// sample that frame (0 when none).
PenetrationStats penetration_stats(const Trajectory& traj,
                                   const ArticulatedBodySpec& spec,
                                   const std::vector<StaticCollider>& statics,
                                   int samples_per_link = 64);

// the full report; percentages and millimeters as stored in MetricsReport
MetricsReport compute_metrics(const Trajectory& traj, const MotionSequence& seq,
                              const ArticulatedBodySpec& spec,
                              const std::vector<StaticCollider>& statics,
                              int samples_per_link = 64);

// trajectory a pure kinematic replay would produce: forward kinematics of
// every reference frame, zero velocities, objects pinned at their spawn pose
Trajectory kinematic_replay(const ArticulatedBodySpec& spec,
                            const MotionSequence& seq, const SceneSpec& scene);

}  // namespace hp
