#include "halfphys/metrics.hpp"

#include <algorithm>
#include <limits>

#include "halfphys/collision.hpp"
#include "halfphys/errors.hpp"

namespace hp {

namespace {

void require_matching(const Trajectory& traj, const MotionSequence& seq,
                      const ArticulatedBodySpec& spec) {
  if (static_cast<int>(traj.frames.size()) != seq.frame_count())
    throw ConfigError("metrics: trajectory and reference frame counts differ");
  if (seq.joint_count != spec.joint_count())
    throw ConfigError("metrics: reference joint count does not match the body");
  for (const SimState& st : traj.frames)
    if (static_cast<int>(st.link_poses.size()) != spec.link_count())
      throw ConfigError("metrics: trajectory link count does not match the body");
}

// shared by the global and root-relative variants; `local` subtracts the
// respective root positions so a rigid world offset cancels out
Real mean_link_error(const Trajectory& traj, const MotionSequence& seq,
                     const ArticulatedBodySpec& spec, bool local) {
  require_matching(traj, seq, spec);
  if (traj.frames.empty() || spec.link_count() == 0) return 0;

  Real total = 0;
  for (size_t f = 0; f < traj.frames.size(); ++f) {
    const MotionFrame& ref = seq.frames[f];
    std::vector<Pose> want = forward_kinematics(spec, {ref.root, ref.joints});
    const std::vector<Pose>& got = traj.frames[f].link_poses;
    Real frame = 0;
    for (int i = 0; i < spec.link_count(); ++i) {
      Vec3 err = got[i].pos - want[i].pos;
      if (local) err -= got[0].pos - want[0].pos;
      frame += norm(err);
    }
    total += frame / spec.link_count();
  }
  return total / traj.frames.size();
}

}  // namespace

Real mpjpe_global(const Trajectory& traj, const MotionSequence& seq,
                  const ArticulatedBodySpec& spec) {
  return mean_link_error(traj, seq, spec, false);
}

Real mpjpe_local(const Trajectory& traj, const MotionSequence& seq,
                 const ArticulatedBodySpec& spec) {
  return mean_link_error(traj, seq, spec, true);
}

bool success(const Trajectory& traj, const MotionSequence& seq) {
  int frames = std::min(static_cast<int>(traj.frames.size()), seq.frame_count());
  int low_run = 0;
  for (int f = 0; f < frames; ++f) {
    if (traj.frames[f].link_poses.empty()) continue;
    Real pelvis = traj.frames[f].link_poses[0].pos.z;
    if (pelvis < 0.3 * seq.frames[f].root.pos.z) {
      if (++low_run >= 10) return false;
    } else {
      low_run = 0;
    }
  }
  return true;
}

PenetrationStats penetration_stats(const Trajectory& traj,
                                   const ArticulatedBodySpec& spec,
                                   const std::vector<StaticCollider>& statics,
                                   int samples_per_link) {
  if (samples_per_link < 16)
    throw ConfigError("metrics: need at least 16 surface samples per link");

  // probe points in link frames, reused across frames
  std::vector<int> probed;
  std::vector<std::vector<Vec3>> local_points;
  for (int i = 0; i < spec.link_count(); ++i) {
    if (!spec.links[i].collision_enabled) continue;
    probed.push_back(i);
    local_points.push_back(sample_surface_points(spec.links[i].shape, samples_per_link));
  }

  PenetrationStats out;
  if (probed.empty() || statics.empty() || traj.frames.empty()) return out;

  Real rate_sum = 0;
  Real depth_sum = 0;
  for (const SimState& st : traj.frames) {
    if (static_cast<int>(st.link_poses.size()) != spec.link_count())
      throw ConfigError("metrics: trajectory link count does not match the body");
    long hits = 0;
    long total = 0;
    Real deepest = 0;
    for (size_t k = 0; k < probed.size(); ++k) {
      const Pose& pose = st.link_poses[probed[k]];
      for (const Vec3& p : local_points[k]) {
        Vec3 world = pose.pos + rotate(pose.rot, p);
        Real sd = std::numeric_limits<Real>::infinity();
        for (const StaticCollider& sc : statics)
          sd = std::min(sd, signed_distance(sc.shape, sc.pose, world));
        ++total;
        if (sd < 0) {
          ++hits;
          deepest = std::max(deepest, -sd);
        }
      }
    }
    rate_sum += static_cast<Real>(hits) / static_cast<Real>(total);
    depth_sum += deepest;
    out.depth_max = std::max(out.depth_max, deepest);
  }
  out.pene_rate = rate_sum / traj.frames.size();
  out.depth_mean = depth_sum / traj.frames.size();
  return out;
}

MetricsReport compute_metrics(const Trajectory& traj, const MotionSequence& seq,
                              const ArticulatedBodySpec& spec,
                              const std::vector<StaticCollider>& statics,
                              int samples_per_link) {
  MetricsReport rep;
  rep.mpjpe_g = mpjpe_global(traj, seq, spec) * 1000.0;
  rep.mpjpe = mpjpe_local(traj, seq, spec) * 1000.0;
  rep.success = success(traj, seq);
  PenetrationStats pen = penetration_stats(traj, spec, statics, samples_per_link);
  rep.pene_rate = pen.pene_rate * 100.0;
  rep.depth_mean = pen.depth_mean * 1000.0;
  rep.depth_max = pen.depth_max * 1000.0;
  rep.frames = static_cast<int>(traj.frames.size());
  return rep;
}

Trajectory kinematic_replay(const ArticulatedBodySpec& spec,
                            const MotionSequence& seq, const SceneSpec& scene) {
  if (seq.joint_count != spec.joint_count())
    throw ConfigError("metrics: reference joint count does not match the body");

  Trajectory traj;
  traj.object_names.reserve(scene.objects.size());
  for (const RigidObjectSpec& obj : scene.objects) traj.object_names.push_back(obj.name);

  traj.frames.reserve(seq.frames.size());
  for (int f = 0; f < seq.frame_count(); ++f) {
    SimState st;
    st.frame = f;
    st.time = f * seq.dt();
    st.joint_state = {seq.frames[f].root, seq.frames[f].joints};
    st.link_poses = forward_kinematics(spec, st.joint_state);
    st.link_velocities.assign(spec.link_count(), {});
    st.anchor_residual = 0;
    st.objects.reserve(scene.objects.size());
    for (const RigidObjectSpec& obj : scene.objects)
      st.objects.push_back({obj.initial_pose, {}, {}});
    traj.frames.push_back(std::move(st));
  }
  return traj;
}

}  // namespace hp
