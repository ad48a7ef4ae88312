#include "lsc/world.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <numbers>
#include <random>
#include <set>
#include <sstream>
#include <stdexcept>

#include <nlohmann/json.hpp>

#include "lsc/errors.hpp"

namespace lsc {

namespace {

using nlohmann::json;

constexpr double kDegToRad = std::numbers::pi / 180.0;

// World coordinates live on a 2^-20 m grid so that sums and differences of
// coordinates are exact and repeated segments have bit-identical vectors.
double snap(double x) { return std::ldexp(std::nearbyint(std::ldexp(x, 20)), -20); }
Vec3 snap(const Vec3& v) { return {snap(v.x()), snap(v.y()), snap(v.z())}; }

Vec3 left_normal(const Vec3& dir) { return Vec3(-dir.y(), dir.x(), 0.0); }

struct Leg {
  Vec3 start;
  Vec3 dir;  // unit, horizontal
  double heading;
};

std::vector<Leg> corridor_legs(const WorldSpec& spec) {
  const int n_legs = spec.n_turns + 1;
  const double leg_len = spec.corridor_length / n_legs;
  std::vector<Leg> legs;
  Vec3 start(0.0, 0.0, 0.0);
  for (int i = 0; i < n_legs; ++i) {
    const double heading = i * spec.turn_angle * kDegToRad;
    const Vec3 dir(std::cos(heading), std::sin(heading), 0.0);
    legs.push_back({start, dir, heading});
    start += leg_len * dir;
  }
  return legs;
}

// Piecewise centerline: straight runs joined by circular arcs.
struct PathPiece {
  double length;
  bool is_arc;
  Vec3 origin;        // line start or arc center
  Vec3 dir;           // line direction
  double radius;      // arc only
  double start_angle; // arc only, polar angle of the start point around the center
  double sweep;       // arc only, signed
  double heading0;    // heading at the piece start
};

std::vector<PathPiece> centerline(const WorldSpec& spec, const std::vector<Leg>& legs) {
  const double leg_len = spec.corridor_length / static_cast<double>(legs.size());
  const double turn = spec.turn_angle * kDegToRad;
  const double half_tan = std::tan(0.5 * std::abs(turn));
  const double radius = spec.n_turns > 0 ? std::min(1.0, 0.45 * leg_len / half_tan) : 0.0;
  const double tangent = radius * half_tan;

  std::vector<PathPiece> pieces;
  for (std::size_t i = 0; i < legs.size(); ++i) {
    const Leg& leg = legs[i];
    const double trim_front = i > 0 ? tangent : 0.0;
    const double trim_back = i + 1 < legs.size() ? tangent : 0.0;
    pieces.push_back({leg_len - trim_front - trim_back, false, leg.start + trim_front * leg.dir,
                      leg.dir, 0.0, 0.0, 0.0, leg.heading});
    if (i + 1 < legs.size()) {
      const Vec3 arc_start = leg.start + (leg_len - tangent) * leg.dir;
      const double side = turn > 0 ? 1.0 : -1.0;
      const Vec3 center = arc_start + side * radius * left_normal(leg.dir);
      const Vec3 rel = arc_start - center;
      pieces.push_back({radius * std::abs(turn), true, center, Vec3::Zero(), radius,
                        std::atan2(rel.y(), rel.x()), turn, leg.heading});
    }
  }
  return pieces;
}

std::vector<StampedPose> walk(const WorldSpec& spec, const std::vector<PathPiece>& pieces) {
  double total = 0.0;
  for (const auto& p : pieces) total += p.length;
  const double step = spec.walk_speed / kFrameRate;
  const auto n_frames = static_cast<std::size_t>(std::floor(total / step + 1e-9)) + 1;

  std::vector<StampedPose> out;
  out.reserve(n_frames);
  std::size_t piece = 0;
  double piece_start = 0.0;
  for (std::size_t k = 0; k < n_frames; ++k) {
    const double s = static_cast<double>(k) * step;
    while (piece + 1 < pieces.size() && s > piece_start + pieces[piece].length) {
      piece_start += pieces[piece].length;
      ++piece;
    }
    const PathPiece& pp = pieces[piece];
    const double u = std::clamp(s - piece_start, 0.0, pp.length);
    Vec3 pos;
    double heading;
    if (pp.is_arc) {
      const double frac = pp.length > 0.0 ? u / pp.length : 0.0;
      const double ang = pp.start_angle + frac * pp.sweep;
      pos = pp.origin + pp.radius * Vec3(std::cos(ang), std::sin(ang), 0.0);
      heading = pp.heading0 + frac * pp.sweep;
    } else {
      pos = pp.origin + u * pp.dir;
      heading = pp.heading0;
    }
    pos.z() = spec.camera_height;
    out.push_back({static_cast<double>(k) / kFrameRate, Pose{Rotation::about_z(heading), pos}});
  }
  return out;
}

double min_sign_distance(const Vec3& v, const Vec3& c) {
  return std::min((v - c).norm(), (v + c).norm());
}

}  // namespace

void WorldSpec::validate() const {
  auto positive = [](double v, const char* name) {
    if (!(std::isfinite(v) && v > 0.0)) {
      throw std::invalid_argument(std::string(name) + " must be > 0");
    }
  };
  positive(corridor_length, "corridor_length");
  positive(door_spacing, "door_spacing");
  positive(door_height, "door_height");
  positive(door_width, "door_width");
  positive(corridor_width, "corridor_width");
  positive(camera_height, "camera_height");
  positive(walk_speed, "walk_speed");
  if (!(door_spacing < corridor_length)) {
    throw std::invalid_argument("door_spacing must be < corridor_length");
  }
  if (n_turns < 0) throw std::invalid_argument("n_turns must be >= 0");
  if (extra_unique_segments < 0) throw std::invalid_argument("extra_unique_segments must be >= 0");
  if (n_turns > 0 && !(std::abs(turn_angle) > 0.0 && std::abs(turn_angle) < 180.0)) {
    throw std::invalid_argument("turn_angle must satisfy 0 < |turn_angle| < 180");
  }
  const double leg_len = corridor_length / (n_turns + 1);
  if (!(door_width < leg_len)) throw std::invalid_argument("door_width must be < leg length");
}

void World::validate() const {
  for (std::size_t i = 0; i < segments.size(); ++i) {
    const auto& s = segments[i];
    if (!s.a.allFinite() || !s.b.allFinite()) {
      throw InvariantError("segment " + std::to_string(i) + " has non-finite endpoints");
    }
    if (!(s.vector().norm() > 0.0)) {
      throw InvariantError("segment " + std::to_string(i) + " has zero length");
    }
  }
  std::map<int, int> counts;
  for (const auto& s : segments) {
    if (s.archetype != kNoArchetype) ++counts[s.archetype];
  }
  if (std::none_of(counts.begin(), counts.end(), [](const auto& kv) { return kv.second >= 2; })) {
    throw InvariantError("world has no archetype with at least two segments");
  }
  // Trajectory timestamps are enforced by the Trajectory type itself.
}

int World::archetype_count() const {
  std::set<int> ids;
  for (const auto& s : segments) {
    if (s.archetype != kNoArchetype) ids.insert(s.archetype);
  }
  return static_cast<int>(ids.size());
}

int World::clutter_count() const {
  return static_cast<int>(std::count_if(segments.begin(), segments.end(),
                                        [](const auto& s) { return s.archetype == kNoArchetype; }));
}

bool operator==(const World& a, const World& b) {
  if (a.seed != b.seed || a.segments != b.segments) return false;
  if (a.gt_trajectory.size() != b.gt_trajectory.size()) return false;
  for (std::size_t i = 0; i < a.gt_trajectory.size(); ++i) {
    const auto& pa = a.gt_trajectory[i];
    const auto& pb = b.gt_trajectory[i];
    if (pa.timestamp != pb.timestamp || pa.pose.translation != pb.pose.translation ||
        pa.pose.rotation.quaternion().coeffs() != pb.pose.rotation.quaternion().coeffs()) {
      return false;
    }
  }
  return true;
}

World generate_corridor(const WorldSpec& spec) {
  spec.validate();
  const auto legs = corridor_legs(spec);
  const double leg_len = spec.corridor_length / static_cast<double>(legs.size());

  World world;
  world.seed = spec.rng_seed;

  const Vec3 jamb(0.0, 0.0, snap(spec.door_height));
  constexpr int kJambArchetype = 0;

  // One lintel archetype per distinct leg direction; antiparallel legs reuse the
  // stored vector with flipped orientation so repeats stay exact.
  std::vector<Vec3> lintel_vectors;
  std::vector<std::pair<int, bool>> leg_lintel;  // (archetype, flipped)
  for (const auto& leg : legs) {
    const Vec3 lv = snap(spec.door_width * leg.dir);
    int found = -1;
    bool flipped = false;
    for (std::size_t k = 0; k < lintel_vectors.size(); ++k) {
      if ((lintel_vectors[k] - lv).norm() < 1e-6) {
        found = static_cast<int>(k);
      } else if ((lintel_vectors[k] + lv).norm() < 1e-6) {
        found = static_cast<int>(k);
        flipped = true;
      }
    }
    if (found < 0) {
      found = static_cast<int>(lintel_vectors.size());
      lintel_vectors.push_back(lv);
    }
    leg_lintel.emplace_back(1 + found, flipped);
  }

  const auto n_doors = static_cast<int>(std::floor(spec.corridor_length / spec.door_spacing + 1e-9));
  for (int i = 0; i < n_doors; ++i) {
    const double s = (i + 0.5) * spec.door_spacing;
    const auto leg_idx =
        std::min(static_cast<std::size_t>(s / leg_len), legs.size() - 1);
    const Leg& leg = legs[leg_idx];
    const double u = std::clamp(s - static_cast<double>(leg_idx) * leg_len, 0.5 * spec.door_width,
                                leg_len - 0.5 * spec.door_width);
    const double wall = (i % 2 == 0) ? 1.0 : -1.0;
    const auto [lintel_id, flipped] = leg_lintel[leg_idx];
    const Vec3 lintel = flipped ? Vec3(-lintel_vectors[lintel_id - 1])
                                : lintel_vectors[lintel_id - 1];

    Vec3 bottom_left = leg.start + (u - 0.5 * spec.door_width) * leg.dir +
                       wall * 0.5 * spec.corridor_width * left_normal(leg.dir);
    bottom_left = snap(bottom_left);
    bottom_left.z() = 0.0;
    const Vec3 bottom_right = bottom_left + lintel;
    const Vec3 top_left = bottom_left + jamb;
    const Vec3 top_right = bottom_right + jamb;

    world.segments.push_back({bottom_left, top_left, kJambArchetype});
    world.segments.push_back({bottom_right, top_right, kJambArchetype});
    world.segments.push_back({top_left, top_right, lintel_id});
  }

  std::mt19937_64 rng(spec.rng_seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::normal_distribution<double> gauss(0.0, 1.0);
  std::vector<Vec3> taken = {jamb};
  taken.insert(taken.end(), lintel_vectors.begin(), lintel_vectors.end());
  int added = 0;
  int attempts = 0;
  while (added < spec.extra_unique_segments) {
    if (++attempts > 100000) throw std::runtime_error("could not place unique clutter segments");
    Vec3 dir(gauss(rng), gauss(rng), gauss(rng));
    const double length = 0.4 + 1.1 * unit(rng);
    const auto leg_idx = std::min(static_cast<std::size_t>(unit(rng) * legs.size()), legs.size() - 1);
    const double along = (0.05 + 0.9 * unit(rng)) * leg_len;
    const double wall = unit(rng) < 0.5 ? 1.0 : -1.0;
    const double height = 0.2 + 2.2 * unit(rng);
    if (dir.norm() < 1e-6) continue;
    const Vec3 v = snap(length * dir.normalized());
    const bool unique = std::all_of(taken.begin(), taken.end(), [&](const Vec3& t) {
      return min_sign_distance(v, t) > 0.1 * std::max(v.norm(), t.norm());
    });
    if (!unique || v.norm() < 0.3) continue;
    const Leg& leg = legs[leg_idx];
    Vec3 a = leg.start + along * leg.dir +
             wall * 0.45 * spec.corridor_width * left_normal(leg.dir);
    a.z() = height;
    a = snap(a);
    world.segments.push_back({a, a + v, kNoArchetype});
    taken.push_back(v);
    ++added;
  }

  world.gt_trajectory = Trajectory(walk(spec, centerline(spec, legs)));
  world.validate();
  return world;
}

namespace {

json vec_json(const Vec3& v) { return json::array({v.x(), v.y(), v.z()}); }

std::string path_of(const std::string& section, std::size_t index, const char* field) {
  return section + "[" + std::to_string(index) + "]" + (field ? std::string(".") + field : "");
}

double number_at(const json& j, const std::string& where) {
  if (!j.is_number()) throw ParseError("expected a number", 0, where);
  return j.get<double>();
}

template <int N>
Eigen::Matrix<double, N, 1> array_at(const json& j, const std::string& where) {
  if (!j.is_array() || j.size() != N) {
    throw ParseError("expected an array of " + std::to_string(N) + " numbers at " + where, 0,
                     where);
  }
  Eigen::Matrix<double, N, 1> out;
  for (int i = 0; i < N; ++i) out[i] = number_at(j[i], where);
  return out;
}

const json& member(const json& obj, const char* key, const std::string& where) {
  auto it = obj.find(key);
  if (it == obj.end()) {
    const std::string field = where.empty() ? key : where + "." + key;
    throw ParseError("missing field '" + field + "'", 0, field);
  }
  return *it;
}

int line_of_offset(const std::string& text, std::size_t offset) {
  offset = std::min(offset, text.size());
  return 1 + static_cast<int>(std::count(text.begin(), text.begin() + offset, '\n'));
}

}  // namespace

std::string world_to_json(const World& w) {
  json segs = json::array();
  for (const auto& s : w.segments) {
    segs.push_back({{"a", vec_json(s.a)}, {"b", vec_json(s.b)}, {"archetype", s.archetype}});
  }
  json traj = json::array();
  for (const auto& sp : w.gt_trajectory) {
    const auto& q = sp.pose.rotation.quaternion();
    traj.push_back({{"t", sp.timestamp},
                    {"q", json::array({q.w(), q.x(), q.y(), q.z()})},
                    {"p", vec_json(sp.pose.translation)}});
  }
  json root;
  root["segments"] = std::move(segs);
  root["trajectory"] = std::move(traj);
  root["seed"] = w.seed;
  return root.dump(1) + "\n";
}

World world_from_json(const std::string& text) {
  static constexpr const char* kSections[] = {"segments", "trajectory", "seed"};
  // Track which top-level sections were fully read so truncation can be reported by name.
  std::set<std::string> complete;
  std::string current;
  json::parser_callback_t track = [&](int depth, json::parse_event_t event, json& parsed) {
    if (depth == 1 && event == json::parse_event_t::key) {
      current = parsed.get<std::string>();
    } else if (depth == 1 && (event == json::parse_event_t::value ||
                              event == json::parse_event_t::array_end ||
                              event == json::parse_event_t::object_end)) {
      complete.insert(current);
    }
    return true;
  };

  json root;
  try {
    root = json::parse(text, track);
  } catch (const json::parse_error& e) {
    const int line = line_of_offset(text, e.byte > 0 ? e.byte - 1 : 0);
    for (const char* section : kSections) {
      if (!complete.count(section)) {
        throw ParseError(std::string("world file truncated or malformed: section '") + section +
                             "' missing or incomplete",
                         line, section);
      }
    }
    throw ParseError(std::string("world file is not valid JSON: ") + e.what(), line);
  }
  if (!root.is_object()) throw ParseError("world file must contain a JSON object", 1);

  World w;
  const json& segs = member(root, "segments", "");
  if (!segs.is_array()) throw ParseError("'segments' must be an array", 0, "segments");
  for (std::size_t i = 0; i < segs.size(); ++i) {
    const json& s = segs[i];
    const std::string where = path_of("segments", i, nullptr);
    if (!s.is_object()) throw ParseError("expected an object at " + where, 0, where);
    WorldSegment seg;
    seg.a = array_at<3>(member(s, "a", where), path_of("segments", i, "a"));
    seg.b = array_at<3>(member(s, "b", where), path_of("segments", i, "b"));
    const json& arch = member(s, "archetype", where);
    if (!arch.is_number_integer()) {
      throw ParseError("archetype must be an integer", 0, path_of("segments", i, "archetype"));
    }
    seg.archetype = arch.get<int>();
    w.segments.push_back(seg);
  }

  const json& traj = member(root, "trajectory", "");
  if (!traj.is_array()) throw ParseError("'trajectory' must be an array", 0, "trajectory");
  std::vector<StampedPose> poses;
  for (std::size_t i = 0; i < traj.size(); ++i) {
    const json& p = traj[i];
    const std::string where = path_of("trajectory", i, nullptr);
    if (!p.is_object()) throw ParseError("expected an object at " + where, 0, where);
    const double t = number_at(member(p, "t", where), path_of("trajectory", i, "t"));
    const auto q = array_at<4>(member(p, "q", where), path_of("trajectory", i, "q"));
    const auto pos = array_at<3>(member(p, "p", where), path_of("trajectory", i, "p"));
    Rotation r;
    try {
      r = Rotation::from_quaternion(Eigen::Quaterniond(q[0], q[1], q[2], q[3]));
    } catch (const std::invalid_argument& e) {
      throw ParseError(e.what(), 0, path_of("trajectory", i, "q"));
    }
    if (!poses.empty() && !(t > poses.back().timestamp)) {
      throw InvariantError("trajectory timestamps not strictly increasing at " +
                           path_of("trajectory", i, "t"));
    }
    poses.push_back({t, Pose{r, pos}});
  }
  w.gt_trajectory = Trajectory(std::move(poses));

  const json& seed = member(root, "seed", "");
  if (!seed.is_number_unsigned() && !(seed.is_number_integer() && seed.get<std::int64_t>() >= 0)) {
    throw ParseError("seed must be a non-negative integer", 0, "seed");
  }
  w.seed = seed.get<std::uint64_t>();
  w.validate();
  return w;
}

void world_to_file(const World& w, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot open " + path.string() + " for writing");
  out << world_to_json(w);
  if (!out) throw std::runtime_error("write failed: " + path.string());
}

World world_from_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return world_from_json(ss.str());
}

}  // namespace lsc
