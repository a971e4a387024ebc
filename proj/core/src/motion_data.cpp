#include "egokit/motion_data.hpp"

#include <charconv>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace egokit {

void MotionSequence::derive_cpf() {
    cpf.clear();
    cpf.reserve(root.size());
    for (std::size_t t = 0; t < root.size(); ++t) {
        cpf.push_back(cpf_pose(forward_kinematics(root[t], poses[t], shape)));
    }
}

Eigen::MatrixXd MotionSequence::states() const {
    const int total = length();
    Eigen::MatrixXd m(total, kStateDim);
    for (int t = 0; t < total; ++t) {
        MotionState state;
        for (int j = 0; j < kLocalRotationCount; ++j) {
            state.rotations6d[j] = to_rot6d(poses[t].joint_rotations[j]);
        }
        state.shape = shape.beta;
        state.contacts = contacts.row(t).transpose();
        m.row(t) = state.flatten().transpose();
    }
    return m;
}

std::vector<BodyFrame> MotionSequence::body_frames() const {
    std::vector<BodyFrame> frames;
    frames.reserve(root.size());
    for (std::size_t t = 0; t < root.size(); ++t) {
        frames.push_back(forward_kinematics(root[t], poses[t], shape));
    }
    return frames;
}

Eigen::MatrixXd label_contacts(const std::vector<BodyFrame>& frames) {
    const int total = static_cast<int>(frames.size());
    Eigen::MatrixXd contacts = Eigen::MatrixXd::Zero(total, kBodyJointCount);
    for (int t = 0; t < total; ++t) {
        const int other = t == 0 ? std::min(1, total - 1) : t - 1;
        for (int j = 1; j <= kBodyJointCount; ++j) {
            const Vec3& p = frames[t].joints_world[j].position;
            const double displacement =
                (p - frames[other].joints_world[j].position).norm();
            contacts(t, j - 1) =
                (p.z() < kContactHeight && displacement < kContactDisplacement) ? 1.0 : 0.0;
        }
    }
    return contacts;
}

namespace {

void write_rotation(std::string& out, const Mat3& m, char* buf, std::size_t buf_size) {
    for (int r = 0; r < 3; ++r) {
        for (int c = 0; c < 3; ++c) {
            std::snprintf(buf, buf_size, " %.17g", m(r, c));
            out += buf;
        }
    }
}

[[noreturn]] void parse_fail(const std::string& path, int line, const std::string& what) {
    throw std::runtime_error(path + ":" + std::to_string(line) + ": " + what);
}

}  // namespace

void save_motion(const std::string& path, const MotionSequence& seq) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write " + path);
    char buf[64];
    std::string line = "egokit-motion v1 id=" + seq.id + " family=" + seq.family;
    std::snprintf(buf, sizeof(buf), " fps=%d length=%d beta=", seq.fps, seq.length());
    line += buf;
    std::snprintf(buf, sizeof(buf), "%.17g,%.17g", seq.shape.beta[0], seq.shape.beta[1]);
    line += buf;
    std::snprintf(buf, sizeof(buf), " skeleton=%016llx",
                  static_cast<unsigned long long>(skeleton_hash()));
    line += buf;
    out << line << "\n";

    for (int t = 0; t < seq.length(); ++t) {
        line.clear();
        write_rotation(line, seq.root[t].rotation.matrix(), buf, sizeof(buf));
        for (int i = 0; i < 3; ++i) {
            std::snprintf(buf, sizeof(buf), " %.17g", seq.root[t].position[i]);
            line += buf;
        }
        for (int j = 1; j <= kLocalRotationCount; ++j) {
            write_rotation(line, seq.poses[t].local(j).matrix(), buf, sizeof(buf));
        }
        for (int j = 0; j < kBodyJointCount; ++j) {
            std::snprintf(buf, sizeof(buf), " %.17g", seq.contacts(t, j));
            line += buf;
        }
        out << line.substr(1) << "\n";  // drop the leading space
    }
    if (!out) throw std::runtime_error("write failed: " + path);
}

MotionSequence load_motion(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open motion file: " + path);
    std::string header;
    if (!std::getline(in, header)) parse_fail(path, 1, "empty file");
    std::istringstream hs(header);
    std::string magic, version;
    hs >> magic >> version;
    if (magic != "egokit-motion" || version != "v1") {
        parse_fail(path, 1, "not an egokit-motion v1 file");
    }

    MotionSequence seq;
    int expected_length = -1;
    std::string field;
    while (hs >> field) {
        const auto eq = field.find('=');
        if (eq == std::string::npos) parse_fail(path, 1, "malformed header field: " + field);
        const std::string key = field.substr(0, eq);
        const std::string value = field.substr(eq + 1);
        if (key == "id") {
            seq.id = value;
        } else if (key == "family") {
            seq.family = value;
        } else if (key == "fps") {
            seq.fps = std::stoi(value);
        } else if (key == "length") {
            expected_length = std::stoi(value);
        } else if (key == "beta") {
            const auto comma = value.find(',');
            if (comma == std::string::npos) parse_fail(path, 1, "beta needs two values");
            seq.shape = ShapeParams(std::stod(value.substr(0, comma)),
                                    std::stod(value.substr(comma + 1)));
        } else if (key == "skeleton") {
            char expected[24];
            std::snprintf(expected, sizeof(expected), "%016llx",
                          static_cast<unsigned long long>(skeleton_hash()));
            if (value != expected) {
                parse_fail(path, 1, "skeleton hash mismatch (file " + value + ")");
            }
        } else {
            parse_fail(path, 1, "unknown header key: " + key);
        }
    }
    if (expected_length < 1) parse_fail(path, 1, "missing or invalid length");

    constexpr int kNumbersPerRecord = 12 + 9 * kLocalRotationCount + kBodyJointCount;
    seq.contacts.resize(expected_length, kBodyJointCount);
    std::string line;
    int line_no = 1;
    std::vector<double> values;
    values.reserve(kNumbersPerRecord);
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty()) continue;
        values.clear();
        const char* ptr = line.data();
        const char* end = ptr + line.size();
        while (ptr < end) {
            while (ptr < end && *ptr == ' ') ++ptr;
            if (ptr >= end) break;
            double v;
            const auto [next, ec] = std::from_chars(ptr, end, v);
            if (ec != std::errc()) parse_fail(path, line_no, "bad number");
            values.push_back(v);
            ptr = next;
        }
        if (static_cast<int>(values.size()) != kNumbersPerRecord) {
            parse_fail(path, line_no,
                       "expected " + std::to_string(kNumbersPerRecord) + " numbers, got " +
                           std::to_string(values.size()));
        }
        if (static_cast<int>(seq.root.size()) >= expected_length) {
            parse_fail(path, line_no, "more records than the declared length");
        }
        auto read_rotation = [&](int at) {
            Mat3 m;
            for (int r = 0; r < 3; ++r) {
                for (int c = 0; c < 3; ++c) m(r, c) = values[at + 3 * r + c];
            }
            if (!Rotation3::is_valid(m, 1e-6)) {
                parse_fail(path, line_no, "invalid rotation at offset " + std::to_string(at));
            }
            return Rotation3(m, Rotation3::Unchecked{});
        };
        PoseSE3 root_pose(read_rotation(0), Vec3(values[9], values[10], values[11]));
        LocalPose pose;
        for (int j = 0; j < kLocalRotationCount; ++j) {
            pose.joint_rotations[j] = read_rotation(12 + 9 * j);
        }
        const int t = static_cast<int>(seq.root.size());
        for (int j = 0; j < kBodyJointCount; ++j) {
            seq.contacts(t, j) = values[12 + 9 * kLocalRotationCount + j];
        }
        seq.root.push_back(std::move(root_pose));
        seq.poses.push_back(std::move(pose));
    }
    if (seq.length() != expected_length) {
        parse_fail(path, line_no,
                   "declared length " + std::to_string(expected_length) + " but found " +
                       std::to_string(seq.length()) + " records");
    }
    seq.derive_cpf();
    return seq;
}

void save_cpf_trajectory(const std::string& path, const std::vector<PoseSE3>& traj) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write " + path);
    out << "egokit-cpf v1 length=" << traj.size() << "\n";
    char buf[64];
    for (const PoseSE3& pose : traj) {
        std::string line;
        write_rotation(line, pose.rotation.matrix(), buf, sizeof(buf));
        for (int i = 0; i < 3; ++i) {
            std::snprintf(buf, sizeof(buf), " %.17g", pose.position[i]);
            line += buf;
        }
        out << line.substr(1) << "\n";
    }
}

std::vector<PoseSE3> load_cpf_trajectory(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open CPF trajectory: " + path);
    std::string header;
    if (!std::getline(in, header) || header.rfind("egokit-cpf v1", 0) != 0) {
        parse_fail(path, 1, "not an egokit-cpf v1 file");
    }
    std::vector<PoseSE3> traj;
    std::string line;
    int line_no = 1;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty()) continue;
        std::istringstream ss(line);
        Mat3 m;
        Vec3 p;
        for (int r = 0; r < 3; ++r) {
            for (int c = 0; c < 3; ++c) {
                if (!(ss >> m(r, c))) parse_fail(path, line_no, "expected 12 numbers");
            }
        }
        if (!(ss >> p.x() >> p.y() >> p.z())) parse_fail(path, line_no, "expected 12 numbers");
        if (!Rotation3::is_valid(m, 1e-6)) parse_fail(path, line_no, "invalid rotation");
        traj.emplace_back(Rotation3(m, Rotation3::Unchecked{}), p);
    }
    if (traj.empty()) parse_fail(path, line_no, "no poses");
    return traj;
}

bool is_test_sequence(const std::string& id) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char c : id) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    return h % 10 == 9;
}

namespace {

const char* side_token(bool left) { return left ? "L" : "R"; }

bool parse_side(const std::string& token, const std::string& path, int line) {
    if (token == "L") return true;
    if (token == "R") return false;
    parse_fail(path, line, "side must be L or R");
}

}  // namespace

void save_hand_observations(const std::string& path,
                            const std::vector<HandObservation>& observations) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write " + path);
    out << "egokit-hands v1\n";
    char buf[128];
    if (!observations.empty()) {
        const CameraIntrinsics& k = observations.front().intrinsics;
        std::snprintf(buf, sizeof(buf), "camera %.17g %.17g %.17g %.17g\n", k.fx, k.fy, k.cx,
                      k.cy);
        out << buf;
        std::string line = "extrinsic";
        write_rotation(line, observations.front().camera_from_cpf.rotation.matrix(), buf,
                       sizeof(buf));
        for (int i = 0; i < 3; ++i) {
            std::snprintf(buf, sizeof(buf), " %.17g",
                          observations.front().camera_from_cpf.position[i]);
            line += buf;
        }
        out << line << "\n";
    }
    for (const HandObservation& obs : observations) {
        for (const auto& [joint, px] : obs.keypoints2d) {
            std::snprintf(buf, sizeof(buf), "px %d %s %d %.17g %.17g\n", obs.timestep,
                          side_token(obs.left), joint, px.x(), px.y());
            out << buf;
        }
        if (obs.wrist_pose_world) {
            std::string line = "wrist " + std::to_string(obs.timestep) + " " +
                               side_token(obs.left);
            write_rotation(line, obs.wrist_pose_world->rotation.matrix(), buf, sizeof(buf));
            for (int i = 0; i < 3; ++i) {
                std::snprintf(buf, sizeof(buf), " %.17g", obs.wrist_pose_world->position[i]);
                line += buf;
            }
            out << line << "\n";
        }
        if (obs.local_hand_rotations) {
            for (int i = 0; i < kHandJointCount; ++i) {
                std::string line = "localrot " + std::to_string(obs.timestep) + " " +
                                   side_token(obs.left) + " " + std::to_string(i + 1);
                write_rotation(line, (*obs.local_hand_rotations)[i].matrix(), buf,
                               sizeof(buf));
                out << line << "\n";
            }
        }
    }
}

std::vector<HandObservation> load_hand_observations(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open hand observations: " + path);
    std::string line;
    int line_no = 0;
    if (!std::getline(in, line) || line != "egokit-hands v1") {
        parse_fail(path, 1, "not an egokit-hands v1 file");
    }
    line_no = 1;
    CameraIntrinsics intrinsics;
    PoseSE3 extrinsic;
    bool have_camera = false;

    // Observations are keyed by (timestep, side); records may interleave.
    std::vector<HandObservation> out;
    auto find = [&](int t, bool left) -> HandObservation& {
        for (auto& obs : out) {
            if (obs.timestep == t && obs.left == left) return obs;
        }
        HandObservation obs;
        obs.timestep = t;
        obs.left = left;
        out.push_back(std::move(obs));
        return out.back();
    };
    auto read_rotation_tokens = [&](std::istringstream& ss) {
        Mat3 m;
        for (int r = 0; r < 3; ++r) {
            for (int c = 0; c < 3; ++c) {
                if (!(ss >> m(r, c))) parse_fail(path, line_no, "expected rotation entries");
            }
        }
        if (!Rotation3::is_valid(m, 1e-6)) parse_fail(path, line_no, "invalid rotation");
        return Rotation3(m, Rotation3::Unchecked{});
    };

    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty() || line[0] == '#') continue;
        std::istringstream ss(line);
        std::string kind;
        ss >> kind;
        if (kind == "camera") {
            if (!(ss >> intrinsics.fx >> intrinsics.fy >> intrinsics.cx >> intrinsics.cy)) {
                parse_fail(path, line_no, "camera needs fx fy cx cy");
            }
            intrinsics.validate();
            have_camera = true;
        } else if (kind == "extrinsic") {
            const Rotation3 rot = read_rotation_tokens(ss);
            Vec3 pos;
            if (!(ss >> pos.x() >> pos.y() >> pos.z())) {
                parse_fail(path, line_no, "extrinsic needs a position");
            }
            extrinsic = PoseSE3(rot, pos);
        } else if (kind == "px") {
            int t, joint;
            std::string side;
            double u, v;
            if (!(ss >> t >> side >> joint >> u >> v)) {
                parse_fail(path, line_no, "px needs: t side joint u v");
            }
            if (joint < 0 || joint > kHandJointCount) {
                parse_fail(path, line_no, "joint id out of range");
            }
            find(t, parse_side(side, path, line_no)).keypoints2d.emplace_back(joint,
                                                                              Vec2(u, v));
        } else if (kind == "wrist") {
            int t;
            std::string side;
            if (!(ss >> t >> side)) parse_fail(path, line_no, "wrist needs: t side pose");
            const Rotation3 rot = read_rotation_tokens(ss);
            Vec3 pos;
            if (!(ss >> pos.x() >> pos.y() >> pos.z())) {
                parse_fail(path, line_no, "wrist needs a position");
            }
            find(t, parse_side(side, path, line_no)).wrist_pose_world = PoseSE3(rot, pos);
        } else if (kind == "localrot") {
            int t, joint;
            std::string side;
            if (!(ss >> t >> side >> joint)) {
                parse_fail(path, line_no, "localrot needs: t side joint rotation");
            }
            if (joint < 1 || joint > kHandJointCount) {
                parse_fail(path, line_no, "localrot joint out of range");
            }
            HandObservation& obs = find(t, parse_side(side, path, line_no));
            if (!obs.local_hand_rotations) {
                obs.local_hand_rotations.emplace(kHandJointCount, Rotation3::identity());
            }
            (*obs.local_hand_rotations)[joint - 1] = read_rotation_tokens(ss);
        } else {
            parse_fail(path, line_no, "unknown record kind: " + kind);
        }
    }
    for (auto& obs : out) {
        if (have_camera) {
            obs.intrinsics = intrinsics;
            obs.camera_from_cpf = extrinsic;
        }
        if (!obs.has_evidence()) {
            throw std::runtime_error(path + ": observation at t=" +
                                     std::to_string(obs.timestep) + " carries no evidence");
        }
    }
    return out;
}

}  // namespace egokit
