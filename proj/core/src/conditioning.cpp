#include "egokit/conditioning.hpp"

#include <cmath>
#include <stdexcept>

namespace egokit {

std::string to_string(ConditioningVariant v) {
    switch (v) {
        case ConditioningVariant::kEgoAllo: return "egoallo";
        case ConditioningVariant::kAbsoluteLocalRelative: return "abs-local-rel";
        case ConditioningVariant::kAbsoluteGlobalDeltas: return "abs-global-deltas";
        case ConditioningVariant::kSequenceCanonicalization: return "seq-canonical";
        case ConditioningVariant::kAbsolute: return "absolute";
    }
    return "?";
}

std::optional<ConditioningVariant> parse_conditioning_variant(const std::string& name) {
    if (name == "egoallo") return ConditioningVariant::kEgoAllo;
    if (name == "abs-local-rel") return ConditioningVariant::kAbsoluteLocalRelative;
    if (name == "abs-global-deltas") return ConditioningVariant::kAbsoluteGlobalDeltas;
    if (name == "seq-canonical") return ConditioningVariant::kSequenceCanonicalization;
    if (name == "absolute") return ConditioningVariant::kAbsolute;
    return std::nullopt;
}

int conditioning_dim(ConditioningVariant v) {
    switch (v) {
        case ConditioningVariant::kEgoAllo:
        case ConditioningVariant::kAbsoluteLocalRelative:
        case ConditioningVariant::kAbsoluteGlobalDeltas:
            return 18;
        case ConditioningVariant::kSequenceCanonicalization:
        case ConditioningVariant::kAbsolute:
            return 9;
    }
    return 0;
}

namespace {

constexpr double kHeadingEps = 1e-6;

// Heading angle such that the canonical rotation is rz(-heading); nullopt
// when the direction has no horizontal component.
std::optional<double> heading_of(const Vec3& dir) {
    if (std::hypot(dir.x(), dir.y()) < kHeadingEps) return std::nullopt;
    return std::atan2(dir.x(), dir.y());
}

// Canonical frame with the degenerate-gaze fallback chain: previous
// timestep's heading, then the CPF's local +y projected to the floor, then
// world +y (heading 0).
PoseSE3 canonical_frame_impl(const PoseSE3& world_cpf,
                             const std::optional<double>& previous_heading,
                             double* heading_out) {
    const Vec3 forward = world_cpf.rotation * Vec3::UnitZ();
    double heading;
    if (auto h = heading_of(forward)) {
        heading = *h;
    } else if (previous_heading) {
        heading = *previous_heading;
    } else if (auto h2 = heading_of(world_cpf.rotation * Vec3::UnitY())) {
        heading = *h2;
    } else {
        heading = 0.0;
    }
    if (heading_out) *heading_out = heading;
    return PoseSE3(rz(-heading), Vec3(world_cpf.position.x(), world_cpf.position.y(), 0.0));
}

void write_pose(Eigen::VectorXd& out, int offset, const PoseSE3& pose) {
    out.segment<6>(offset) = to_rot6d(pose.rotation);
    out.segment<3>(offset + 6) = pose.position;
}

}  // namespace

PoseSE3 canonical_frame(const PoseSE3& world_cpf) {
    return canonical_frame_impl(world_cpf, std::nullopt, nullptr);
}

std::vector<ConditionVector> encode(ConditioningVariant variant,
                                    const std::vector<PoseSE3>& traj) {
    if (traj.empty()) throw std::invalid_argument("encode: empty trajectory");
    const int dim = conditioning_dim(variant);
    std::vector<ConditionVector> out(traj.size(), ConditionVector(dim));

    PoseSE3 seq_align;  // SequenceCanonicalization: inverse canonical frame of t = 1
    if (variant == ConditioningVariant::kSequenceCanonicalization) {
        seq_align = inverse(canonical_frame(traj.front()));
    }

    std::optional<double> prev_heading;
    for (std::size_t t = 0; t < traj.size(); ++t) {
        const PoseSE3& pose = traj[t];
        ConditionVector& c = out[t];
        switch (variant) {
            case ConditioningVariant::kEgoAllo: {
                const PoseSE3 delta = t == 0 ? PoseSE3::identity()
                                             : compose(inverse(traj[t - 1]), pose);
                double heading = 0.0;
                const PoseSE3 canonical = canonical_frame_impl(pose, prev_heading, &heading);
                prev_heading = heading;
                write_pose(c, 0, delta);
                write_pose(c, 9, compose(inverse(canonical), pose));
                break;
            }
            case ConditioningVariant::kAbsoluteLocalRelative: {
                const PoseSE3 delta = t == 0 ? PoseSE3::identity()
                                             : compose(inverse(traj[t - 1]), pose);
                write_pose(c, 0, pose);
                write_pose(c, 9, delta);
                break;
            }
            case ConditioningVariant::kAbsoluteGlobalDeltas: {
                write_pose(c, 0, pose);
                if (t == 0) {
                    c.segment<6>(9) = to_rot6d(Rotation3::identity());
                    c.segment<3>(15).setZero();
                } else {
                    c.segment<6>(9) = to_rot6d(traj[t - 1].rotation.transpose() * pose.rotation);
                    c.segment<3>(15) = pose.position - traj[t - 1].position;
                }
                break;
            }
            case ConditioningVariant::kSequenceCanonicalization:
                write_pose(c, 0, compose(seq_align, pose));
                break;
            case ConditioningVariant::kAbsolute:
                write_pose(c, 0, pose);
                break;
        }
    }
    return out;
}

}  // namespace egokit
