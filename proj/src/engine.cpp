#include "intenreg/engine.hpp"

namespace intenreg {

RegistrationEngine make_identity_engine() {
    return [](const Image2D& target, const Image2D& source) {
        require_same_shape(target, source, "identity engine");
        return DisplacementField(target.height, target.width);
    };
}

RegistrationEngine make_direct_engine(const LossConfig& cfg, const AdamState& adam,
                                      const StopRule& stop) {
    return [cfg, adam, stop](const Image2D& target, const Image2D& source) {
        return register_direct(target, source, cfg, adam, stop).field;
    };
}

RegistrationEngine make_amortized_engine(const NetParams& params) {
    return [params](const Image2D& target, const Image2D& source) {
        return forward(params, target, source);
    };
}

}  // namespace intenreg
