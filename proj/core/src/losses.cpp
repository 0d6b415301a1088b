#include "ccsp/losses.hpp"

namespace ccsp {

namespace {

void check_pair(const HeadOutput& pred, const GridTarget& target) {
    if (pred.scales.size() != target.scales.size()) {
        throw InputError("loss: prediction has " + std::to_string(pred.scales.size()) +
                         " scales, target has " + std::to_string(target.scales.size()));
    }
    for (size_t s = 0; s < pred.scales.size(); ++s) {
        const auto& p = pred.scales[s];
        const auto& t = target.scales[s];
        if (p.sy != t.sy || p.sx != t.sx || p.B != t.B || p.C != t.C) {
            throw InputError("loss: scale " + std::to_string(s) + " grid/anchor/class mismatch");
        }
        if (p.obj.value().dim(0) != t.obj_mask.dim(0)) {
            throw InputError("loss: batch size mismatch at scale " + std::to_string(s));
        }
    }
}

double batch_inv(const HeadOutput& pred) {
    return 1.0 / static_cast<double>(std::max<int64_t>(1, pred.batch()));
}

}  // namespace

void LossWeights::validate() const {
    if (lambda_cls < 0 || lambda_loc < 0 || lambda_obj < 0 || lambda_noobj < 0 || alpha < 0 ||
        beta < 0) {
        throw ConfigError("loss weights must be nonnegative");
    }
    if (alpha + beta <= 0) throw ConfigError("alpha + beta must be positive");
}

Variable classification_loss(const HeadOutput& pred, const GridTarget& target) {
    check_pair(pred, target);
    std::vector<std::pair<double, Variable>> terms;
    for (size_t s = 0; s < pred.scales.size(); ++s) {
        const auto& t = target.scales[s];
        terms.emplace_back(1.0, masked_sse(pred.scales[s].cls, t.cls, t.maskC));
    }
    return scale(weighted_sum(terms), batch_inv(pred));
}

Variable localization_loss(const HeadOutput& pred, const GridTarget& target) {
    check_pair(pred, target);
    std::vector<std::pair<double, Variable>> terms;
    for (size_t s = 0; s < pred.scales.size(); ++s) {
        const auto& p = pred.scales[s];
        const auto& t = target.scales[s];
        const Tensor& whv = p.wh.value();
        for (int64_t i = 0; i < whv.numel(); ++i) {
            if (t.mask2[i] != 0.0 && whv[i] <= 0.0) {
                throw InputError("localization_loss: nonpositive predicted size on a responsible anchor");
            }
        }
        terms.emplace_back(1.0, masked_sse(p.xy, t.xy, t.mask2));
        terms.emplace_back(1.0, masked_sse(sqrt_op(p.wh), t.wh_sqrt, t.mask2));
    }
    return scale(weighted_sum(terms), batch_inv(pred));
}

Variable objectness_loss(const HeadOutput& pred, const GridTarget& target, const LossWeights& w) {
    check_pair(pred, target);
    std::vector<std::pair<double, Variable>> terms;
    for (size_t s = 0; s < pred.scales.size(); ++s) {
        const auto& p = pred.scales[s];
        const auto& t = target.scales[s];
        Tensor ones(t.obj_mask.shape(), 1.0);
        Tensor zeros(t.obj_mask.shape());
        terms.emplace_back(1.0, masked_sse(p.obj, std::move(ones), t.obj_mask));
        terms.emplace_back(w.lambda_noobj, masked_sse(p.obj, std::move(zeros), t.noobj_mask));
    }
    return scale(weighted_sum(terms), batch_inv(pred));
}

DetectionLossNodes detection_loss(const HeadOutput& pred, const GridTarget& target,
                                  const LossWeights& w) {
    w.validate();
    DetectionLossNodes out;
    out.cls = classification_loss(pred, target);
    out.loc = localization_loss(pred, target);
    out.obj = objectness_loss(pred, target, w);
    out.l1 = weighted_sum({{w.lambda_cls, out.cls}, {w.lambda_loc, out.loc}, {w.lambda_obj, out.obj}});
    return out;
}

Variable denoise_loss(const Variable& pred, Tensor truth) {
    if (!pred.value().same_shape(truth)) {
        throw InputError("denoise_loss: shape mismatch " + shape_str(pred.value().shape()) + " vs " +
                         shape_str(truth.shape()));
    }
    return mse_mean(pred, std::move(truth));
}

double denoise_loss(const Tensor& pred, const Tensor& truth) {
    return denoise_loss(Variable::constant(pred), truth).scalar();
}

Variable joint_loss(const Variable& l1, const Variable& l2, const LossWeights& w) {
    return weighted_sum({{w.alpha, l1}, {w.beta, l2}});
}

double joint_loss(double l1, double l2, const LossWeights& w) {
    return w.alpha * l1 + w.beta * l2;
}

LossBreakdown make_breakdown(double cls, double loc, double obj, double l2, const LossWeights& w) {
    LossBreakdown b;
    b.cls = cls;
    b.loc = loc;
    b.obj = obj;
    b.l2 = l2;
    b.l1 = w.lambda_cls * cls + w.lambda_loc * loc + w.lambda_obj * obj;
    b.joint = w.alpha * b.l1 + w.beta * b.l2;
    return b;
}

}  // namespace ccsp
