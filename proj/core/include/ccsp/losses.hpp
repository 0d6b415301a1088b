#pragma once

#include "ccsp/detector.hpp"

namespace ccsp {

struct LossWeights {
    double lambda_cls = 1.0;
    double lambda_loc = 5.0;
    double lambda_obj = 1.0;
    double lambda_noobj = 0.5;
    double alpha = 0.5;
    double beta = 0.5;

    void validate() const;
};

/// Scalar loss components with the weighted sums; the invariants
/// l1 = sum of weighted parts and joint = alpha*l1 + beta*l2 hold exactly.
struct LossBreakdown {
    double cls = 0.0, loc = 0.0, obj = 0.0, l1 = 0.0, l2 = 0.0, joint = 0.0;
};

/// Squared class-probability error over responsible anchors, averaged over
/// the batch.
Variable classification_loss(const HeadOutput& pred, const GridTarget& target);

/// Squared center error plus squared sqrt-size error over responsible
/// anchors, averaged over the batch.
Variable localization_loss(const HeadOutput& pred, const GridTarget& target);

/// (1 - p_obj)^2 over responsible anchors plus lambda_noobj * p_obj^2 over
/// the rest, averaged over the batch.
Variable objectness_loss(const HeadOutput& pred, const GridTarget& target, const LossWeights& w);

struct DetectionLossNodes {
    Variable cls, loc, obj, l1;
};

DetectionLossNodes detection_loss(const HeadOutput& pred, const GridTarget& target,
                                  const LossWeights& w);

/// Mean per-pixel squared error between two image batches (NCHW in [0,1]).
Variable denoise_loss(const Variable& pred, Tensor truth);
double denoise_loss(const Tensor& pred, const Tensor& truth);

Variable joint_loss(const Variable& l1, const Variable& l2, const LossWeights& w);
double joint_loss(double l1, double l2, const LossWeights& w);

LossBreakdown make_breakdown(double cls, double loc, double obj, double l2, const LossWeights& w);

}  // namespace ccsp
