#pragma once

// Segmentation evaluation. Overall IoU is the ratio of summed intersections
// to summed unions across samples, which is not the mean of per-sample IoUs.
// Threshold rule is IoU >= X by default (strictly-greater available).

#include <cstdint>
#include <string>
#include <vector>

#include "cmpc/tensor.hpp"

namespace cmpc {

struct EvalRecord {
    std::int64_t intersection = 0;
    std::int64_t unions = 0;
    double iou = 1.0;  // both-empty convention: 0/0 counts as perfect agreement
};

template <class T>
EvalRecord eval_record(const Tensor<T>& pred, const Tensor<T>& gt) {
    if (pred.shape != gt.shape) shape_error("iou", pred.shape, gt.shape);
    EvalRecord r;
    for (std::int64_t i = 0; i < pred.size(); ++i) {
        const T p = pred[i], g = gt[i];
        if ((p != T(0) && p != T(1)) || (g != T(0) && g != T(1)))
            throw std::invalid_argument("iou: masks must be binary");
        const bool pb = p == T(1), gb = g == T(1);
        r.intersection += pb && gb;
        r.unions += pb || gb;
    }
    r.iou = r.unions == 0 ? 1.0 : static_cast<double>(r.intersection) / static_cast<double>(r.unions);
    return r;
}

template <class T>
double iou(const Tensor<T>& pred, const Tensor<T>& gt) {
    return eval_record(pred, gt).iou;
}

inline void require_records(const std::vector<EvalRecord>& records, const char* op) {
    if (records.empty()) throw std::invalid_argument(std::string(op) + ": empty record set");
}

inline double overall_iou(const std::vector<EvalRecord>& records) {
    require_records(records, "overall_iou");
    std::int64_t inter = 0, uni = 0;
    for (const auto& r : records) {
        inter += r.intersection;
        uni += r.unions;
    }
    return uni == 0 ? 1.0 : static_cast<double>(inter) / static_cast<double>(uni);
}

inline double mean_iou(const std::vector<EvalRecord>& records) {
    require_records(records, "mean_iou");
    double acc = 0.0;
    for (const auto& r : records) acc += r.iou;
    return acc / static_cast<double>(records.size());
}

/// Percentage of samples whose IoU meets threshold X in (0,1).
inline double prec_at(const std::vector<EvalRecord>& records, double x, bool strict = false) {
    require_records(records, "prec_at");
    if (!(x > 0.0 && x < 1.0)) throw std::invalid_argument("prec_at: threshold must lie in (0,1)");
    std::int64_t hits = 0;
    for (const auto& r : records) hits += strict ? r.iou > x : r.iou >= x;
    return 100.0 * static_cast<double>(hits) / static_cast<double>(records.size());
}

/// Mean of prec_at over the ten thresholds 0.50, 0.55, ..., 0.95. A stated
/// proxy, not a claim of protocol equivalence with detection-style mAP.
inline double mean_ap_proxy(const std::vector<EvalRecord>& records, bool strict = false) {
    require_records(records, "mean_ap_proxy");
    double acc = 0.0;
    for (int i = 0; i < 10; ++i) acc += prec_at(records, static_cast<double>(50 + 5 * i) / 100.0, strict);
    return acc / 10.0;
}

}  // namespace cmpc
