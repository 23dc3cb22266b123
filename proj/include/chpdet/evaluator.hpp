/*
 * Copyright 2026 The chpdet Authors.
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 * http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#ifndef CHPDET_EVALUATOR_HPP
#define CHPDET_EVALUATOR_HPP

#include <algorithm>
#include <map>
#include <numeric>
#include <optional>
#include <set>
#include <span>
#include <tuple>
#include <vector>

#include "chpdet/error.hpp"
#include "chpdet/geometry.hpp"

namespace chpdet {

/// Detections and ground truth, one inner list per image. Image id = outer index.
using ImageBoxes = std::vector<std::vector<ChpBox>>;

struct DetectionRef {
    std::size_t image = 0;
    std::size_t index = 0;

    bool operator==(const DetectionRef&) const = default;
};

struct MatchResult {
    /// Per image, per detection: true positive?
    std::vector<std::vector<bool>> det_tp;
    /// Per image, per detection: index of the matched ground truth, if any.
    std::vector<std::vector<std::optional<std::size_t>>> det_match;
    /// Per image, per ground truth: matched by some detection?
    std::vector<std::vector<bool>> gt_matched;
    /// All detections in global processing order.
    std::vector<DetectionRef> order;
};

/// Global ranking: score descending, then image id, class, cx, cy ascending.
inline std::vector<DetectionRef> global_order(const ImageBoxes& dets) {
    std::vector<DetectionRef> refs;
    for (std::size_t img = 0; img < dets.size(); ++img) {
        for (std::size_t i = 0; i < dets[img].size(); ++i) {
            refs.push_back({img, i});
        }
    }
    std::stable_sort(refs.begin(), refs.end(), [&](const DetectionRef& a, const DetectionRef& b) {
        const ChpBox& x = dets[a.image][a.index];
        const ChpBox& y = dets[b.image][b.index];
        return std::make_tuple(-x.score, a.image, x.class_id, x.cx, x.cy) <
               std::make_tuple(-y.score, b.image, y.class_id, y.cx, y.cy);
    });
    return refs;
}

/**
 * Greedy matching in global score order. A detection is a true positive when the
 * best-IoU still-unmatched ground truth of the same class in the same image has
 * IoU strictly above `iou_threshold`; that ground truth is then consumed.
 * IoU ignores heading (boxes are folded to [0, 180)).
 */
inline MatchResult match_detections(const ImageBoxes& dets, const ImageBoxes& gts, double iou_threshold) {
    if (dets.size() != gts.size()) {
        throw Error("detections cover " + std::to_string(dets.size()) + " images, ground truth covers " +
                    std::to_string(gts.size()));
    }
    MatchResult out;
    out.det_tp.resize(dets.size());
    out.det_match.resize(dets.size());
    out.gt_matched.resize(gts.size());
    std::vector<std::vector<RBox>> gt_boxes(gts.size());
    for (std::size_t img = 0; img < gts.size(); ++img) {
        out.det_tp[img].assign(dets[img].size(), false);
        out.det_match[img].assign(dets[img].size(), std::nullopt);
        out.gt_matched[img].assign(gts[img].size(), false);
        for (const ChpBox& g : gts[img]) {
            gt_boxes[img].push_back(reduce_half_turn(chp_to_rbox(g)));
        }
    }
    out.order = global_order(dets);
    for (const DetectionRef& ref : out.order) {
        const ChpBox& d = dets[ref.image][ref.index];
        const RBox db = reduce_half_turn(chp_to_rbox(d));
        double best = -1.0;
        std::optional<std::size_t> best_gt;
        for (std::size_t g = 0; g < gts[ref.image].size(); ++g) {
            if (out.gt_matched[ref.image][g] || gts[ref.image][g].class_id != d.class_id) {
                continue;
            }
            const double iou = rotated_iou(db, gt_boxes[ref.image][g]);
            if (iou > best) {
                best = iou;
                best_gt = g;
            }
        }
        if (best_gt && best > iou_threshold) {
            out.det_tp[ref.image][ref.index] = true;
            out.det_match[ref.image][ref.index] = best_gt;
            out.gt_matched[ref.image][*best_gt] = true;
        }
    }
    return out;
}

struct LabeledDetection {
    double score = 0.0;
    bool tp = false;
};

struct PrPoint {
    double recall = 0.0;
    double precision = 0.0;
};

/// Precision/recall after each detection, ranked by score descending (stable for ties).
inline std::vector<PrPoint> precision_recall(std::span<const LabeledDetection> labeled, std::size_t n_gt) {
    std::vector<std::size_t> order(labeled.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t a, std::size_t b) { return labeled[a].score > labeled[b].score; });
    std::vector<PrPoint> curve;
    curve.reserve(order.size());
    std::size_t tp = 0;
    std::size_t seen = 0;
    for (std::size_t i : order) {
        ++seen;
        tp += labeled[i].tp ? 1 : 0;
        const double recall = n_gt == 0 ? 0.0 : static_cast<double>(tp) / static_cast<double>(n_gt);
        curve.push_back({recall, static_cast<double>(tp) / static_cast<double>(seen)});
    }
    return curve;
}

/// 11-point interpolated AP: mean over r in {0, 0.1, ..., 1} of the best precision at
/// recall >= r. Undefined (nullopt) when the class has no ground truth.
inline std::optional<double> voc07_ap(std::span<const LabeledDetection> labeled, std::size_t n_gt) {
    if (n_gt == 0) {
        return std::nullopt;
    }
    const std::vector<PrPoint> curve = precision_recall(labeled, n_gt);
    double sum = 0.0;
    for (int step = 0; step <= 10; ++step) {
        const double r = step / 10.0;
        double best = 0.0;
        for (const PrPoint& p : curve) {
            if (p.recall >= r) {
                best = std::max(best, p.precision);
            }
        }
        sum += best;
    }
    return sum / 11.0;
}

struct ClassCounts {
    std::size_t tp = 0;
    std::size_t fp = 0;
    std::size_t fn = 0;

    bool operator==(const ClassCounts&) const = default;
};

struct EvalReport {
    std::vector<double> thresholds;
    /// class -> AP per threshold; nullopt where the class has no ground truth.
    std::map<int, std::vector<std::optional<double>>> per_class_ap;
    /// mean AP per threshold over classes present in ground truth (0 when there are none).
    std::vector<double> map_at;
    /// class -> counts per threshold.
    std::map<int, std::vector<ClassCounts>> counts;
    /// class -> precision/recall curve per threshold.
    std::map<int, std::vector<std::vector<PrPoint>>> pr_curves;
    double bda_iou = 0.5;
    std::size_t bda_true_positives = 0;
    std::size_t bda_correct = 0;
    /// Fraction of true positives (at bda_iou) with heading error below 10 degrees; 0 without TPs.
    double bda = 0.0;
};

inline constexpr double kBowDirectionToleranceDeg = 10.0;

inline EvalReport evaluate(const ImageBoxes& dets, const ImageBoxes& gts,
                           std::span<const double> thresholds = std::vector<double>{0.5, 0.6, 0.7, 0.8},
                           double bda_iou = 0.5) {
    if (dets.size() != gts.size()) {
        throw Error("detections cover " + std::to_string(dets.size()) + " images, ground truth covers " +
                    std::to_string(gts.size()));
    }
    EvalReport report;
    report.thresholds.assign(thresholds.begin(), thresholds.end());
    report.bda_iou = bda_iou;

    std::set<int> classes;
    std::map<int, std::size_t> n_gt;
    for (const auto& image : gts) {
        for (const ChpBox& g : image) {
            classes.insert(g.class_id);
            ++n_gt[g.class_id];
        }
    }
    for (const auto& image : dets) {
        for (const ChpBox& d : image) {
            classes.insert(d.class_id);
        }
    }
    for (int c : classes) {
        report.per_class_ap[c].assign(thresholds.size(), std::nullopt);
        report.counts[c].assign(thresholds.size(), ClassCounts{});
        report.pr_curves[c].assign(thresholds.size(), {});
    }

    for (std::size_t t = 0; t < thresholds.size(); ++t) {
        const MatchResult match = match_detections(dets, gts, thresholds[t]);
        std::map<int, std::vector<LabeledDetection>> labeled;
        for (const DetectionRef& ref : match.order) {
            const ChpBox& d = dets[ref.image][ref.index];
            const bool tp = match.det_tp[ref.image][ref.index];
            labeled[d.class_id].push_back({d.score, tp});
            ClassCounts& cc = report.counts[d.class_id][t];
            (tp ? cc.tp : cc.fp) += 1;
        }
        for (std::size_t img = 0; img < gts.size(); ++img) {
            for (std::size_t g = 0; g < gts[img].size(); ++g) {
                if (!match.gt_matched[img][g]) {
                    report.counts[gts[img][g].class_id][t].fn += 1;
                }
            }
        }
        double sum = 0.0;
        std::size_t present = 0;
        for (int c : classes) {
            const std::size_t gt_count = n_gt.count(c) ? n_gt.at(c) : 0;
            const auto& lab = labeled[c];
            report.pr_curves[c][t] = precision_recall(lab, gt_count);
            report.per_class_ap[c][t] = voc07_ap(lab, gt_count);
            if (report.per_class_ap[c][t]) {
                sum += *report.per_class_ap[c][t];
                ++present;
            }
        }
        report.map_at.push_back(present == 0 ? 0.0 : sum / static_cast<double>(present));
    }

    const MatchResult bda_match = match_detections(dets, gts, bda_iou);
    for (std::size_t img = 0; img < dets.size(); ++img) {
        for (std::size_t i = 0; i < dets[img].size(); ++i) {
            if (!bda_match.det_tp[img][i]) {
                continue;
            }
            const ChpBox& gt = gts[img][*bda_match.det_match[img][i]];
            ++report.bda_true_positives;
            const double err = angle_diff(chp_to_rbox(dets[img][i]).theta, chp_to_rbox(gt).theta);
            if (err < kBowDirectionToleranceDeg) {
                ++report.bda_correct;
            }
        }
    }
    report.bda = report.bda_true_positives == 0
                     ? 0.0
                     : static_cast<double>(report.bda_correct) / static_cast<double>(report.bda_true_positives);
    return report;
}

}  // namespace chpdet

#endif
