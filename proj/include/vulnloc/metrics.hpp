#pragma once

#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "vulnloc/detect.hpp"

namespace vulnloc {

struct ConfusionCounts {
    long tp = 0;
    long fp = 0;
    long tn = 0;
    long fn = 0;

    long total() const { return tp + fp + tn + fn; }
};

// Metrics with explicit undefined markers: a zero denominator yields nullopt
// rather than a silent zero.
struct DetectionMetrics {
    std::optional<double> fpr;
    std::optional<double> fnr;
    std::optional<double> accuracy;
    std::optional<double> precision;
    std::optional<double> f1;
};

DetectionMetrics detection_metrics(const ConfusionCounts& counts);

using LineSet = std::set<std::pair<std::string, int>>;

// Intersection over union of truly vs detected vulnerable lines. Two empty
// sets agree perfectly and score 1.
double iou(const LineSet& truth, const LineSet& detected);

struct CandidateTruth {
    bool vulnerable = false;
    LineSet lines;
};

struct CandidateOutcome {
    std::string id;
    bool truth_vulnerable = false;
    bool predicted_vulnerable = false;
    double iou = 0.0;
    std::size_t detected_line_count = 0;
};

struct AggregateSummary {
    ConfusionCounts counts;
    DetectionMetrics metrics;
    std::optional<double> mean_iou;    // over predicted-vulnerable samples
    std::optional<double> mean_detected_lines;
    std::vector<CandidateOutcome> rows;

    // Program-level rollup: candidates grouped by source file; a program is
    // flagged when any of its candidates is.
    ConfusionCounts program_counts;
    DetectionMetrics program_metrics;
};

// Joins detection entries with ground truth by candidate id; throws DataError
// when an entry has no matching truth.
AggregateSummary aggregate_report(const DetectionReport& report,
                                  const std::map<std::string, CandidateTruth>& truths);

std::string write_summary(const AggregateSummary& summary);

} // namespace vulnloc
