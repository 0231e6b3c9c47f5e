#pragma once

#include <string>
#include <vector>

#include "vulnloc/encoder.hpp"
#include "vulnloc/model.hpp"

namespace vulnloc {

struct LineScore {
    int statement = 0; // 1-based candidate statement index
    double score = 0.0;
    bool detected = false;
    EncodedSample::Prov prov = EncodedSample::Prov::NoDebug;
    std::string file;
    int line = 0;
};

struct CandidateReport {
    std::string id;
    double score = 0.0; // pooled over the real tokens
    bool vulnerable = false;
    std::vector<LineScore> lines;

    // Detected lines mapped to unique source locations.
    std::vector<std::pair<std::string, int>> detected_source_lines() const;
};

struct DetectionReport {
    double threshold = 0.5;
    int kappa = 1;
    std::vector<CandidateReport> entries;
};

// Per line: the mean of the kappa largest activations among the line's
// tokens (all of them when the line is shorter). A candidate is flagged when
// any line score exceeds the threshold; no ground-truth mask is involved.
CandidateReport detect_sample(const ModelParams& params, const EncodedSample& sample,
                              const EmbeddingTable& table, double threshold);

DetectionReport detect(const ModelParams& params, const EncodedDataset& dataset,
                       const EmbeddingTable& table, double threshold);

std::string write_report(const DetectionReport& report);
DetectionReport read_report(const std::string& text);

} // namespace vulnloc
