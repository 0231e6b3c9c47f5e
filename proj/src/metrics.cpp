#include "vulnloc/metrics.hpp"

#include <sstream>

#include "vulnloc/errors.hpp"
#include "vulnloc/text.hpp"

namespace vulnloc {

DetectionMetrics detection_metrics(const ConfusionCounts& c) {
    DetectionMetrics m;
    if (c.fp + c.tn > 0)
        m.fpr = static_cast<double>(c.fp) / static_cast<double>(c.fp + c.tn);
    if (c.tp + c.fn > 0)
        m.fnr = static_cast<double>(c.fn) / static_cast<double>(c.tp + c.fn);
    if (c.total() > 0)
        m.accuracy = static_cast<double>(c.tp + c.tn) / static_cast<double>(c.total());
    if (c.tp + c.fp > 0)
        m.precision = static_cast<double>(c.tp) / static_cast<double>(c.tp + c.fp);
    if (m.precision && m.fnr) {
        double p = *m.precision;
        double recall = 1.0 - *m.fnr;
        if (p + recall > 0)
            m.f1 = 2.0 * p * recall / (p + recall);
    }
    return m;
}

double iou(const LineSet& truth, const LineSet& detected) {
    if (truth.empty() && detected.empty())
        return 1.0; // agreement on "nothing vulnerable"
    std::size_t inter = 0;
    for (const auto& line : truth)
        if (detected.count(line))
            ++inter;
    std::size_t uni = truth.size() + detected.size() - inter;
    return static_cast<double>(inter) / static_cast<double>(uni);
}

AggregateSummary aggregate_report(const DetectionReport& report,
                                  const std::map<std::string, CandidateTruth>& truths) {
    AggregateSummary summary;
    double iou_sum = 0;
    std::size_t iou_count = 0;
    double line_sum = 0;

    for (const auto& entry : report.entries) {
        auto it = truths.find(entry.id);
        if (it == truths.end())
            throw DataError("no ground truth for candidate " + entry.id);
        const CandidateTruth& truth = it->second;

        CandidateOutcome row;
        row.id = entry.id;
        row.truth_vulnerable = truth.vulnerable;
        row.predicted_vulnerable = entry.vulnerable;

        if (entry.vulnerable && truth.vulnerable)
            ++summary.counts.tp;
        else if (entry.vulnerable)
            ++summary.counts.fp;
        else if (truth.vulnerable)
            ++summary.counts.fn;
        else
            ++summary.counts.tn;

        auto detected = entry.detected_source_lines();
        LineSet detected_set(detected.begin(), detected.end());
        row.detected_line_count = detected_set.size();
        row.iou = iou(truth.lines, detected_set);
        if (entry.vulnerable) {
            // Averaged over every detected-vulnerable sample, false positives
            // included.
            iou_sum += row.iou;
            line_sum += static_cast<double>(detected_set.size());
            ++iou_count;
        }
        summary.rows.push_back(std::move(row));
    }
    summary.metrics = detection_metrics(summary.counts);
    if (iou_count > 0) {
        summary.mean_iou = iou_sum / static_cast<double>(iou_count);
        summary.mean_detected_lines = line_sum / static_cast<double>(iou_count);
    }

    // Program rollup: the file component of "kind:file:line:col" ids groups
    // candidates into programs.
    std::map<std::string, std::pair<bool, bool>> programs; // file -> (truth, predicted)
    for (const auto& row : summary.rows) {
        auto first = row.id.find(':');
        auto last = row.id.rfind(':');
        std::string file = row.id;
        if (first != std::string::npos && last != std::string::npos && last > first) {
            auto line_sep = row.id.rfind(':', last - 1);
            file = row.id.substr(first + 1, line_sep - first - 1);
        }
        auto& slot = programs[file];
        slot.first |= row.truth_vulnerable;
        slot.second |= row.predicted_vulnerable;
    }
    for (const auto& [file, flags] : programs) {
        (void)file;
        if (flags.second && flags.first)
            ++summary.program_counts.tp;
        else if (flags.second)
            ++summary.program_counts.fp;
        else if (flags.first)
            ++summary.program_counts.fn;
        else
            ++summary.program_counts.tn;
    }
    summary.program_metrics = detection_metrics(summary.program_counts);
    return summary;
}

namespace {

std::string opt_field(const std::optional<double>& v) {
    return v ? format_double(*v) : "undefined";
}

} // namespace

std::string write_summary(const AggregateSummary& s) {
    std::ostringstream out;
    out << "# vulnloc-summary v1\n";
    out << "tp\t" << s.counts.tp << "\nfp\t" << s.counts.fp << "\ntn\t" << s.counts.tn
        << "\nfn\t" << s.counts.fn << "\n";
    out << "fpr\t" << opt_field(s.metrics.fpr) << "\n";
    out << "fnr\t" << opt_field(s.metrics.fnr) << "\n";
    out << "accuracy\t" << opt_field(s.metrics.accuracy) << "\n";
    out << "precision\t" << opt_field(s.metrics.precision) << "\n";
    out << "f1\t" << opt_field(s.metrics.f1) << "\n";
    out << "mean_iou\t" << opt_field(s.mean_iou) << "\n";
    out << "mean_detected_lines\t" << opt_field(s.mean_detected_lines) << "\n";
    out << "program_tp\t" << s.program_counts.tp << "\nprogram_fp\t" << s.program_counts.fp
        << "\nprogram_tn\t" << s.program_counts.tn << "\nprogram_fn\t" << s.program_counts.fn
        << "\n";
    out << "program_f1\t" << opt_field(s.program_metrics.f1) << "\n";
    out << "# id\ttruth\tpredicted\tiou\tdetected_lines\n";
    for (const auto& row : s.rows)
        out << row.id << '\t' << (row.truth_vulnerable ? 1 : 0) << '\t'
            << (row.predicted_vulnerable ? 1 : 0) << '\t' << format_double(row.iou) << '\t'
            << row.detected_line_count << '\n';
    return out.str();
}

} // namespace vulnloc
