#pragma once

#include <cstdint>
#include <map>
#include <string>

#include "vulnloc/embedding.hpp"
#include "vulnloc/model.hpp"
#include "vulnloc/train.hpp"

namespace vulnloc {

// Flat key=value pipeline configuration with an explicit schema version.
struct PipelineConfig {
    std::string source_dir;
    std::string ir_dir;
    std::string truth_dir;
    std::string work_dir = "work";
    std::string api_list;

    int embed_dim = 16;
    int max_tokens = 96;
    int embed_window = 5;
    int embed_negatives = 5;
    int embed_epochs = 3;

    ModelHyper hyper;
    TrainConfig train;

    double threshold = 0.5;
    std::uint64_t seed = 1;
    bool label_first_only = false; // keep only the first labeled statement

    static PipelineConfig load(const std::string& path);
    static PipelineConfig parse(const std::string& text);
    std::string to_string() const;

    // Stage artifact locations inside the work directory.
    std::string candidates_path() const { return work_dir + "/candidates.tsv"; }
    std::string ir_index_path() const { return work_dir + "/ir_index.txt"; }
    std::string corpus_path() const { return work_dir + "/corpus.txt"; }
    std::string labeled_path() const { return work_dir + "/labeled.txt"; }
    std::string embedding_path() const { return work_dir + "/embedding.txt"; }
    std::string dataset_path() const { return work_dir + "/dataset.txt"; }
    std::string model_path() const { return work_dir + "/model.txt"; }
    std::string report_path() const { return work_dir + "/report.txt"; }
    std::string summary_path() const { return work_dir + "/summary.tsv"; }
    std::string manifest_path() const { return work_dir + "/manifest.txt"; }
};

} // namespace vulnloc
