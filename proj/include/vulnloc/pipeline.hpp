#pragma once

#include <string>
#include <vector>

#include "vulnloc/config.hpp"

namespace vulnloc {

enum class Phase { All, Train, Test };

// Individual pipeline stages over explicit paths. Each writes its artifact
// and returns the output path list for the run manifest.
std::vector<std::string> run_extract(const std::string& source_dir, const std::string& api_list,
                                     const std::string& out_path);
std::vector<std::string> run_ingest(const std::string& ir_dir, const std::string& out_path);
std::vector<std::string> run_slice(const std::string& candidates_path,
                                   const std::string& index_path, const std::string& out_path,
                                   const std::string& dump_graph_path = {});
std::vector<std::string> run_label(const std::string& corpus_path, const std::string& truth_dir,
                                   const std::string& out_path, bool first_only = false);
std::vector<std::string> run_encode(const PipelineConfig& cfg, const std::string& corpus_path,
                                    const std::string& embedding_path,
                                    const std::string& dataset_path);
std::vector<std::string> run_train(const PipelineConfig& cfg, const std::string& dataset_path,
                                   const std::string& embedding_path,
                                   const std::string& model_path);
std::vector<std::string> run_detect(const PipelineConfig& cfg, const std::string& model_path,
                                    const std::string& dataset_path,
                                    const std::string& embedding_path,
                                    const std::string& report_path);
std::vector<std::string> run_eval(const std::string& report_path,
                                  const std::string& labeled_corpus_path,
                                  const std::string& out_path);

// Runs a named stage with manifest bookkeeping; errors name the missing
// upstream stage.
void run_stage(const std::string& name, const PipelineConfig& cfg);

// Learning phase: extract, ingest-ir, slice, label, encode, train.
// Testing phase: extract, ingest-ir, slice, encode, detect (plus eval when a
// truth directory is configured).
void run_pipeline(const PipelineConfig& cfg, Phase phase);

// Human-readable provenance chain for one candidate id.
std::string explain_candidate(const PipelineConfig& cfg, const std::string& id);

} // namespace vulnloc
